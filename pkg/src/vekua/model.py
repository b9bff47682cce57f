"""Exponents of the model equation ``dv/dzbar = q(theta) conj(v) / r``.

Separating ``v = r**lam f(theta)`` gives the real-linear periodic ODE

    f'(theta) = i lam f - 2 i e^{-i theta} q(theta) conj(f)

whose matrix on ``(Re f, Im f)`` is trace free, so the monodromy ``M(lam)``
over one period lies in ``SL(2, R)``. Periodic profiles exist exactly when
``det(M - I) = 2 - tr M`` vanishes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np
from scipy import optimize

from .coefficients import PeriodicProfile, smooth_factor
from .grid import Grid, GridField

log = logging.getLogger(__name__)


@nb.njit(cache=True)
def _rk4_fundamental(lams, kr, ki, steps):
    """Fundamental matrices over ``[0, 2 pi]`` for every ``lam``.

    ``kr, ki`` hold ``kappa = -2i e^{-i t} q(t)`` at the half-step nodes
    ``t = j pi / steps``, ``j = 0 .. 2 steps``.
    """
    h = 2.0 * math.pi / steps
    out = np.empty((lams.shape[0], 2, 2))
    for n in range(lams.shape[0]):
        lam = lams[n]
        y00, y01, y10, y11 = 1.0, 0.0, 0.0, 1.0
        for s in range(steps):
            k1 = np.empty(4)
            k2 = np.empty(4)
            k3 = np.empty(4)
            k4 = np.empty(4)
            for stage in range(4):
                if stage == 0:
                    j = 2 * s
                    a0, a1, b0, b1 = y00, y01, y10, y11
                elif stage == 1:
                    j = 2 * s + 1
                    a0 = y00 + 0.5 * h * k1[0]
                    a1 = y01 + 0.5 * h * k1[1]
                    b0 = y10 + 0.5 * h * k1[2]
                    b1 = y11 + 0.5 * h * k1[3]
                elif stage == 2:
                    j = 2 * s + 1
                    a0 = y00 + 0.5 * h * k2[0]
                    a1 = y01 + 0.5 * h * k2[1]
                    b0 = y10 + 0.5 * h * k2[2]
                    b1 = y11 + 0.5 * h * k2[3]
                else:
                    j = 2 * s + 2
                    a0 = y00 + h * k3[0]
                    a1 = y01 + h * k3[1]
                    b0 = y10 + h * k3[2]
                    b1 = y11 + h * k3[3]
                # A = [[kr, ki - lam], [ki + lam, -kr]]
                m00 = kr[j]
                m01 = ki[j] - lam
                m10 = ki[j] + lam
                m11 = -kr[j]
                d0 = m00 * a0 + m01 * b0
                d1 = m00 * a1 + m01 * b1
                d2 = m10 * a0 + m11 * b0
                d3 = m10 * a1 + m11 * b1
                if stage == 0:
                    k1[0], k1[1], k1[2], k1[3] = d0, d1, d2, d3
                elif stage == 1:
                    k2[0], k2[1], k2[2], k2[3] = d0, d1, d2, d3
                elif stage == 2:
                    k3[0], k3[1], k3[2], k3[3] = d0, d1, d2, d3
                else:
                    k4[0], k4[1], k4[2], k4[3] = d0, d1, d2, d3
            y00 += h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            y01 += h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
            y10 += h / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
            y11 += h / 6.0 * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3])
        out[n, 0, 0] = y00
        out[n, 0, 1] = y01
        out[n, 1, 0] = y10
        out[n, 1, 1] = y11
    return out


@nb.njit(cache=True)
def _rk4_trajectory(lam, f0, kr, ki, steps, stride):
    h = 2.0 * math.pi / steps
    out = np.empty(steps // stride, dtype=np.complex128)
    a, b = f0.real, f0.imag
    for s in range(steps):
        if s % stride == 0:
            out[s // stride] = complex(a, b)
        ks = np.empty((4, 2))
        for stage in range(4):
            if stage == 0:
                j, x, y = 2 * s, a, b
            elif stage == 3:
                j, x, y = 2 * s + 2, a + h * ks[2, 0], b + h * ks[2, 1]
            else:
                j = 2 * s + 1
                x = a + 0.5 * h * ks[stage - 1, 0]
                y = b + 0.5 * h * ks[stage - 1, 1]
            ks[stage, 0] = kr[j] * x + (ki[j] - lam) * y
            ks[stage, 1] = (ki[j] + lam) * x - kr[j] * y
        a += h / 6.0 * (ks[0, 0] + 2 * ks[1, 0] + 2 * ks[2, 0] + ks[3, 0])
        b += h / 6.0 * (ks[0, 1] + 2 * ks[1, 1] + 2 * ks[2, 1] + ks[3, 1])
    return out


def _kappa(q_profile: PeriodicProfile, steps: int):
    t = np.pi * np.arange(2 * steps + 1) / steps
    kappa = -2j * np.exp(-1j * t) * q_profile(t)
    return np.ascontiguousarray(kappa.real), np.ascontiguousarray(kappa.imag)


def monodromy(lam, q_profile, steps: int = 2048) -> np.ndarray:
    """Real ``2 x 2`` monodromy matrix of the angular ODE (batched over ``lam``)."""
    q = q_profile if isinstance(q_profile, PeriodicProfile) else PeriodicProfile(q_profile)
    kr, ki = _kappa(q, steps)
    lams = np.atleast_1d(np.asarray(lam, dtype=float))
    out = _rk4_fundamental(lams, kr, ki, steps)
    return out[0] if np.ndim(lam) == 0 else out


@dataclass
class ModelSpectrum:
    """Positive exponents ``lam_k`` with their periodic profiles ``f_k``.

    ``profiles[k]`` holds one profile, or two orthonormalised ones when the
    monodromy equals the identity (multiplicity 2).
    """

    q_profile: PeriodicProfile
    exponents: np.ndarray
    profiles: list
    multiplicities: list
    residuals: list
    steps: int = 2048
    lambda_max: float = 0.0

    def __len__(self):
        return len(self.exponents)

    def profile(self, k: int, which: int = 0) -> PeriodicProfile:
        return self.profiles[k][which]

    def smallest_at_least(self, a: float) -> int:
        idx = np.flatnonzero(self.exponents >= a)
        if idx.size == 0:
            raise ValueError(
                f"no exponent >= {a} below lambda_max = {self.lambda_max}; increase lambda_max")
        return int(idx[0])

    def as_dict(self) -> dict:
        return {
            "exponents": [float(x) for x in self.exponents],
            "multiplicities": list(self.multiplicities),
            "monodromy_residuals": [float(x) for x in self.residuals],
            "min_profile_modulus": [float(np.min(np.abs(p[0].samples))) for p in self.profiles],
            "lambda_max": self.lambda_max,
            "steps": self.steps,
        }


def _identity_gap(lam, q, steps):
    M = monodromy(lam, q, steps)
    return float(np.max(np.abs(M - np.eye(2))))


def _refine(lo, hi, q, steps, g_of):
    """Roots of ``2 - tr M`` inside ``[lo, hi]`` around a tangency candidate."""
    Ma, Mb = monodromy(np.array([lo, hi]), q, steps)
    da, db = (Ma - np.eye(2)).ravel(), (Mb - np.eye(2)).ravel()
    order = np.argsort(-np.abs(db - da))
    for e in order:
        if da[e] * db[e] < 0:
            r = optimize.brentq(lambda x: (monodromy(x, q, steps) - np.eye(2)).ravel()[e],
                                lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)
            if _identity_gap(r, q, steps) < 1e-7:
                return [r]
            break
    res = optimize.minimize_scalar(g_of, bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-13})
    if res.fun < 0:
        roots = []
        for a, b in ((lo, res.x), (res.x, hi)):
            if g_of(a) * g_of(b) < 0:
                roots.append(optimize.brentq(g_of, a, b, xtol=1e-14))
        return roots
    if abs(res.fun) <= 1e-10:
        return [res.x]
    return []


def find_exponents(q_profile, lambda_max: float, step: float = 0.01, steps: int = 2048,
                   lambda_min: float = 1e-6) -> ModelSpectrum:
    """Scan ``g(lam) = det(M(lam) - I)`` and refine every root.

    Sign changes are refined with Brent's method on ``g``; local minima
    (tangential roots, typically ``M = I``) with Brent's method on the
    entry of ``M - I`` that changes sign, falling back to bounded
    minimisation of ``g``.
    """
    q = q_profile if isinstance(q_profile, PeriodicProfile) else PeriodicProfile(q_profile)
    if lambda_max <= 0:
        raise ValueError("lambda_max must be positive")
    nsamp = len(q)
    if steps % nsamp:
        steps = nsamp * math.ceil(steps / nsamp)
    kr, ki = _kappa(q, steps)

    def g_of(x):
        M = _rk4_fundamental(np.array([float(x)]), kr, ki, steps)[0]
        return 2.0 - (M[0, 0] + M[1, 1])

    grid = np.arange(lambda_min, lambda_max + step, step)
    grid = grid[grid <= lambda_max + 1e-12]
    Ms = _rk4_fundamental(grid, kr, ki, steps)
    g = 2.0 - (Ms[:, 0, 0] + Ms[:, 1, 1])
    roots = []
    for i in range(len(grid) - 1):
        if g[i] == 0:
            roots.append(grid[i])
        elif g[i] * g[i + 1] < 0:
            roots.append(optimize.brentq(g_of, grid[i], grid[i + 1], xtol=1e-14))
    for i in range(1, len(grid) - 1):
        if abs(g[i]) <= abs(g[i - 1]) and abs(g[i]) <= abs(g[i + 1]) \
                and g[i - 1] * g[i] > 0 and g[i] * g[i + 1] > 0:
            roots += _refine(grid[i - 1], grid[i + 1], q, steps, g_of)
    roots = sorted(r for r in roots if lambda_min <= r <= lambda_max)
    merged = []
    for r in roots:
        if merged and abs(r - merged[-1]) < 1e-8:
            continue
        merged.append(r)

    exps, profs, mults, resid = [], [], [], []
    stride = steps // nsamp
    for lam in merged:
        M = monodromy(lam, q, steps)
        gap = float(np.max(np.abs(M - np.eye(2))))
        if gap < 1e-7:
            starts = [1.0 + 0j, 1j]
        else:
            _, _, vt = np.linalg.svd(M - np.eye(2))
            v = vt[-1]
            starts = [complex(v[0], v[1])]
        fs = []
        for f0 in starts:
            traj = _rk4_trajectory(lam, np.complex128(f0), kr, ki, steps, stride)
            if np.min(np.abs(traj)) < 1e-12:
                raise AssertionError(f"profile for lambda = {lam} vanishes")
            fs.append(PeriodicProfile(traj))
        if len(fs) == 2:
            fs = _orthonormalise(fs)
        exps.append(lam)
        profs.append(fs)
        mults.append(len(fs))
        resid.append(abs(2.0 - np.trace(M)))
    if not exps:
        log.warning("no model exponents in (0, %g]", lambda_max)
    return ModelSpectrum(q, np.array(exps), profs, mults, resid, steps, float(lambda_max))


def _orthonormalise(fs):
    """Gram-Schmidt for the real inner product ``Re mean(f conj(g))``."""
    out = []
    for f in fs:
        v = f.samples.astype(complex)
        for e in out:
            v = v - np.real(np.mean(v * np.conj(e.samples))) * e.samples
        v = v / math.sqrt(np.real(np.mean(v * np.conj(v))))
        out.append(PeriodicProfile(v))
    return out


def model_values(spectrum: ModelSpectrum, k: int, z, center: complex = 0j, which: int = 0):
    """``|z - c|**lam_k f_k(arg(z - c))``, zero at the centre."""
    z = np.asarray(z, dtype=complex)
    d = z - center
    r = np.abs(d)
    theta = np.mod(np.angle(d), 2 * np.pi)
    out = r ** spectrum.exponents[k] * spectrum.profile(k, which)(theta)
    out[r == 0] = 0
    return out


def model_solution(spectrum: ModelSpectrum, k: int, center: complex, grid: Grid,
                   which: int = 0) -> GridField:
    return GridField(grid, model_values(spectrum, k, grid.nodes, center, which))


def model_dbar(spectrum: ModelSpectrum, k: int, z, center: complex = 0j, which: int = 0):
    """Analytic ``d/dzbar`` of the model solution using the spectral derivative of ``f_k``."""
    z = np.asarray(z, dtype=complex)
    d = z - center
    r = np.abs(d)
    theta = np.mod(np.angle(d), 2 * np.pi)
    lam = spectrum.exponents[k]
    f = spectrum.profile(k, which)
    df = f.derivative()
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 0.5 * np.exp(1j * theta) * r ** (lam - 1) * (lam * f(theta) + 1j * df(theta))
    out[r == 0] = 0
    return out


def effective_model_profile(points, j: int, q_profile: PeriodicProfile) -> PeriodicProfile:
    """Angular profile ``q`` with ``B / L ~ q(theta) / r`` near ``z_j``.

    ``B / L = q_B(theta) / ((z - z_j) prod_{k != j}(z_j - z_k)) + O(r^{tau - 1})``,
    so the model profile is ``e^{-i theta} q_B(theta) / prod_{k != j}(z_j - z_k)``.
    """
    locs = [p.location if hasattr(p, "location") else complex(p) for p in points]
    scale = complex(smooth_factor(locs, j, locs[j]))
    t = q_profile.thetas
    return PeriodicProfile(np.exp(-1j * t) * q_profile.samples / scale)


def closed_form_constant(c: float, m: int) -> float:
    """Positive root of ``(lam - m)(lam + m + 1) = 4|c|^2`` (two-mode ansatz for ``q = c``)."""
    return 0.5 * (-1 + math.sqrt(1 + 4 * m * (m + 1) + 16 * abs(c) ** 2))
