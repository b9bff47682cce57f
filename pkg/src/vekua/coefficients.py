"""Equation data: singular points, coefficient fields and weighted norms.

The equation is ``du/dzbar = (A/L) u + (B/L) conj(u) + F`` with
``L(z) = prod_j (z - z_j)``. Near each ``z_j`` the coefficients satisfy
``A(z_j + r e^{it}) = p_j(t) + r^tau_j * (bounded)`` and likewise ``B`` with
``q_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import GeometryError, NonFiniteError, PoleError, SpecError
from .grid import Domain, Grid, GridField, check_finite

MIN_PROFILE_SAMPLES = 64


class PeriodicProfile:
    """Uniform samples of a ``2 pi``-periodic function on ``[0, 2 pi)``.

    Evaluation between samples uses the trigonometric interpolant, which
    is spectrally accurate for smooth profiles.
    """

    def __init__(self, samples):
        samples = np.asarray(samples, dtype=complex).ravel()
        if samples.size < 2:
            raise SpecError("profile needs at least two samples")
        self.samples = samples
        self.samples.setflags(write=False)

    def __len__(self):
        return self.samples.size

    def __repr__(self):
        return f"PeriodicProfile(n={self.samples.size})"

    @property
    def thetas(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.samples.size) / self.samples.size

    @classmethod
    def from_function(cls, fn: Callable, n: int = 128) -> "PeriodicProfile":
        t = 2 * np.pi * np.arange(n) / n
        return cls(np.broadcast_to(np.asarray(fn(t), dtype=complex), t.shape))

    @classmethod
    def from_fourier(cls, coefficients: dict, n: int = 128) -> "PeriodicProfile":
        """Profile ``sum_k c_k e^{ikt}`` from ``{k: c_k}``."""
        t = 2 * np.pi * np.arange(n) / n
        vals = np.zeros(n, dtype=complex)
        for k, c in coefficients.items():
            vals += complex(c) * np.exp(1j * int(k) * t)
        return cls(vals)

    @classmethod
    def constant(cls, c, n: int = 128) -> "PeriodicProfile":
        return cls(np.full(n, complex(c)))

    def modes(self):
        """Integer wavenumbers and coefficients of the interpolant."""
        n = self.samples.size
        c = np.fft.fft(self.samples) / n
        k = np.fft.fftfreq(n, d=1.0 / n).astype(int)
        return k, c

    def __call__(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        n = self.samples.size
        k, c = self.modes()
        if n % 2 == 0:
            # split the Nyquist mode symmetrically so the interpolant is real for real data
            nyq = np.flatnonzero(np.abs(k) == n // 2)[0]
            k = np.append(k, n // 2)
            k[nyq] = -n // 2
            c = np.append(c, c[nyq] / 2)
            c[nyq] /= 2
        flat = theta.ravel()
        out = np.zeros(flat.shape, dtype=complex)
        for start in range(0, flat.size, 4096):
            t = flat[start:start + 4096]
            out[start:start + 4096] = np.exp(1j * np.outer(t, k)) @ c
        return out.reshape(theta.shape)

    def derivative(self) -> "PeriodicProfile":
        k, c = self.modes()
        n = self.samples.size
        if n % 2 == 0:
            c = c.copy()
            c[np.abs(k) == n // 2] = 0
        return PeriodicProfile(np.fft.ifft(1j * k * c) * n)

    def mean(self) -> complex:
        return complex(np.mean(self.samples))

    def __mul__(self, other):
        if isinstance(other, PeriodicProfile):
            return PeriodicProfile(self.samples * other.samples)
        return PeriodicProfile(self.samples * other)

    __rmul__ = __mul__


def _as_profile(p) -> PeriodicProfile:
    return p if isinstance(p, PeriodicProfile) else PeriodicProfile(p)


def compute_gamma(profile) -> complex:
    """``(1/pi) int_0^{2pi} e^{-2it} p(t) dt`` by the periodic trapezoid rule."""
    p = _as_profile(profile)
    t = p.thetas
    return complex(2.0 * np.mean(np.exp(-2j * t) * p.samples))


def smooth_step(t):
    """C-infinity bump profile: 1 for ``t <= 1``, 0 for ``t >= 2``."""
    t = np.asarray(t, dtype=float)

    def psi(s):
        out = np.zeros_like(s)
        pos = s > 0
        out[pos] = np.exp(-1.0 / s[pos])
        return out

    a, b = psi(2.0 - t), psi(t - 1.0)
    return a / (a + b)


def smooth_step_derivative(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    mid = (t > 1) & (t < 2)
    s1, s2 = 2.0 - t[mid], t[mid] - 1.0
    a, b = np.exp(-1.0 / s1), np.exp(-1.0 / s2)
    da = -a / s1**2          # d/dt psi(2 - t)
    db = b / s2**2           # d/dt psi(t - 1)
    out[mid] = (da * (a + b) - a * (da + db)) / (a + b) ** 2
    return out


@dataclass(frozen=True)
class SingularPoint:
    """A zero ``z_j`` of ``L`` with the angular profiles of ``A`` and ``B``."""

    location: complex
    tau: float = 0.5
    delta: float = 0.2
    p_profile: PeriodicProfile = field(default_factory=lambda: PeriodicProfile.constant(0))
    q_profile: PeriodicProfile = field(default_factory=lambda: PeriodicProfile.constant(0))
    gamma_eff: complex | None = None

    def __post_init__(self):
        object.__setattr__(self, "location", complex(self.location))
        object.__setattr__(self, "p_profile", _as_profile(self.p_profile))
        object.__setattr__(self, "q_profile", _as_profile(self.q_profile))
        if not 0 < self.tau < 1:
            raise SpecError(f"tau must lie in (0, 1), got {self.tau}")
        if self.delta <= 0:
            raise SpecError("delta must be positive")
        if len(self.p_profile) != len(self.q_profile) or len(self.p_profile) < MIN_PROFILE_SAMPLES:
            raise SpecError(
                f"profiles need equal lengths of at least {MIN_PROFILE_SAMPLES} samples")

    @property
    def gamma(self) -> complex:
        return compute_gamma(self.p_profile)


def _locations(points) -> list[complex]:
    return [p.location if isinstance(p, SingularPoint) else complex(p) for p in points]


def eval_L(points, z, power: int = 1):
    """``L(z)**power`` with ``L(z) = prod_j (z - z_j)``."""
    z = np.asarray(z, dtype=complex)
    out = np.ones_like(z)
    for zj in _locations(points):
        out = out * (z - zj)
    return out**power if power != 1 else out


def smooth_factor(points, j: int, z):
    """``prod_{k != j} (z - z_k)``, the part of ``L`` regular at ``z_j``."""
    locs = _locations(points)
    z = np.asarray(z, dtype=complex)
    out = np.ones_like(z)
    for k, zk in enumerate(locs):
        if k != j:
            out = out * (z - zk)
    return out


def eval_M(points, z, gammas: Sequence[complex] | None = None):
    """``prod_j |z - z_j|**gamma_j`` evaluated as ``exp(sum gamma_j log|z - z_j|)``."""
    locs = _locations(points)
    if gammas is None:
        gammas = [p.gamma for p in points]
    z = np.asarray(z, dtype=complex)
    logsum = np.zeros(z.shape, dtype=complex)
    zero = np.zeros(z.shape, dtype=bool)
    for zj, g in zip(locs, gammas):
        if g == 0:
            continue
        r = np.abs(z - zj)
        at = r == 0
        if np.any(at):
            if g.real <= 0:
                raise PoleError(f"M has a pole or no limit at z = {zj} (gamma = {g})")
            zero |= at
        with np.errstate(divide="ignore"):
            logsum = logsum + g * np.log(np.where(at, 1.0, r))
    out = np.exp(logsum)
    out[zero] = 0
    return out


def effective_gammas(points) -> list[complex]:
    """``gamma_j / prod_{k != j}(z_j - z_k)``: the logarithmic coefficient of ``w``."""
    locs = _locations(points)
    return [p.gamma / complex(smooth_factor(locs, j, locs[j])) for j, p in enumerate(points)]


class CoefficientField:
    """A coefficient ``A``, ``B`` or ``F`` evaluable at complex points.

    ``kind`` is one of ``"callable"``, ``"expression"``, ``"samples"`` or
    ``"profile+remainder"``; ``source`` keeps the serialisable description.
    """

    def __init__(self, fn: Callable, kind: str = "callable", source=None):
        self._fn = fn
        self.kind = kind
        self.source = source

    def __repr__(self):
        return f"CoefficientField(kind={self.kind!r})"

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return np.broadcast_to(np.asarray(self._fn(z), dtype=complex), z.shape).copy()

    def on(self, grid: Grid) -> GridField:
        return GridField(grid, self(grid.nodes))

    @property
    def is_zero(self) -> bool:
        return self.kind == "constant" and self.source == 0

    @classmethod
    def constant(cls, c) -> "CoefficientField":
        c = complex(c)
        return cls(lambda z: np.full(np.shape(z), c), kind="constant", source=c)

    @classmethod
    def zero(cls) -> "CoefficientField":
        return cls.constant(0)

    @classmethod
    def from_samples(cls, f: GridField) -> "CoefficientField":
        """Raw node samples; evaluation is only defined on the grid's own nodes."""
        grid = f.grid
        lookup = {complex(z): k for k, z in enumerate(grid.nodes)}
        values = f.values.copy()

        def fn(z):
            if z.shape == grid.nodes.shape and np.array_equal(z, grid.nodes):
                return values
            try:
                idx = np.array([lookup[complex(w)] for w in z.ravel()], dtype=int)
            except KeyError as exc:
                raise SpecError(f"sampled coefficient has no value at {exc.args[0]}") from None
            return values[idx].reshape(z.shape)

        return cls(fn, kind="samples", source=f)

    @classmethod
    def profile_remainder(cls, points: Sequence[SingularPoint], which: str = "p",
                          remainder: Callable | None = None,
                          background: Callable | None = None, source=None):
        """``sum_j chi_j (profile_j(theta_j) + r_j**tau_j R(z)) + (1 - sum chi_j) G(z)``.

        ``chi_j`` is the smooth cutoff equal to 1 on ``D(z_j, delta_j)`` and 0
        outside ``D(z_j, 2 delta_j)``, so condition (1) holds on the inner disc
        with the remainder bounded by ``max |R|``.
        """
        pts = list(points)

        def fn(z):
            out = np.zeros(z.shape, dtype=complex)
            total = np.zeros(z.shape)
            for p in pts:
                d = z - p.location
                r = np.abs(d)
                chi = smooth_step(r / p.delta)
                if not np.any(chi):
                    continue
                prof = p.p_profile if which == "p" else p.q_profile
                theta = np.mod(np.angle(d), 2 * np.pi)
                local = prof(theta)
                if remainder is not None:
                    local = local + r**p.tau * np.asarray(remainder(z), dtype=complex)
                out += chi * local
                total += chi
            if background is not None:
                out += (1 - total) * np.asarray(background(z), dtype=complex)
            return out

        return cls(fn, kind="profile+remainder", source=source)


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Domain, singular points, coefficients, weight exponent ``m`` and ``p``."""

    domain: Domain
    points: tuple
    A: CoefficientField = field(default_factory=CoefficientField.zero)
    B: CoefficientField = field(default_factory=CoefficientField.zero)
    F: CoefficientField = field(default_factory=CoefficientField.zero)
    m: int = 1
    p: float = 4.0

    def __post_init__(self):
        pts = tuple(self.points)
        if self.p <= 2:
            raise SpecError(f"p must exceed 2, got {self.p}")
        if int(self.m) != self.m or self.m < 0:
            raise SpecError("m must be a non-negative integer")
        locs = _locations(pts)
        for j, p in enumerate(pts):
            if float(self.domain.boundary_distance(p.location)) < max(2 * p.delta, self.domain.margin):
                raise GeometryError(
                    f"disc D(z_{j + 1}, 2 delta) is not inside the domain")
            for k in range(j):
                if abs(locs[j] - locs[k]) < 2 * (p.delta + pts[k].delta):
                    raise GeometryError(
                        f"discs around points {k + 1} and {j + 1} overlap")
        geff = effective_gammas(pts) if pts else []
        pts = tuple(replace(p, gamma_eff=g) for p, g in zip(pts, geff))
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "m", int(self.m))

    @property
    def q(self) -> float:
        return self.p / (self.p - 1)

    @property
    def locations(self) -> list[complex]:
        return _locations(self.points)

    def with_(self, **changes) -> "ProblemSpec":
        return replace(self, **changes)


def weighted_norm_E(f: GridField, m: int, p: float, points=None) -> float:
    """``|| f / L^m ||_{L^p}`` by quadrature."""
    check_finite(f)
    pts = f.grid.points if points is None else points
    g = f.values / eval_L(pts, f.grid.nodes, m) if m else f.values
    return _lp(np.abs(g), f.grid.weights, p)


def weighted_norm_X(f: GridField, m: int, q: float, points=None) -> float:
    """``|| L^m f ||_{L^q}`` by quadrature."""
    check_finite(f)
    pts = f.grid.points if points is None else points
    g = f.values * eval_L(pts, f.grid.nodes, m) if m else f.values
    return _lp(np.abs(g), f.grid.weights, q)


def _lp(a, w, p):
    if p < 1:
        raise ValueError("norm exponent must be at least 1")
    if not np.all(np.isfinite(a)):
        k = int(np.argmax(~np.isfinite(a)))
        raise NonFiniteError(f"weighted integrand is not finite at node {k}", node=k)
    if math.isinf(p):
        return float(np.max(a)) if a.size else 0.0
    scale = float(np.max(a)) if a.size else 0.0
    if scale == 0:
        return 0.0
    return scale * float(np.dot((a / scale) ** p, w)) ** (1.0 / p)


@dataclass
class ConditionReport:
    """Ratios ``max_t |coef(z_j + r e^{it}) - profile(t)| / r^tau_j``."""

    entries: list
    constant: float
    passed: bool

    def as_dict(self):
        return {"constant": self.constant, "passed": self.passed, "entries": self.entries}


def verify_condition(spec: ProblemSpec, radii=(1e-2, 1e-4), constant: float = 10.0,
                     n_theta: int = 256, growth_tol: float = 0.1) -> ConditionReport:
    """Check the angular-profile-plus-Hoelder-remainder structure of ``A`` and ``B``.

    A coefficient passes at a point when the ratio is at most ``constant``
    at both radii and does not grow faster than ``r**(-growth_tol)``
    between them.
    """
    t = 2 * np.pi * np.arange(n_theta) / n_theta
    entries = []
    ok_all = True
    for j, pt in enumerate(spec.points):
        for name, coef, prof in (("A", spec.A, pt.p_profile), ("B", spec.B, pt.q_profile)):
            ratios = []
            for r in radii:
                if r >= pt.delta:
                    raise SpecError(f"sample radius {r} is not below delta = {pt.delta}")
                vals = coef(pt.location + r * np.exp(1j * t))
                ratios.append(float(np.max(np.abs(vals - prof(t)))) / r**pt.tau)
            bounded = all(x <= constant for x in ratios)
            r_big, r_small = max(radii), min(radii)
            x_big = ratios[list(radii).index(r_big)]
            x_small = ratios[list(radii).index(r_small)]
            growth = 0.0
            if x_big > 1e-14 and x_small > 1e-14:
                growth = math.log(x_small / x_big) / math.log(r_big / r_small)
            ok = bounded and growth <= growth_tol
            ok_all &= ok
            entries.append({"point": j + 1, "coefficient": name, "radii": list(radii),
                            "ratios": ratios, "growth_exponent": growth, "passed": ok})
    return ConditionReport(entries, constant, ok_all)
