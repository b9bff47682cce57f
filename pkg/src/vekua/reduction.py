"""Elimination of the ``A`` coefficient by the substitution ``u = e^w v``.

``w`` solves ``dw/dzbar = A / L``. Around each singular point the leading
part ``p_j(theta) / ((z - z_j) prod_{k != j}(z_j - z_k))`` is integrated in
closed form,

    zeta_j = gamma_eff_j log|z - z_j| - i int_0^theta phat_j,

and the bounded remainder with the Pompeiu transform. Then
``v = e^{-w} u`` satisfies ``dv/dzbar = (B1/L) conj(v) + F1`` with
``B1 = B e^{conj(w) - w}`` and ``F1 = e^{-w} F``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .cauchy import DEFAULT_OPTIONS, TransformOptions, pompeiu
from .coefficients import (CoefficientField, PeriodicProfile, ProblemSpec, SingularPoint,
                           _locations, eval_L, smooth_factor, smooth_step,
                           smooth_step_derivative)
from .errors import GeometryError
from .grid import Grid, GridField, verification_mask, wirtinger_dbar

log = logging.getLogger(__name__)


def _deltas(points, delta):
    if np.ndim(delta) == 0:
        return [float(delta)] * len(points)
    if len(delta) != len(points):
        raise ValueError("need one cutoff radius per point")
    return [float(d) for d in delta]


def check_disjoint(points, delta, domain=None):
    """Raise :class:`GeometryError` unless the discs ``D(z_j, 2 delta_j)`` are disjoint."""
    locs = _locations(points)
    ds = _deltas(points, delta)
    for j in range(len(locs)):
        if domain is not None and float(domain.boundary_distance(locs[j])) < 2 * ds[j]:
            raise GeometryError(f"disc D(z_{j + 1}, {2 * ds[j]:g}) leaves the domain")
        for k in range(j):
            if abs(locs[j] - locs[k]) < 2 * (ds[j] + ds[k]):
                raise GeometryError(f"cutoff discs around points {k + 1} and {j + 1} overlap")


def cutoff_values(points, delta, z):
    """``phi_1 .. phi_N`` at ``z`` (array of shape ``(N,) + z.shape``)."""
    z = np.asarray(z, dtype=complex)
    locs = _locations(points)
    ds = _deltas(points, delta)
    return np.array([smooth_step(np.abs(z - c) / d) for c, d in zip(locs, ds)]).reshape(
        (len(locs),) + z.shape)


def cutoff_dbar(points, delta, z):
    """Analytic ``d phi_j / dzbar = beta'(r / delta) (z - z_j) / (2 delta r)``."""
    z = np.asarray(z, dtype=complex)
    out = []
    for c, d in zip(_locations(points), _deltas(points, delta)):
        dz = z - c
        r = np.abs(dz)
        with np.errstate(invalid="ignore", divide="ignore"):
            g = smooth_step_derivative(r / d) * dz / (2 * d * r)
        out.append(np.where(r > 0, g, 0))
    return np.array(out).reshape((len(out),) + z.shape)


def build_cutoffs(points, delta, grid: Grid) -> list[GridField]:
    """Partition of unity ``[phi_0, phi_1, ..., phi_N]`` on the grid.

    ``phi_j = beta(|z - z_j| / delta_j)`` equals 1 on ``D(z_j, delta_j)``
    and vanishes outside ``D(z_j, 2 delta_j)``; ``phi_0 = 1 - sum phi_j``.
    """
    check_disjoint(points, delta)
    phis = cutoff_values(points, delta, grid.nodes)
    rest = 1.0 - phis.sum(axis=0)
    return [GridField(grid, rest.astype(complex))] + [GridField(grid, p.astype(complex))
                                                      for p in phis]


def phat(point: SingularPoint, points, j: int | None = None) -> PeriodicProfile:
    """Zero-mean part of ``h_j = 2 e^{-2 i theta} p_j(theta) / prod_{k != j}(z_j - z_k)``."""
    locs = _locations(points)
    if j is None:
        j = locs.index(point.location)
    lam = complex(smooth_factor(locs, j, locs[j]))
    t = point.p_profile.thetas
    h = 2 * np.exp(-2j * t) * point.p_profile.samples / lam
    return PeriodicProfile(h - np.mean(h))


def primitive(profile: PeriodicProfile, theta) -> np.ndarray:
    """``int_0^theta profile`` for a zero-mean profile, evaluated spectrally."""
    theta = np.asarray(theta, dtype=float)
    n = len(profile)
    k, c = profile.modes()
    c = c.copy()
    if n % 2 == 0:
        c[np.abs(k) == n // 2] = 0
    keep = k != 0
    k, c = k[keep], c[keep]
    flat = theta.ravel()
    out = np.empty(flat.shape, dtype=complex)
    for s in range(0, flat.size, 4096):
        t = flat[s:s + 4096, None]
        out[s:s + 4096] = ((np.exp(1j * t * k) - 1) / (1j * k)) @ c
    return out.reshape(theta.shape)


def leading_part(points, z) -> np.ndarray:
    """``sum_j p_j(theta_j) / ((z - z_j) prod_{k != j}(z_j - z_k))``."""
    z = np.asarray(z, dtype=complex)
    locs = _locations(points)
    out = np.zeros(z.shape, dtype=complex)
    for j, p in enumerate(points):
        d = z - locs[j]
        lam = complex(smooth_factor(locs, j, locs[j]))
        with np.errstate(divide="ignore", invalid="ignore"):
            out += p.p_profile(np.mod(np.angle(d), 2 * np.pi)) / (d * lam)
    return out


@dataclass(frozen=True, eq=False)
class ReductionResult:
    """Exponent ``w``, its bounded part ``mu`` and the reduced data ``B1, F1``."""

    grid: Grid
    w: GridField
    mu: GridField
    B1: GridField
    F1: GridField
    residual: float
    max_mu: float
    gamma_eff: tuple
    phat: tuple = field(default=())
    tolerance: float | None = None

    @property
    def flagged(self) -> bool:
        return self.tolerance is not None and not self.residual <= self.tolerance

    def report(self) -> dict:
        return {
            "weighted_residual": self.residual,
            "max_abs_mu": self.max_mu,
            "gamma_eff": [[g.real, g.imag] for g in self.gamma_eff],
            "flagged": self.flagged,
        }


def _log_radius_sum(spec: ProblemSpec, z):
    out = np.zeros(np.shape(z), dtype=complex)
    for p in spec.points:
        out += p.gamma_eff * np.log(np.abs(z - p.location))
    return out


def weighted_residual(w: GridField, spec: ProblemSpec, exclusion: float | None = None,
                      margin: float | None = None) -> float:
    """``max |dbar w - A/L| * min_j |z - z_j|`` on verification nodes."""
    grid = w.grid
    mask = verification_mask(grid, exclusion, margin)
    z = grid.nodes[mask]
    target = spec.A(z) / eval_L(spec.points, z)
    dist = np.ones(z.shape)
    if spec.points:
        dist = np.min(np.abs(z[None, :] - np.array(spec.locations)[:, None]), axis=0)
    err = np.abs(wirtinger_dbar(w).values[mask] - target) * dist
    return float(np.max(err)) if err.size else 0.0


def build_w(spec: ProblemSpec, grid: Grid, options: TransformOptions = DEFAULT_OPTIONS,
            tolerance: float | None = None, exclusion: float | None = None) -> ReductionResult:
    """Construct ``w`` with ``dw/dzbar = A/L`` and the reduced coefficients.

    ``exclusion`` fixes the radius around the singular points skipped by the
    residual (default ``4h``); pass a fixed value for refinement studies.
    """
    z = grid.nodes
    Bv = spec.B(z)
    Fv = spec.F(z)
    gammas = tuple(p.gamma_eff for p in spec.points)
    if spec.A.is_zero:
        zero = GridField(grid, np.zeros(grid.size, dtype=complex))
        return ReductionResult(grid, zero, zero, GridField(grid, Bv), GridField(grid, Fv),
                               0.0, 0.0, gammas, (), tolerance)
    locs = spec.locations
    phats = tuple(phat(p, spec.points, j) for j, p in enumerate(spec.points))
    sing = np.zeros(grid.size, dtype=complex)
    for j, p in enumerate(spec.points):
        d = z - locs[j]
        theta = np.mod(np.angle(d), 2 * np.pi)
        sing += p.gamma_eff * np.log(np.abs(d)) - 1j * primitive(phats[j], theta)
    with np.errstate(divide="ignore", invalid="ignore"):
        rhs = spec.A(z) / eval_L(spec.points, z) - leading_part(spec.points, z)
    w0 = pompeiu(GridField(grid, rhs), options=options)
    w = GridField(grid, sing + w0.values)
    mu = GridField(grid, w.values - _log_radius_sum(spec, z))
    B1 = Bv * np.exp(-2j * w.values.imag)
    with np.errstate(over="ignore"):
        F1 = np.exp(-w.values) * Fv
    res = weighted_residual(w, spec, exclusion)
    result = ReductionResult(grid, w, mu, GridField(grid, B1), GridField(grid, F1), res,
                             float(np.max(np.abs(mu.values))), gammas, phats, tolerance)
    if result.flagged:
        log.warning("reduction residual %.3g exceeds tolerance %.3g", res, tolerance)
    return result


def reduce(spec: ProblemSpec, grid: Grid, options: TransformOptions = DEFAULT_OPTIONS,
           **kwargs) -> tuple[ProblemSpec, ReductionResult]:
    """Reduced problem with ``A = 0`` and node-sampled ``B1, F1``."""
    result = build_w(spec, grid, options, **kwargs)
    if spec.A.is_zero:
        return spec, result
    pts = tuple(replace(p, p_profile=PeriodicProfile.constant(0, len(p.p_profile)))
                for p in spec.points)
    reduced = spec.with_(points=pts, A=CoefficientField.zero(),
                         B=CoefficientField.from_samples(result.B1),
                         F=CoefficientField.from_samples(result.F1))
    return reduced, result


def unreduce(v: GridField, result: ReductionResult) -> GridField:
    """``u = e^w v``."""
    if v.grid is not result.grid:
        raise ValueError("field and reduction live on different grids")
    if not np.any(result.w.values):
        return GridField(v.grid, v.values.copy())
    return GridField(v.grid, np.exp(result.w.values) * v.values)


def reduce_field(u: GridField, result: ReductionResult) -> GridField:
    """``v = e^{-w} u``, the inverse of :func:`unreduce`."""
    return GridField(u.grid, np.exp(-result.w.values) * u.values)
