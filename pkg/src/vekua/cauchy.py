"""Area Cauchy transforms: the Pompeiu operator, ``T_{L,m}`` and its adjoint.

All transforms reduce to the discrete Pompeiu sum

    Pi g(z) = -(1/pi) sum_k c_k(z) g_k,   c_k(z) ~ int_{cell k} dA / (zeta - z)

with ``c_k(z) = w_k / (zeta_k - z)`` for far cells. Cells containing the
target are either skipped (``self_cell="skip"``) or, together with all
cells within ``near`` circumradii, integrated exactly with the polygon
formula (``self_cell="corrected"``).
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .coefficients import ProblemSpec, eval_L, weighted_norm_E, weighted_norm_X
from .errors import NonFiniteError
from .grid import Grid, GridField


@dataclass(frozen=True)
class TransformOptions:
    excision_factor: float = 2.0
    self_cell: str = "skip"
    near: float = 2.0

    def __post_init__(self):
        if self.excision_factor < 1:
            raise ValueError("excision factor must be at least 1")
        if self.self_cell not in ("skip", "corrected"):
            raise ValueError(f"unknown self-cell rule {self.self_cell!r}")

    @property
    def mode(self) -> int:
        return _kernels.CORRECTED if self.self_cell == "corrected" else _kernels.SKIP


DEFAULT_OPTIONS = TransformOptions()

_geometry_cache: "weakref.WeakKeyDictionary[Grid, tuple]" = weakref.WeakKeyDictionary()


def _geometry(grid: Grid):
    geo = _geometry_cache.get(grid)
    if geo is None:
        polys = np.ascontiguousarray(grid.polygons)
        has = np.all(np.isfinite(polys), axis=1)
        radius = np.zeros(grid.size)
        radius[has] = np.max(np.abs(polys[has] - grid.nodes[has, None]), axis=1)
        polys = np.where(np.isfinite(polys), polys, 0)
        geo = (np.ascontiguousarray(grid.nodes), np.ascontiguousarray(grid.weights),
               polys, has, radius)
        _geometry_cache[grid] = geo
    return geo


def cauchy_sum(grid: Grid, values, targets=None, options: TransformOptions = DEFAULT_OPTIONS):
    """Discrete ``-(1/pi) int g(zeta) / (zeta - z) dA`` at ``targets`` (default: nodes)."""
    nodes, weights, polys, has, radius = _geometry(grid)
    t = nodes if targets is None else np.ascontiguousarray(np.atleast_1d(targets), dtype=complex)
    vals = np.ascontiguousarray(values, dtype=complex)
    raw = _kernels.cauchy_apply(t, nodes, weights, polys, has, radius, vals,
                                options.mode, float(options.near))
    return -raw / np.pi


def cauchy_sum_subset(grid: Grid, index, values, options: TransformOptions = DEFAULT_OPTIONS):
    """:func:`cauchy_sum` with sources and targets restricted to the nodes ``index``."""
    nodes, weights, polys, has, radius = _geometry(grid)
    idx = np.asarray(index)
    sub = np.ascontiguousarray(nodes[idx])
    raw = _kernels.cauchy_apply(sub, sub, np.ascontiguousarray(weights[idx]),
                                np.ascontiguousarray(polys[idx]), np.ascontiguousarray(has[idx]),
                                np.ascontiguousarray(radius[idx]),
                                np.ascontiguousarray(values, dtype=complex),
                                options.mode, float(options.near))
    return -raw / np.pi


def cauchy_matrix(grid: Grid, options: TransformOptions = DEFAULT_OPTIONS) -> np.ndarray:
    """Dense matrix ``P`` with ``P @ g`` equal to :func:`cauchy_sum` on the nodes."""
    nodes, weights, polys, has, radius = _geometry(grid)
    mat = _kernels.cauchy_matrix(nodes, nodes, weights, polys, has, radius,
                                 options.mode, float(options.near))
    mat *= -1.0 / np.pi
    return mat


def pompeiu(g: GridField, targets=None, options: TransformOptions = DEFAULT_OPTIONS):
    """Cauchy-Pompeiu transform ``Pi g(z) = -(1/pi) int g / (zeta - z) dA``.

    Returns a :class:`GridField` on the nodes, or an array when explicit
    ``targets`` are given. ``d/dzbar (Pi g) = g`` inside the domain.
    """
    if not np.all(np.isfinite(g.values)):
        k = int(np.argmax(~np.isfinite(g.values)))
        raise NonFiniteError(f"Pompeiu integrand is not finite at node {k}", node=k)
    out = cauchy_sum(g.grid, g.values, targets, options)
    if targets is None:
        return GridField(g.grid, out)
    return out


def excision_mask(grid: Grid, options: TransformOptions = DEFAULT_OPTIONS) -> np.ndarray:
    """True for nodes kept in the integrals of ``T`` (outside the excision discs)."""
    keep = np.ones(grid.size, dtype=bool)
    for j, p in enumerate(grid.points):
        keep &= np.abs(grid.nodes - p) >= options.excision_factor * grid.local_size(j)
    return keep


def weight_factors(spec: ProblemSpec, grid: Grid, B=None, options=DEFAULT_OPTIONS):
    """``(L^m, B / L^{m+1} on kept nodes)`` on the grid."""
    L = eval_L(spec.points, grid.nodes)
    Lm = L**spec.m
    Bv = spec.B(grid.nodes) if B is None else np.asarray(B, dtype=complex)
    kern = np.where(excision_mask(grid, options), Bv / (Lm * L), 0)
    return Lm, kern


def apply_T(u: GridField, spec: ProblemSpec, options: TransformOptions = DEFAULT_OPTIONS,
            B=None) -> GridField:
    """``T_{L,m} u(z) = -(L(z)^m / pi) int B conj(u) / (L^{m+1} (zeta - z)) dA``.

    ``T`` is conjugate-linear: ``T(c u) = conj(c) T(u)``.
    """
    grid = u.grid
    Lm, kern = weight_factors(spec, grid, B, options)
    integrand = kern * np.conj(u.values)
    bad = ~np.isfinite(integrand)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise NonFiniteError(f"T integrand is not finite at node {k} (z = {grid.nodes[k]:.6g})",
                             node=k)
    return GridField(grid, Lm * cauchy_sum(grid, integrand, options=options))


def apply_T_star(v: GridField, spec: ProblemSpec, options: TransformOptions = DEFAULT_OPTIONS,
                 B=None) -> GridField:
    """``T* v(zeta) = -(B(zeta) / (pi L(zeta)^{m+1})) int L^m conj(v) / (z - zeta) dA``.

    Adjoint of :func:`apply_T` for the real form ``Re int phi conj(psi)`` up
    to a global sign: with both kernels as written ``<Tu, v> = -<u, T* v>``.
    Nodes excised from the integrals of ``T`` carry zero.
    """
    grid = v.grid
    Lm, kern = weight_factors(spec, grid, B, options)
    integrand = Lm * np.conj(v.values)
    if not np.all(np.isfinite(integrand)):
        k = int(np.argmax(~np.isfinite(integrand)))
        raise NonFiniteError(f"T* integrand is not finite at node {k}", node=k)
    # integration variable is z, so the Pompeiu sum evaluated at zeta is exactly the bracket
    return GridField(grid, kern * cauchy_sum(grid, integrand, options=options))


def build_f(F: GridField, spec: ProblemSpec, options: TransformOptions = DEFAULT_OPTIONS) -> GridField:
    """Particular solution ``f = L^m Pi(F / L^m)`` of ``df/dzbar = F``."""
    grid = F.grid
    norm = weighted_norm_E(F, spec.m, spec.p, spec.points)
    if not np.isfinite(norm):
        raise NonFiniteError("F is not in the weighted space E_{m,p}")
    Lm = eval_L(spec.points, grid.nodes, spec.m)
    return GridField(grid, Lm * cauchy_sum(grid, F.values / Lm, options=options))


def bilinear_form(phi: GridField, psi: GridField) -> float:
    """Real bilinear form ``Re int phi conj(psi) dA``."""
    if phi.grid is not psi.grid:
        raise ValueError("fields live on different grids")
    return float(np.real(np.dot(phi.grid.weights, phi.values * np.conj(psi.values))))


__all__ = [
    "TransformOptions", "pompeiu", "apply_T", "apply_T_star", "build_f", "bilinear_form",
    "cauchy_sum", "cauchy_matrix", "excision_mask", "weight_factors", "weighted_norm_X",
]
