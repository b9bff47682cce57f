"""Nontrivial solutions of ``du/dzbar = (A/L) u + (B/L) conj(u)`` with prescribed vanishing.

Near each ``z_j`` a model solution ``v_j = r^lam f(theta)`` of
``dv/dzbar = q(theta) conj(v) / r`` is corrected multiplicatively,
``W_j = v_j e^{s_j}``, where ``s_j`` is the fixed point of

    s = Pi_D( A/L + (conj(v)/v) ((B/L) e^{conj(s) - s} - q/r) )

on ``D(z_j, 2 eps)``. Then ``W_j`` solves the full equation on the disc and
``|W_j| ~ |v_j|`` because ``s_j`` is bounded. The cut-off sum
``sum phi_j W_j`` fails the equation only on the annuli
``eps < |z - z_j| < 2 eps``; a global solve removes that defect with a
correction vanishing to order ``m``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import linalg as spla

from .cauchy import cauchy_sum_subset
from .coefficients import CoefficientField, ProblemSpec, eval_L
from .errors import SolverError
from .fredholm import SolverOptions, pde_residual, solve_CR
from .grid import Grid, GridField
from .model import ModelSpectrum, effective_model_profile, find_exponents, model_dbar, \
    model_values
from .reduction import check_disjoint, cutoff_dbar, cutoff_values

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class HomogeneousRequest:
    """Target vanishing order ``a``, smoothness ``k`` and glue radius ``eps``.

    ``eps`` defaults to the smallest ``delta_j``. ``correction`` is
    ``"similarity"`` or ``"none"`` (pure model solutions).
    """

    spec: ProblemSpec
    a: float
    k: int = 0
    eps: float | None = None
    correction: str = "similarity"
    lambda_max: float | None = None
    m: int | None = None

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("vanishing order a must be positive")
        if self.k < 0:
            raise ValueError("smoothness k must be non-negative")
        if self.correction not in ("similarity", "none"):
            raise ValueError(f"unknown correction {self.correction!r}")
        if not self.spec.points:
            raise ValueError("the construction needs at least one singular point")
        eps = self.radius
        check_disjoint(self.spec.points, eps, self.spec.domain)

    @property
    def radius(self) -> float:
        return self.eps if self.eps is not None else min(p.delta for p in self.spec.points)

    @property
    def weight(self) -> int:
        return self.m if self.m is not None else math.ceil(self.a) + 1


@dataclass
class LocalSolution:
    index: int
    exponent: float
    spectrum: ModelSpectrum
    disc: np.ndarray          # node indices inside D(z_j, 2 eps)
    values: np.ndarray        # W_j on the disc nodes
    dbar: np.ndarray          # d/dzbar W_j on the disc nodes (analytic model part)
    defect: np.ndarray        # (A/L) W + (B/L) conj(W) - dbar W on the disc nodes
    iterations: int = 0
    max_s: float = 0.0


@dataclass
class HomogeneousResult:
    u: GridField
    exponents: list
    residual: float
    residual_weighted: float
    nontriviality: float
    orders: list
    eps: float
    m: int
    glue_norm: float = 0.0
    local: list = field(default_factory=list)
    solve_report: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "exponents": [float(x) for x in self.exponents],
            "homogeneous_residual": self.residual,
            "homogeneous_residual_weighted": self.residual_weighted,
            "nontriviality": self.nontriviality,
            "vanishing_orders": [float(x) for x in self.orders],
            "eps": self.eps,
            "m": self.m,
            "glue_source_norm": self.glue_norm,
            "local": [{"point": s.index + 1, "exponent": s.exponent, "iterations": s.iterations,
                       "max_abs_s": s.max_s} for s in self.local],
            "solve": self.solve_report,
        }


def local_solution(spec: ProblemSpec, grid: Grid, j: int, a: float, eps: float,
                   correction: str = "similarity", lambda_max: float | None = None,
                   tol: float = 1e-11, max_iter: int = 30) -> LocalSolution:
    """Local solution near ``z_j`` vanishing like ``r^lam`` with the smallest ``lam >= a``."""
    pt = spec.points[j]
    zj = pt.location
    q = effective_model_profile(spec.points, j, pt.q_profile)
    lmax = lambda_max if lambda_max is not None else a + 2.0
    spectrum = find_exponents(q, lmax)
    try:
        k = spectrum.smallest_at_least(a)
    except ValueError as exc:
        raise SolverError(f"point {j + 1}: {exc}") from None
    lam = float(spectrum.exponents[k])
    disc = np.flatnonzero(np.abs(grid.nodes - zj) < 2 * eps)
    z = grid.nodes[disc]
    d = z - zj
    r = np.abs(d)
    theta = np.mod(np.angle(d), 2 * np.pi)
    v = model_values(spectrum, k, z, zj)
    dv = model_dbar(spectrum, k, z, zj)
    L = eval_L(spec.points, z)
    AL = spec.A(z) / L
    BL = spec.B(z) / L
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(v != 0, np.conj(v) / v, 0)
        qr = q(theta) / r
    s = np.zeros(z.shape, dtype=complex)
    g = AL + ratio * (BL - qr)
    it = 0
    if correction == "similarity" and np.any(g):
        s, g, it = _similarity(grid, disc, AL, ratio, BL, qr, tol, max_iter, j)
    elif correction == "none":
        g = np.zeros(z.shape, dtype=complex)
    es = np.exp(s)
    W = v * es
    dW = es * (dv + v * g)
    defect = AL * W + BL * np.conj(W) - dW
    return LocalSolution(j, lam, spectrum, disc, W, dW, defect, it, float(np.max(np.abs(s))))


def _similarity(grid, disc, AL, ratio, BL, qr, tol, max_iter, j):
    """Newton iteration for ``sigma = Im s``; ``s = Pi_D N(sigma)`` then follows.

    ``N(sigma) = A/L + (conj(v)/v)((B/L) e^{-2i sigma} - q/r)`` depends on
    ``s`` only through its imaginary part. The Jacobian is applied
    matrix-free and inverted with GMRES.
    """
    def N(sig):
        return AL + ratio * (BL * np.exp(-2j * sig) - qr)

    sig = np.zeros(AL.shape)
    n = sig.size
    for it in range(1, max_iter + 1):
        g = N(sig)
        s = cauchy_sum_subset(grid, disc, g)
        res = sig - s.imag
        if np.max(np.abs(res)) <= tol * max(1.0, float(np.max(np.abs(s)))):
            return s, g, it
        slope = ratio * BL * np.exp(-2j * sig) * (-2j)
        J = spla.LinearOperator(
            (n, n), dtype=float,
            matvec=lambda d: d - cauchy_sum_subset(grid, disc, slope * d).imag)
        step, info = spla.gmres(J, -res, rtol=1e-12, atol=0, restart=50, maxiter=20)
        sig = sig + step
    log.warning("local similarity solve at point %d stopped after %d Newton steps",
                j + 1, max_iter)
    g = N(sig)
    return cauchy_sum_subset(grid, disc, g), g, max_iter


def glue_source(spec: ProblemSpec, grid: Grid, local: list, eps: float) -> GridField:
    """``sum_j [(A/L) phi_j W_j + (B/L) conj(phi_j W_j) - dbar(phi_j W_j)]``.

    With ``dbar(phi W) = W dbar(phi) + phi dbar(W)`` this is
    ``sum_j [phi_j defect_j - W_j dbar(phi_j)]``: the first term is the
    local residual, the second lives on the annuli ``eps < r < 2 eps``.
    """
    out = np.zeros(grid.size, dtype=complex)
    for loc in local:
        z = grid.nodes[loc.disc]
        pt = [spec.points[loc.index]]
        phi = cutoff_values(pt, eps, z)[0]
        dphi = cutoff_dbar(pt, eps, z)[0]
        out[loc.disc] += phi * loc.defect - loc.values * dphi
    return GridField(grid, out)


def vanishing_order(u: GridField, center: complex, r_min: float, r_max: float,
                    bins: int = 8) -> float:
    """Estimate ``a`` in ``|u| ~ r^a`` near ``center`` from nodes with ``r_min <= r <= r_max``.

    Nodes sharing a ray from the centre (the graded star cells) are fitted
    with one slope and a separate intercept per ray, which removes the
    angular factor. Without such rays the slope of ``log RMS|u|`` over
    log-spaced annuli is returned.
    """
    z = u.grid.nodes - center
    r = np.abs(z)
    sel = (r >= r_min) & (r <= r_max) & (np.abs(u.values) > 0)
    key = np.round(np.angle(z[sel]), 9)
    lr, lu = np.log(r[sel]), np.log(np.abs(u.values[sel]))
    _, inv, counts = np.unique(key, return_inverse=True, return_counts=True)
    multi = counts[inv] >= 3
    if np.count_nonzero(counts >= 3) >= 8:
        g, x, y = inv[multi], lr[multi], lu[multi]
        nx = np.bincount(g, minlength=counts.size)
        with np.errstate(invalid="ignore"):
            xm = (np.bincount(g, x, counts.size) / nx)[g]
            ym = (np.bincount(g, y, counts.size) / nx)[g]
        dx = x - xm
        return float(np.dot(dx, y - ym) / np.dot(dx, dx))
    edges = np.geomspace(max(r_min, 1e-300), r_max, bins + 1)
    xs, ys = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (r >= lo) & (r < hi)
        if np.count_nonzero(sel) < 3:
            continue
        rms = math.sqrt(np.mean(np.abs(u.values[sel]) ** 2))
        if rms > 0:
            xs.append(math.log(math.sqrt(lo * hi)))
            ys.append(math.log(rms))
    if len(xs) < 3:
        raise ValueError("too few populated annuli for a vanishing-order estimate")
    return float(np.polyfit(xs, ys, 1)[0])


def build_homogeneous(request: HomogeneousRequest, grid: Grid,
                      options: SolverOptions = SolverOptions(),
                      exclusion: float | None = None, retries: int = 3) -> HomogeneousResult:
    """Glue local solutions and remove the gluing defect with a global solve."""
    spec = request.spec.with_(F=CoefficientField.zero(), m=request.weight)
    eps = request.radius
    for attempt in range(retries + 1):
        result = _build(spec, request, grid, options, eps, exclusion)
        if result.nontriviality >= 1e-6:
            return result
        log.warning("degenerate construction with eps = %g; halving", eps)
        eps /= 2
    return result


def _build(spec, request, grid, options, eps, exclusion):
    local = [local_solution(spec, grid, j, request.a, eps, request.correction,
                            request.lambda_max) for j in range(len(spec.points))]
    F = glue_source(spec, grid, local, eps)
    glued = spec.with_(F=CoefficientField.from_samples(F))
    w, report = solve_CR(glued, grid, options, exclusion=exclusion)
    u = w.values.copy()
    for loc in local:
        phi = cutoff_values([spec.points[loc.index]], eps, grid.nodes[loc.disc])[0]
        u[loc.disc] += phi * loc.values
    u = GridField(grid, u)
    res, res_w = pde_residual(u, spec, exclusion, homogeneous=True)
    ratios, orders = [], []
    for loc in local:
        zj = spec.points[loc.index].location
        r = np.abs(grid.nodes - zj)
        ann = (r >= eps) & (r <= 2 * eps)
        ann_loc = (np.abs(grid.nodes[loc.disc] - zj) >= eps)
        top = np.max(np.abs(loc.values[ann_loc])) if np.any(ann_loc) else 0.0
        ratios.append(float(np.max(np.abs(u.values[ann]))) / top if top > 0 else 0.0)
        orders.append(vanishing_order(u, zj, 0.0, min(eps, 2 * grid.h)))
    return HomogeneousResult(
        u=u, exponents=[loc.exponent for loc in local], residual=res, residual_weighted=res_w,
        nontriviality=min(ratios), orders=orders, eps=eps, m=spec.m,
        glue_norm=float(np.max(np.abs(F.values))), local=local,
        solve_report=report.as_dict())
