"""Second-kind equation ``u - T u = f`` and the full solve of the equation.

The unknown is scaled as ``u = L^m U``. Then ``U - S U = f / L^m`` with

    S U = Pi(K conj(U)),   K = B conj(L^m) / L^{m+1},

which stays bounded at the singular points. ``S`` is conjugate-linear, so
the dense and Krylov paths work on the real vector ``(Re U, Im U)`` where it
becomes ``[[I - Gr, -Gi], [-Gi, I + Gr]]`` with ``G = P diag(K)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.sparse import linalg as spla

from .cauchy import DEFAULT_OPTIONS, TransformOptions, build_f, cauchy_matrix, cauchy_sum, \
    weight_factors
from .coefficients import ProblemSpec, eval_L, eval_M, weighted_norm_E, _lp
from .errors import NonFiniteError, SolverError
from .grid import Grid, GridField, holder_estimate, verification_mask, wirtinger_dbar
from .reduction import reduce, unreduce

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverOptions:
    """Solver selection and tolerances.

    ``method`` is ``"auto"``, ``"picard"``, ``"dense"`` or ``"gmres"``.
    ``auto`` iterates when the estimated contraction factor is below
    ``picard_rho`` and otherwise factorises densely up to ``dense_cap``
    nodes, beyond which it switches to GMRES.
    """

    method: str = "auto"
    tol: float = 1e-10
    max_iter: int = 500
    cutoff: float = 1e-6
    n_h: int = 8
    dense_cap: int = 6000
    picard_rho: float = 0.9
    transform: TransformOptions = DEFAULT_OPTIONS
    seed: int = 0

    def __post_init__(self):
        if self.method not in ("auto", "picard", "dense", "gmres"):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.n_h < 0:
            raise ValueError("n_h must be non-negative")


@dataclass
class SolveReport:
    method: str
    equation_residual: float
    pde_residual: float = math.nan
    pde_residual_weighted: float = math.nan
    kernel_dim: int = 0
    coefficients: list = field(default_factory=list)
    iterations: int = 0
    rho: float = math.nan
    singular_values: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = {
            "method": self.method,
            "equation_residual": self.equation_residual,
            "pde_residual": self.pde_residual,
            "pde_residual_weighted": self.pde_residual_weighted,
            "kernel_dim": self.kernel_dim,
            "correction_coefficients": list(self.coefficients),
            "iterations": self.iterations,
            "contraction_estimate": self.rho,
            "smallest_singular_values": list(self.singular_values),
        }
        d.update(self.extras)
        return d


class _Scaled:
    """Operator ``S`` and its realification on one grid."""

    def __init__(self, spec: ProblemSpec, grid: Grid, options: SolverOptions):
        self.spec, self.grid, self.options = spec, grid, options
        Lm, kern = weight_factors(spec, grid, options=options.transform)
        self.Lm = Lm
        self.K = kern * np.conj(Lm)
        if not np.all(np.isfinite(self.K)):
            k = int(np.argmax(~np.isfinite(self.K)))
            raise NonFiniteError(f"scaled kernel is not finite at node {k}", node=k)
        self.n = grid.size
        self._real = None

    def apply(self, U):
        return cauchy_sum(self.grid, self.K * np.conj(U), options=self.options.transform)

    def real_matrix(self):
        if self._real is None:
            G = cauchy_matrix(self.grid, self.options.transform)
            G *= self.K[None, :]
            n = self.n
            A = np.empty((2 * n, 2 * n))
            A[:n, :n] = -G.real
            A[:n, n:] = -G.imag
            A[n:, :n] = -G.imag
            A[n:, n:] = G.real
            del G
            A[np.diag_indices(2 * n)] += 1.0
            self._real = A
        return self._real

    def real_apply(self, x):
        n = self.n
        U = x[:n] + 1j * x[n:]
        y = U - self.apply(U)
        return np.concatenate([y.real, y.imag])

    def contraction(self, probes: int = 3, power: int = 6) -> float:
        """Estimate ``||S||`` from a few power steps on seeded random probes."""
        if not np.any(self.K):
            return 0.0
        rng = np.random.default_rng(self.options.seed)
        w = self.grid.weights
        rho = 0.0
        for _ in range(probes):
            x = rng.standard_normal(self.n) + 1j * rng.standard_normal(self.n)
            for _ in range(power):
                nx = math.sqrt(np.dot(w, np.abs(x) ** 2))
                y = self.apply(x / nx)
                ratio = math.sqrt(np.dot(w, np.abs(y) ** 2))
                x = y
                if ratio == 0:
                    break
            rho = max(rho, ratio)
        return rho


def _defect(op: _Scaled, U, rhs, c=None):
    d = U - op.apply(U) - rhs
    if c is not None and len(c):
        d = d + _holomorphic(op.grid, len(c)) @ np.asarray(c)
    w = op.grid.weights
    scale = _lp(np.abs(rhs), w, op.spec.p) or 1.0
    return _lp(np.abs(d), w, op.spec.p) / scale


def _holomorphic(grid: Grid, n_h: int) -> np.ndarray:
    """Scaled basis ``h_k / L^m = z^{k-1}`` as columns."""
    z = grid.nodes - grid.domain.center if grid.domain.shape == "disc" else grid.nodes
    return np.column_stack([z**k for k in range(n_h)]) if n_h else np.zeros((grid.size, 0))


def _picard(op: _Scaled, rhs, options: SolverOptions, rho: float):
    U = rhs.copy()
    best = math.inf
    history = []
    for it in range(1, options.max_iter + 1):
        U_new = rhs + op.apply(U)
        step = np.max(np.abs(U_new - U))
        U = U_new
        history.append(step)
        best = min(best, step)
        if step <= options.tol * max(1.0, np.max(np.abs(U))):
            return U, it, history
        if it > 5 and history[-1] > history[-2] > history[-3]:
            break
    raise SolverError("Picard iteration did not converge", best_residual=best)


def _kernel_from_lu(A, lu, cutoff, k: int = 4):
    """Smallest singular values and right vectors of ``A`` using its LU factors."""
    N = A.shape[0]
    inv = spla.LinearOperator((N, N), matvec=lambda x: sla.lu_solve(lu, x),
                              rmatvec=lambda x: sla.lu_solve(lu, x, trans=1), dtype=float)
    fwd = spla.LinearOperator((N, N), matvec=lambda x: A @ x, rmatvec=lambda x: A.T @ x,
                              dtype=float)
    v0 = np.ones(N) / math.sqrt(N)
    smax = float(spla.svds(fwd, k=1, return_singular_vectors=False, v0=v0)[0])
    k = min(k, N - 2)
    u, s, _ = spla.svds(inv, k=k, v0=v0)
    order = np.argsort(-s)
    sig = 1.0 / s[order]
    # left singular vectors of A^{-1} are the right singular vectors of A
    vecs = u[:, order].T
    keep = sig < cutoff * smax
    return sig, smax, vecs, keep


def _dense(op: _Scaled, rhs, options: SolverOptions):
    A = op.real_matrix()
    n = op.n
    b = np.concatenate([rhs.real, rhs.imag])
    lu = sla.lu_factor(A, check_finite=False)
    sig, smax, _, keep = _kernel_from_lu(A, lu, options.cutoff)
    dim = int(np.count_nonzero(keep))
    coef = []
    if dim == 0:
        x = sla.lu_solve(lu, b, check_finite=False)
    else:
        H = _holomorphic(op.grid, options.n_h)
        Hr = np.vstack([H.real, H.imag])
        sol = sla.lstsq(np.hstack([A, Hr]), b, lapack_driver="gelsy", check_finite=False)[0]
        x, coef = sol[:2 * n], list(sol[2 * n:])
    return x[:n] + 1j * x[n:], coef, dim, [float(s) for s in sig], smax


def _gmres(op: _Scaled, rhs, options: SolverOptions):
    N = 2 * op.n
    M = spla.LinearOperator((N, N), matvec=op.real_apply, dtype=float)
    b = np.concatenate([rhs.real, rhs.imag])
    it = [0]

    def cb(_):
        it[0] += 1

    x, info = spla.gmres(M, b, rtol=options.tol, atol=0, restart=60,
                         maxiter=options.max_iter, callback=cb, callback_type="pr_norm")
    U = x[:op.n] + 1j * x[op.n:]
    if info != 0:
        raise SolverError("GMRES did not converge", best_residual=_defect(op, U, rhs))
    return U, it[0]


def solve_P(f: GridField, spec: ProblemSpec, options: SolverOptions = SolverOptions(),
            B=None) -> tuple[GridField, SolveReport]:
    """Solve ``u - T u + sum_k c_k h_k = f`` with ``h_k = L^m z^{k-1}``.

    The correction coefficients are only introduced when a kernel is
    detected (dense path); otherwise ``c = 0`` and the solve is exact up to
    linear algebra.
    """
    grid = f.grid
    norm = weighted_norm_E(f, spec.m, spec.p, spec.points)
    if not np.isfinite(norm):
        raise NonFiniteError("right-hand side is not in E_{m,p}")
    if B is not None:
        from .coefficients import CoefficientField
        spec = spec.with_(B=CoefficientField.from_samples(GridField(grid, B)))
    op = _Scaled(spec, grid, options)
    rhs = f.values / op.Lm
    if not np.any(op.K):
        return GridField(grid, f.values.copy()), SolveReport("identity", 0.0, rho=0.0)
    rho = op.contraction() if options.method in ("auto", "picard") else math.nan
    method = options.method
    if method == "auto":
        if rho < options.picard_rho:
            method = "picard"
        elif op.n <= options.dense_cap:
            method = "dense"
        else:
            method = "gmres"
    report = SolveReport(method, math.nan, rho=rho)
    if method == "picard":
        U, report.iterations, hist = _picard(op, rhs, options, rho)
        report.extras["step_history"] = [float(h) for h in hist[:10]]
    elif method == "dense":
        if op.n > options.dense_cap:
            raise SolverError(f"{op.n} nodes exceed the dense cap {options.dense_cap}; "
                              "use a coarser grid or method='gmres'")
        U, coef, dim, sig, smax = _dense(op, rhs, options)
        report.kernel_dim, report.coefficients = dim, [float(c) for c in coef]
        report.singular_values = sig
        report.extras["largest_singular_value"] = smax
    else:
        U, report.iterations = _gmres(op, rhs, options)
    report.equation_residual = float(_defect(op, U, rhs, report.coefficients))
    return GridField(grid, op.Lm * U), report


def kernel_basis(spec: ProblemSpec, grid: Grid, options: SolverOptions = SolverOptions()):
    """Approximate kernel of the discretised ``I - T`` from its smallest singular values.

    Returns ``(fields, report)`` where ``report`` lists the singular values
    examined and the largest one.
    """
    op = _Scaled(spec, grid, options)
    if op.n > options.dense_cap:
        raise SolverError(f"{op.n} nodes exceed the dense cap {options.dense_cap}; "
                          "use a coarser grid")
    if not np.any(op.K):
        return [], {"dimension": 0, "singular_values": [], "largest": 1.0}
    A = op.real_matrix()
    lu = sla.lu_factor(A, check_finite=False)
    sig, smax, vecs, keep = _kernel_from_lu(A, lu, options.cutoff)
    fields = []
    for x in vecs[keep]:
        U = x[:op.n] + 1j * x[op.n:]
        fields.append(GridField(grid, op.Lm * U))
    return fields, {"dimension": len(fields), "singular_values": [float(s) for s in sig],
                    "largest": smax}


def pde_residual(u: GridField, spec: ProblemSpec, exclusion: float | None = None,
                 margin: float | None = None, homogeneous: bool = False):
    """Sup and distance-weighted residual of the equation on verification nodes."""
    grid = u.grid
    mask = verification_mask(grid, exclusion, margin)
    z = grid.nodes[mask]
    L = eval_L(spec.points, z)
    uv = u.values[mask]
    rhs = spec.A(z) / L * uv + spec.B(z) / L * np.conj(uv)
    if not homogeneous:
        rhs = rhs + spec.F(z)
    err = np.abs(wirtinger_dbar(u).values[mask] - rhs)
    if not err.size:
        return 0.0, 0.0
    dist = np.ones(z.shape)
    if spec.points:
        dist = np.min(np.abs(z[None, :] - np.array(spec.locations)[:, None]), axis=0)
    return float(np.max(err)), float(np.max(err * dist))


def solve_CR(spec: ProblemSpec, grid: Grid, options: SolverOptions = SolverOptions(),
             exclusion: float | None = None) -> tuple[GridField, SolveReport]:
    """Reduce, build ``f``, solve ``P v = f`` and return ``u = e^w v``."""
    z = grid.nodes
    geff = [p.gamma_eff for p in spec.points]
    M = eval_M(spec.points, z, geff)
    with np.errstate(divide="ignore", invalid="ignore"):
        FM = GridField(grid, spec.F(z) / M)
    hyp = weighted_norm_E(FM, spec.m + 1, spec.p, spec.points)
    reduced, red = reduce(spec, grid, options.transform, exclusion=exclusion)
    f = build_f(red.F1, reduced, options.transform)
    v, report = solve_P(f, reduced, options, B=red.B1.values)
    u = unreduce(v, red)
    report.pde_residual, report.pde_residual_weighted = pde_residual(u, spec, exclusion)
    uM = GridField(grid, u.values / M)
    report.extras.update({
        "hypothesis_norm_F_over_M": hyp,
        "norm_u_over_M": weighted_norm_E(uM, spec.m, spec.p, spec.points),
        "reduction": red.report(),
    })
    excl = exclusion if exclusion is not None else 4 * grid.h
    try:
        report.extras["holder_u_over_M"] = holder_estimate(
            uM, exclusion=[(c, excl) for c in spec.locations])
    except ValueError:
        report.extras["holder_u_over_M"] = math.nan
    return u, report
