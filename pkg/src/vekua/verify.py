"""Invariant checks aggregated into a pass/fail report."""

from __future__ import annotations

import math

import numpy as np

from .cauchy import DEFAULT_OPTIONS, apply_T, apply_T_star, bilinear_form, pompeiu
from .coefficients import PeriodicProfile, ProblemSpec, compute_gamma, verify_condition
from .grid import Domain, GridField, make_grid, verification_mask, wirtinger_dbar
from .model import effective_model_profile, find_exponents
from .reduction import build_w


def _check(name, value, threshold, passed=None, **extra):
    ok = bool(value <= threshold) if passed is None else bool(passed)
    entry = {"name": name, "value": value, "threshold": threshold, "passed": ok}
    entry.update(extra)
    return entry


def classical_identity(n: int = 64) -> float:
    """``max |Pi(1) - conj(z)|`` on ``|z| <= 0.8`` of the unit disc."""
    g = make_grid(Domain.disc(), n)
    u = pompeiu(GridField(g, np.ones(g.size, dtype=complex)))
    inner = np.abs(g.nodes) <= 0.8
    return float(np.max(np.abs(u.values[inner] - np.conj(g.nodes[inner]))))


def inverse_property(n: int = 64, domain: Domain | None = None) -> float:
    """``max |dbar Pi(g) - g|`` on verification nodes for ``g = exp(-|z|^2)``."""
    g = make_grid(domain or Domain.disc(), n)
    f = GridField(g, np.exp(-np.abs(g.nodes) ** 2).astype(complex))
    mask = verification_mask(g)
    d = wirtinger_dbar(pompeiu(f)).values
    return float(np.max(np.abs(d[mask] - f.values[mask])))


def gamma_errors() -> float:
    errs = [abs(compute_gamma(PeriodicProfile.from_function(lambda t: np.cos(2 * t)))) - 1]
    for k in (-3, -1, 0, 1, 3):
        errs.append(abs(compute_gamma(PeriodicProfile.from_fourier({k: 1}))))
    return float(max(abs(e) for e in errs))


def random_field(grid, rng) -> GridField:
    return GridField(grid, rng.standard_normal(grid.size) + 1j * rng.standard_normal(grid.size))


def adjoint_ratios(spec: ProblemSpec, grid, pairs: int, seed: int, options=DEFAULT_OPTIONS):
    """Ratios ``<Tu, v> / <u, T* v>`` for seeded random node fields."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(pairs):
        u, v = random_field(grid, rng), random_field(grid, rng)
        lhs = bilinear_form(apply_T(u, spec, options), v)
        rhs = bilinear_form(u, apply_T_star(v, spec, options))
        out.append((lhs, rhs))
    return out


def adjoint_sign(spec, grid, pairs=10, seed=0, options=DEFAULT_OPTIONS):
    """Common sign ``sigma`` and worst relative mismatch, or ``(0, inf)`` if the signs differ."""
    vals = adjoint_ratios(spec, grid, pairs, seed, options)
    signs = {int(np.sign(l * r)) for l, r in vals}
    if len(signs) != 1 or 0 in signs:
        return 0, math.inf
    sigma = signs.pop()
    rel = max(abs(l - sigma * r) / max(abs(l), 1e-300) for l, r in vals)
    return sigma, float(rel)


def conjugate_linearity(spec, grid, seed=0) -> float:
    rng = np.random.default_rng(seed)
    u = random_field(grid, rng)
    Tu = apply_T(u, spec).values
    scale = max(float(np.max(np.abs(Tu))), 1e-300)
    errs = []
    for lam in (1j, 2.0, 1 + 1j):
        errs.append(np.max(np.abs(apply_T(u * lam, spec).values - np.conj(lam) * Tu)) / scale)
    return float(max(errs))


def verify_suite(spec: ProblemSpec, grid=None, level: str = "quick", seed: int = 0,
                 n: int = 48) -> dict:
    """Run the invariant checks; ``full`` adds a second resolution and the solver checks."""
    if level not in ("quick", "full"):
        raise ValueError("level must be 'quick' or 'full'")
    if grid is None:
        grid = make_grid(spec.domain, n, spec.locations)
    checks = []
    nq = min(grid.n, 64)
    checks.append(_check("classical_identity", classical_identity(nq), 5e-3 * (128 / nq)))
    checks.append(_check("inverse_property", inverse_property(nq), 5e-2))
    checks.append(_check("gamma_quadrature", gamma_errors(), 1e-12))
    if spec.points:
        cond = verify_condition(spec)
        checks.append(_check("condition", max(max(e["ratios"]) for e in cond.entries),
                             cond.constant, cond.passed, entries=cond.entries))
    red = build_w(spec, grid)
    Bv = np.abs(spec.B(grid.nodes))
    keep = verification_mask(grid)
    mod = float(np.max(np.abs(np.abs(red.B1.values[keep]) - Bv[keep]))) / max(
        float(np.max(Bv)), 1e-300) if np.any(keep) else 0.0
    checks.append(_check("reduction_modulus", mod, 1e-10, mu_max=red.max_mu,
                         weighted_residual=red.residual))
    checks.append(_check("conjugate_linearity", conjugate_linearity(spec, grid, seed), 1e-12))
    pairs = 10 if level == "full" else 3
    sigma, rel = adjoint_sign(spec, grid, pairs, seed)
    sigmas = [sigma]
    if level == "full":
        coarse = make_grid(spec.domain, max(16, grid.n // 2), spec.locations)
        s2, rel2 = adjoint_sign(spec, coarse, pairs, seed + 1)
        sigmas.append(s2)
        rel = max(rel, rel2)
    consistent = len(set(sigmas)) == 1 and sigmas[0] != 0
    checks.append(_check("adjoint_sign", rel, 1e-3, consistent and rel <= 1e-3,
                         sigma=sigmas[0], pairs=pairs))
    zero = find_exponents(PeriodicProfile.constant(0), 3.5)
    err = float(np.max(np.abs(zero.exponents - [1, 2, 3]))) if len(zero) == 3 else math.inf
    min_mod = []
    for j, p in enumerate(spec.points):
        sp = find_exponents(effective_model_profile(spec.points, j, p.q_profile), 2.0)
        min_mod += [float(np.min(np.abs(f[0].samples))) for f in sp.profiles]
    checks.append(_check("spectrum_sanity", err, 1e-8,
                         err <= 1e-8 and all(m > 1e-6 for m in min_mod),
                         min_profile_modulus=min(min_mod) if min_mod else None))
    if level == "full":
        from .fredholm import SolverOptions, kernel_basis, solve_CR
        u, rep = solve_CR(spec, grid, SolverOptions(seed=seed))
        checks.append(_check("pipeline_residual", rep.pde_residual, math.inf,
                             math.isfinite(rep.pde_residual), weighted=rep.pde_residual_weighted))
        dims = []
        for m in (24, 32):
            fields, _ = kernel_basis(spec, make_grid(spec.domain, m, spec.locations))
            dims.append(len(fields))
        checks.append(_check("kernel_stability", abs(dims[0] - dims[1]), 0, dimensions=dims))
    return {"level": level, "seed": seed, "sigma": sigmas[0],
            "passed": all(c["passed"] for c in checks), "checks": checks}
