"""Command-line front end.

    vekua <solve|reduce|exponents|homogeneous|verify> --spec FILE --out DIR
          [--n INT] [--method picard|dense|gmres|auto] [--seed INT] [--level quick|full]

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ExpressionError, GeometryError, SpecError, VekuaError
from .fredholm import SolverOptions, solve_CR
from .grid import make_grid
from .io import load_profile, read_spec, write_field, write_json, write_profile
from .model import effective_model_profile, find_exponents

log = logging.getLogger("vekua")

COMMANDS = ("solve", "reduce", "exponents", "homogeneous", "verify")
MAX_N = 256


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    spec: Path
    out: Path
    n: int | None = None
    method: str | None = None
    seed: int = 0
    level: str = "quick"

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if not self.spec.is_file():
            raise UsageError(f"spec file {self.spec} does not exist")
        if self.n is not None and not 8 <= self.n <= MAX_N:
            raise UsageError(f"--n must lie in [8, {MAX_N}]")


def _report(command, seed, residuals=None, norms=None, **optional):
    rep = {"command": command, "residuals": residuals or {}, "norms": norms or {}}
    for key in ("spectrum", "kernel_dim", "orders", "sign_sigma"):
        if optional.get(key) is not None:
            rep[key] = optional[key]
    rep["seed"] = seed
    return rep


def _grid(spec, raw, cfg):
    g = dict(raw.get("grid", {}))
    n = cfg.n if cfg.n is not None else int(g.pop("n", 64))
    g.pop("n", None)
    if not 8 <= n <= MAX_N:
        raise UsageError(f"grid resolution must lie in [8, {MAX_N}]")
    return make_grid(spec.domain, n, spec.locations, **g)


def _solver(raw, cfg):
    s = dict(raw.get("solver", {}))
    if cfg.method is not None:
        s["method"] = cfg.method
    s["seed"] = cfg.seed
    return SolverOptions(**s)


def _verification(raw):
    return dict(raw.get("verification", {}))


def _solve(cfg, spec, raw):
    grid = _grid(spec, raw, cfg)
    ver = _verification(raw)
    u, rep = solve_CR(spec, grid, _solver(raw, cfg), exclusion=ver.get("exclusion"))
    write_field(cfg.out / "u.csv", u)
    tol = float(ver.get("tolerance", grid.h))
    ok = math.isfinite(rep.pde_residual) and rep.pde_residual <= tol
    d = rep.as_dict()
    residuals = {"pde": rep.pde_residual, "pde_weighted": rep.pde_residual_weighted,
                 "integral_equation": rep.equation_residual, "tolerance": tol,
                 "reduction_weighted": d["reduction"]["weighted_residual"], "passed": ok}
    norms = {"u_over_M_E": d["norm_u_over_M"], "F_over_M_E_m1": d["hypothesis_norm_F_over_M"],
             "holder_u_over_M": d["holder_u_over_M"], "max_abs_mu": d["reduction"]["max_abs_mu"],
             "method": rep.method, "iterations": rep.iterations,
             "contraction_estimate": rep.rho}
    return ok, _report("solve", cfg.seed, residuals, norms, kernel_dim=rep.kernel_dim)


def _reduce(cfg, spec, raw):
    from .reduction import build_w
    grid = _grid(spec, raw, cfg)
    ver = _verification(raw)
    res = build_w(spec, grid, tolerance=ver.get("tolerance"), exclusion=ver.get("exclusion"))
    for name in ("w", "mu", "B1", "F1"):
        write_field(cfg.out / f"{name}.csv", getattr(res, name))
    Bv = np.abs(spec.B(grid.nodes))
    mod = float(np.max(np.abs(np.abs(res.B1.values) - Bv)))
    ok = not res.flagged and mod <= 1e-10 * max(float(np.max(Bv)), 1.0)
    residuals = {"weighted": res.residual, "modulus_B1_minus_B": mod, "passed": ok}
    norms = {"max_abs_mu": res.max_mu,
             "gamma_eff": [[g.real, g.imag] for g in res.gamma_eff]}
    return ok, _report("reduce", cfg.seed, residuals, norms)


def _exponents(cfg, spec, raw):
    block = raw.get("exponents", {})
    lam_max = float(block.get("lambda_max", 3.0))
    if "q_profile" in block:
        profiles = [("q", load_profile(block["q_profile"]))]
    elif spec.points:
        profiles = [(f"point{j + 1}", effective_model_profile(spec.points, j, p.q_profile))
                    for j, p in enumerate(spec.points)]
    else:
        raise SpecError("exponents needs an 'exponents.q_profile' block or singular points")
    spectra = {}
    ok = True
    for label, q in profiles:
        sp = find_exponents(q, lam_max, step=float(block.get("step", 0.01)),
                            steps=int(block.get("steps", 2048)))
        spectra[label] = sp.as_dict()
        for k in range(len(sp)):
            for i, f in enumerate(sp.profiles[k]):
                write_profile(cfg.out / f"profile_{label}_{k + 1}_{i + 1}.csv", f)
        ok &= all(r <= 1e-8 for r in sp.residuals)
        ok &= all(np.min(np.abs(f[0].samples)) > 1e-12 for f in sp.profiles)
    residuals = {label: s["monodromy_residuals"] for label, s in spectra.items()}
    residuals["passed"] = bool(ok)
    return ok, _report("exponents", cfg.seed, residuals, {}, spectrum=spectra)


def _homogeneous(cfg, spec, raw):
    from .homogeneous import HomogeneousRequest, build_homogeneous
    block = raw.get("homogeneous", {})
    if "a" not in block:
        raise SpecError("homogeneous needs a 'homogeneous.a' vanishing order")
    req = HomogeneousRequest(spec, float(block["a"]), k=int(block.get("k", 0)),
                             eps=block.get("eps"), correction=block.get("correction", "similarity"),
                             lambda_max=block.get("lambda_max"), m=block.get("m"))
    grid = _grid(spec, raw, cfg)
    ver = _verification(raw)
    res = build_homogeneous(req, grid, _solver(raw, cfg), exclusion=ver.get("exclusion"))
    write_field(cfg.out / "u.csv", res.u)
    tol = float(ver.get("tolerance", math.inf))
    ok = (res.nontriviality >= 1e-6 and all(o >= req.a - 0.2 for o in res.orders)
          and res.residual <= tol)
    d = res.as_dict()
    residuals = {"homogeneous": res.residual, "weighted": res.residual_weighted,
                 "tolerance": tol if math.isfinite(tol) else None, "passed": bool(ok)}
    norms = {"nontriviality": res.nontriviality, "glue_source_max": res.glue_norm,
             "eps": res.eps, "m": res.m, "local": d["local"]}
    return ok, _report("homogeneous", cfg.seed, residuals, norms,
                       spectrum={"exponents": d["exponents"]}, orders=d["vanishing_orders"],
                       kernel_dim=d["solve"]["kernel_dim"])


def _verify(cfg, spec, raw):
    from .verify import verify_suite
    grid = _grid(spec, raw, cfg)
    rep = verify_suite(spec, grid, cfg.level, cfg.seed)
    residuals = {c["name"]: c for c in rep["checks"]}
    residuals["passed"] = rep["passed"]
    return rep["passed"], _report("verify", cfg.seed, residuals, {"level": cfg.level},
                                  sign_sigma=rep["sigma"])


HANDLERS = {"solve": _solve, "reduce": _reduce, "exponents": _exponents,
            "homogeneous": _homogeneous, "verify": _verify}


def run(cfg: RunConfig) -> int:
    """Execute one subcommand and write ``report.json``; returns the exit code."""
    try:
        spec, raw = read_spec(cfg.spec)
    except (SpecError, ExpressionError, GeometryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    cfg.out.mkdir(parents=True, exist_ok=True)
    np.random.seed(cfg.seed)
    try:
        ok, report = HANDLERS[cfg.command](cfg, spec, raw)
    except (UsageError, SpecError, ExpressionError, GeometryError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except VekuaError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        write_json(cfg.out / "report.json",
                   _report(cfg.command, cfg.seed, {"error": str(exc), "passed": False}))
        return 1
    write_json(cfg.out / "report.json", report)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vekua", description=__doc__.splitlines()[0] if __doc__
                                else None)
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--spec", required=True, type=Path, help="problem specification JSON")
    p.add_argument("--out", required=True, type=Path, help="output directory")
    p.add_argument("--n", type=int, help="lattice cells per side")
    p.add_argument("--method", choices=("picard", "dense", "gmres", "auto"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--level", choices=("quick", "full"), default="quick")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig(args.command, args.spec, args.out, args.n, args.method, args.seed,
                        args.level)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
