"""Problem specification JSON and deterministic output files.

Complex numbers are written as a number, ``[re, im]`` or an expression
string. Profiles accept ``{"constant": c}``, ``{"fourier": {"k": c}}``,
``{"samples": [c, ...]}`` or ``{"expression": "... theta ..."}``.
Coefficients accept a number, an expression string, ``{"expression": s}``,
``{"profile_remainder": {"remainder": s, "background": s}}`` or
``{"samples": "file.csv"}`` (values at the grid nodes).
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .coefficients import CoefficientField, PeriodicProfile, ProblemSpec, SingularPoint
from .errors import ExpressionError, SpecError
from .expression import Expression
from .grid import Domain, Grid, GridField, field_to_rows

PROFILE_SAMPLES = 128


def as_complex(value, what="value") -> complex:
    if isinstance(value, bool):
        raise SpecError(f"{what}: expected a number")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        out = Expression(value, names=()).__call__(np.zeros(1))
        return complex(out[0])
    raise SpecError(f"{what}: expected a number, [re, im] pair or constant expression")


def load_domain(d: dict) -> Domain:
    shape = d.get("shape", "disc")
    margin = float(d.get("margin", 0.1))
    if shape == "disc":
        return Domain.disc(as_complex(d.get("center", 0), "center"), float(d.get("radius", 1.0)),
                           margin)
    if shape == "rectangle":
        return Domain.rectangle(as_complex(d.get("lower", [-1, -1]), "lower"),
                                as_complex(d.get("upper", [1, 1]), "upper"), margin)
    raise SpecError(f"unknown domain shape {shape!r}")


def load_profile(p, n: int = PROFILE_SAMPLES) -> PeriodicProfile:
    if p is None:
        return PeriodicProfile.constant(0, n)
    if not isinstance(p, dict):
        return PeriodicProfile.constant(as_complex(p, "profile"), n)
    n = int(p.get("n", n))
    if "constant" in p:
        return PeriodicProfile.constant(as_complex(p["constant"], "profile"), n)
    if "fourier" in p:
        return PeriodicProfile.from_fourier(
            {int(k): as_complex(c, "Fourier coefficient") for k, c in p["fourier"].items()}, n)
    if "samples" in p:
        if not isinstance(p["samples"], list):
            raise SpecError("profile samples must be a list")
        return PeriodicProfile([as_complex(c, "profile sample") for c in p["samples"]])
    if "expression" in p:
        expr = Expression(p["expression"], names=("theta",))
        return PeriodicProfile.from_function(expr.profile, n)
    raise SpecError("profile needs one of constant, fourier, samples or expression")


def load_coefficient(c, points, base: Path | None, which: str) -> CoefficientField:
    locs = [p.location for p in points]
    if c is None:
        return CoefficientField.zero()
    if isinstance(c, (int, float, list)) and not isinstance(c, bool):
        return CoefficientField.constant(as_complex(c, which))
    if isinstance(c, str):
        c = {"expression": c}
    if not isinstance(c, dict):
        raise SpecError(f"coefficient {which}: unsupported value")
    if "expression" in c:
        expr = Expression(c["expression"], locs, names=("z", "zbar"))
        return CoefficientField(expr, kind="expression", source=c["expression"])
    if "profile_remainder" in c:
        pr = c["profile_remainder"] or {}
        rem = Expression(pr["remainder"], locs, ("z", "zbar")) if "remainder" in pr else None
        bg = Expression(pr["background"], locs, ("z", "zbar")) if "background" in pr else None
        return CoefficientField.profile_remainder(points, "p" if which == "A" else "q", rem, bg,
                                                  source=pr)
    if "samples" in c:
        path = Path(c["samples"])
        if base is not None and not path.is_absolute():
            path = base / path
        return _samples_coefficient(path)
    raise SpecError(f"coefficient {which}: unknown form {sorted(c)}")


def _samples_coefficient(path: Path) -> CoefficientField:
    table = read_csv(path)
    lookup = {complex(x, y): complex(a, b) for x, y, a, b in table}

    def fn(z):
        try:
            return np.array([lookup[complex(w)] for w in z.ravel()]).reshape(z.shape)
        except KeyError as exc:
            raise SpecError(f"{path.name} has no sample at {exc.args[0]}") from None

    return CoefficientField(fn, kind="samples", source=str(path))


def load_spec(data: dict, base: Path | None = None) -> tuple[ProblemSpec, dict]:
    """Build a :class:`ProblemSpec`; the raw dictionary is returned for run settings."""
    if not isinstance(data, dict):
        raise SpecError("specification must be a JSON object")
    try:
        domain = load_domain(data.get("domain", {}))
        points = []
        for k, p in enumerate(data.get("points", [])):
            points.append(SingularPoint(
                as_complex(p["location"], f"point {k + 1}"),
                tau=float(p.get("tau", 0.5)), delta=float(p.get("delta", 0.2)),
                p_profile=load_profile(p.get("p_profile")),
                q_profile=load_profile(p.get("q_profile"))))
        spec = ProblemSpec(
            domain, tuple(points),
            A=load_coefficient(data.get("A"), points, base, "A"),
            B=load_coefficient(data.get("B"), points, base, "B"),
            F=load_coefficient(data.get("F"), points, base, "F"),
            m=data.get("m", 1), p=float(data.get("p", 4.0)))
    except KeyError as exc:
        raise SpecError(f"missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, (SpecError, ExpressionError)):
            raise
        raise SpecError(str(exc)) from None
    return spec, data


def read_spec(path) -> tuple[ProblemSpec, dict]:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: "
                        f"{exc.msg}") from None
    return load_spec(data, path.parent)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _encode(obj, indent=0):
    pad = "  " * (indent + 1)
    end = "  " * indent
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, (complex, np.complexfloating)):
        return _encode([obj.real, obj.imag], indent)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_encode(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj) -> str:
    """JSON text with floats at 17 significant digits and non-finite values as null."""
    return _encode(obj) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps(obj), encoding="utf-8")


def write_field(path, f: GridField, metadata: dict | None = None):
    """CSV ``x,y,re,im`` at 17 significant digits plus a JSON sidecar with the grid."""
    path = Path(path)
    rows = field_to_rows(f)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write("x,y,re,im\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    meta = {"grid": f.grid.metadata()}
    if metadata:
        meta.update(metadata)
    write_json(path.with_suffix(".json"), meta)


def write_profile(path, profile: PeriodicProfile):
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        fh.write("theta,re,im\n")
        for t, v in zip(profile.thetas, profile.samples):
            fh.write(f"{_fmt(t)},{_fmt(v.real)},{_fmt(v.imag)}\n")


def read_csv(path) -> np.ndarray:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SpecError(f"{path}: empty CSV")
        return np.array([[float(v) for v in row] for row in reader if row])


def read_field(path, grid: Grid) -> GridField:
    """Read a CSV written by :func:`write_field` back onto ``grid``."""
    table = read_csv(path)
    if table.shape[0] != grid.size or not np.array_equal(table[:, 0] + 1j * table[:, 1],
                                                         grid.nodes):
        raise SpecError(f"{path}: nodes do not match the grid")
    return GridField(grid, table[:, 2] + 1j * table[:, 3])
