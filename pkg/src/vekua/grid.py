"""Domains, quadrature grids and the finite-difference measurement tools.

A :class:`Grid` is a midpoint tensor lattice over a rectangle or a disc.
Around every singular point a small block of lattice cells is replaced by
a graded star ("polar") subdivision so that integrands behaving like
negative powers of ``|z - z_j|`` are resolved. Every cell is a convex
quadrilateral (or triangle) whose vertices are kept, which lets
:mod:`vekua.cauchy` integrate the Cauchy kernel exactly over near cells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate as _quad
from scipy.spatial import cKDTree

from .errors import GeometryError, NonFiniteError

LATTICE, CLIPPED, RING = 0, 1, 2


@dataclass(frozen=True)
class Domain:
    """Rectangle ``[x0, x1] x [y0, y1]`` or disc ``D(center, radius)``.

    ``margin`` is the minimal admissible distance between a singular
    point and the boundary, and the default boundary band dropped from
    verification metrics.
    """

    shape: str = "rectangle"
    lower: complex = -1 - 1j
    upper: complex = 1 + 1j
    center: complex = 0j
    radius: float = 1.0
    margin: float = 0.1

    def __post_init__(self):
        if self.shape not in ("rectangle", "disc"):
            raise GeometryError(f"unknown domain shape {self.shape!r}")
        if self.area <= 0:
            raise GeometryError("domain must have positive area")
        if self.margin < 0:
            raise GeometryError("margin must be non-negative")

    @classmethod
    def rectangle(cls, lower=-1 - 1j, upper=1 + 1j, margin=0.1):
        return cls("rectangle", lower=complex(lower), upper=complex(upper), margin=margin)

    @classmethod
    def disc(cls, center=0j, radius=1.0, margin=0.1):
        return cls("disc", center=complex(center), radius=float(radius), margin=margin)

    @property
    def area(self) -> float:
        if self.shape == "rectangle":
            d = self.upper - self.lower
            return max(d.real, 0.0) * max(d.imag, 0.0)
        return math.pi * self.radius**2

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        if self.shape == "rectangle":
            return self.lower.real, self.upper.real, self.lower.imag, self.upper.imag
        c, r = self.center, self.radius
        return c.real - r, c.real + r, c.imag - r, c.imag + r

    @property
    def diameter(self) -> float:
        if self.shape == "rectangle":
            return abs(self.upper - self.lower)
        return 2 * self.radius

    def boundary_distance(self, z):
        """Signed distance to the boundary, positive inside."""
        z = np.asarray(z, dtype=complex)
        if self.shape == "disc":
            return self.radius - np.abs(z - self.center)
        x0, x1, y0, y1 = self.bounds
        return np.minimum.reduce([z.real - x0, x1 - z.real, z.imag - y0, y1 - z.imag])

    def contains(self, z) -> np.ndarray:
        return self.boundary_distance(z) > 0


@dataclass(frozen=True, eq=False)
class Grid:
    """Quadrature nodes, weights and cell geometry.

    Attributes
    ----------
    nodes, weights : ndarray
        Complex node positions and positive cell areas.
    kinds : ndarray
        ``LATTICE``, ``CLIPPED`` (disc boundary cell, node at centroid) or
        ``RING`` (graded star cell around a singular point).
    lattice : ndarray of int, shape (n, n)
        ``lattice[k, i]`` is the node index of cell column ``i`` and row
        ``k``, or -1 when the cell was removed or is not a lattice node.
    polygons : ndarray, shape (N, 4)
        Counter-clockwise cell vertices; NaN rows for clipped cells.
    """

    domain: Domain
    n: int
    nodes: np.ndarray
    weights: np.ndarray
    kinds: np.ndarray
    lattice: np.ndarray
    polygons: np.ndarray
    hx: float
    hy: float
    points: tuple = ()
    rings: int = 0
    angles: int = 0
    block: int = 0
    grading: float = 0.5
    ring_width: tuple = ()

    @property
    def h(self) -> float:
        return max(self.hx, self.hy)

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def origin(self) -> complex:
        x0, _, y0, _ = self.domain.bounds
        return complex(x0, y0)

    def local_size(self, j: int) -> float:
        """Finest cell width next to singular point ``j``."""
        if self.ring_width:
            return self.ring_width[j]
        return self.h

    def metadata(self) -> dict:
        d = self.domain
        shape = {"shape": d.shape, "margin": d.margin}
        if d.shape == "rectangle":
            shape.update(lower=[d.lower.real, d.lower.imag], upper=[d.upper.real, d.upper.imag])
        else:
            shape.update(center=[d.center.real, d.center.imag], radius=d.radius)
        return {
            "domain": shape,
            "n": self.n,
            "nodes": int(self.size),
            "points": [[p.real, p.imag] for p in self.points],
            "rings": {"count": self.rings, "angles": self.angles, "block": self.block,
                      "grading": self.grading},
            "weight_sum": float(np.sum(self.weights)),
        }


@dataclass(frozen=True, eq=False)
class GridField:
    """Complex samples of a function on the nodes of a grid."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.grid.size,):
            raise ValueError(
                f"field has {values.size} values for a grid of {self.grid.size} nodes")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "GridField":
        return cls(grid, np.broadcast_to(fn(grid.nodes), grid.nodes.shape))

    def _other(self, other):
        if isinstance(other, GridField):
            if other.grid is not self.grid:
                raise ValueError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return GridField(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridField(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return GridField(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return GridField(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GridField(self.grid, self.values / self._other(other))

    def __neg__(self):
        return GridField(self.grid, -self.values)

    def conj(self) -> "GridField":
        return GridField(self.grid, np.conj(self.values))

    def abs(self) -> np.ndarray:
        return np.abs(self.values)


def _rect_disc_overlap(x0, x1, y0, y1, c, R):
    """Area and centroid of ``[x0,x1]x[y0,y1]`` intersected with a disc."""
    cx, cy = c.real, c.imag

    def chord(x):
        s = math.sqrt(max(R * R - (x - cx) ** 2, 0.0))
        lo, hi = max(y0, cy - s), min(y1, cy + s)
        return lo, hi

    def length(x):
        lo, hi = chord(x)
        return max(hi - lo, 0.0)

    def xmoment(x):
        return x * length(x)

    def ymoment(x):
        lo, hi = chord(x)
        return 0.5 * (hi * hi - lo * lo) if hi > lo else 0.0

    a, b = max(x0, cx - R), min(x1, cx + R)
    if b <= a:
        return 0.0, complex(0.5 * (x0 + x1), 0.5 * (y0 + y1))
    breaks = []
    for y in (y0, y1):
        if abs(y - cy) < R:
            s = math.sqrt(R * R - (y - cy) ** 2)
            breaks += [cx - s, cx + s]
    pts = sorted(p for p in breaks if a < p < b)
    kw = dict(points=pts or None, limit=200, epsabs=1e-15, epsrel=1e-13)
    area = _quad.quad(length, a, b, **kw)[0]
    if area <= 0:
        return 0.0, complex(0.5 * (x0 + x1), 0.5 * (y0 + y1))
    mx = _quad.quad(xmoment, a, b, **kw)[0]
    my = _quad.quad(ymoment, a, b, **kw)[0]
    return area, complex(mx / area, my / area)


def _star_cells(z, rect, rings, angles, grading):
    """Graded star subdivision of a rectangle about an interior point."""
    xa, xb, ya, yb = rect
    corners = [complex(xa, ya), complex(xb, ya), complex(xb, yb), complex(xa, yb)]
    radial = [0.0] + [grading ** (rings - 1 - l) for l in range(rings)]
    per_side = [angles // 4 + (1 if s < angles % 4 else 0) for s in range(4)]
    nodes, weights, polys = [], [], []
    for side in range(4):
        ca, cb = corners[side], corners[(side + 1) % 4]
        jac = abs(((ca - z).conjugate() * (cb - ca)).imag)
        m = per_side[side]
        for l in range(rings):
            s0, s1 = radial[l], radial[l + 1]
            for t in range(m):
                t0, t1 = t / m, (t + 1) / m
                e0 = ca - z + t0 * (cb - ca)
                e1 = ca - z + t1 * (cb - ca)
                em = ca - z + 0.5 * (t0 + t1) * (cb - ca)
                nodes.append(z + 0.5 * (s0 + s1) * em)
                weights.append(0.5 * jac * (s1 * s1 - s0 * s0) * (t1 - t0))
                polys.append([z + s0 * e0, z + s1 * e0, z + s1 * e1, z + s0 * e1])
    inner = min(abs(c - z) for c in corners) * radial[1]
    return nodes, weights, polys, inner


def make_grid(domain: Domain, n: int, singular_points: Sequence[complex] = (),
              rings: int = 6, angles: int = 32, block: int = 2,
              grading: float = 0.5) -> Grid:
    """Build the quadrature grid.

    Parameters
    ----------
    domain : Domain
    n : int
        Number of lattice cells per side (``n >= 8``).
    singular_points : sequence of complex
    rings : int
        Number of geometrically graded layers of the star subdivision that
        replaces the ``(2*block+1)**2`` lattice cells around each singular
        point. ``rings=0`` keeps the plain lattice.
    angles : int
        Angular subdivisions of each layer (split over the four sides).
    grading : float
        Ratio between successive layer radii.
    """
    if n < 8:
        raise ValueError("grid resolution n must be at least 8")
    points = tuple(complex(p) for p in singular_points)
    x0, x1, y0, y1 = domain.bounds
    hx, hy = (x1 - x0) / n, (y1 - y0) / n
    h = max(hx, hy)
    for j, p in enumerate(points):
        dist = float(domain.boundary_distance(p))
        if dist < max(domain.margin, 2 * h):
            raise GeometryError(
                f"singular point {j + 1} at {p} is outside the domain or closer than "
                f"max(margin, 2h) = {max(domain.margin, 2 * h):.4g} to the boundary")
    for a in range(len(points)):
        for b in range(a + 1, len(points)):
            if abs(points[a] - points[b]) == 0:
                raise GeometryError("singular points must be distinct")

    # per-cell status: 2 full, 1 partial, 0 outside
    status = np.full((n, n), 2, dtype=np.int8)
    clip = {}
    if domain.shape == "disc":
        c, R = domain.center, domain.radius
        for k in range(n):
            ya, yb = y0 + k * hy, y0 + (k + 1) * hy
            for i in range(n):
                xa, xb = x0 + i * hx, x0 + (i + 1) * hx
                far = max(abs(xa - c.real), abs(xb - c.real)) ** 2 + \
                    max(abs(ya - c.imag), abs(yb - c.imag)) ** 2
                nx_ = min(max(c.real, xa), xb) - c.real
                ny_ = min(max(c.imag, ya), yb) - c.imag
                if far <= R * R:
                    continue
                if nx_ * nx_ + ny_ * ny_ >= R * R:
                    status[k, i] = 0
                    continue
                area, cen = _rect_disc_overlap(xa, xb, ya, yb, c, R)
                if area <= 0:
                    status[k, i] = 0
                else:
                    status[k, i] = 1
                    clip[(k, i)] = (area, cen)

    removed = np.zeros((n, n), dtype=bool)
    blocks = []
    if rings > 0:
        for j, p in enumerate(points):
            i0 = min(max(int(math.floor((p.real - x0) / hx)), 0), n - 1)
            k0 = min(max(int(math.floor((p.imag - y0) / hy)), 0), n - 1)
            ia, ib, ka, kb = i0 - block, i0 + block, k0 - block, k0 + block
            if ia < 0 or ka < 0 or ib >= n or kb >= n:
                raise GeometryError(f"refinement block of point {j + 1} leaves the lattice")
            sub = status[ka:kb + 1, ia:ib + 1]
            if np.any(sub != 2) or np.any(removed[ka:kb + 1, ia:ib + 1]):
                raise GeometryError(
                    f"refinement block of point {j + 1} overlaps the boundary or another block")
            removed[ka:kb + 1, ia:ib + 1] = True
            blocks.append((x0 + ia * hx, x0 + (ib + 1) * hx, y0 + ka * hy, y0 + (kb + 1) * hy))

    nodes, weights, kinds, polys = [], [], [], []
    lattice = np.full((n, n), -1, dtype=np.int64)
    full_area = hx * hy
    for k in range(n):
        yc = y0 + (k + 0.5) * hy
        for i in range(n):
            st = status[k, i]
            if st == 0 or removed[k, i]:
                continue
            xc = x0 + (i + 0.5) * hx
            zc = complex(xc, yc)
            rect = [complex(xc - hx / 2, yc - hy / 2), complex(xc + hx / 2, yc - hy / 2),
                    complex(xc + hx / 2, yc + hy / 2), complex(xc - hx / 2, yc + hy / 2)]
            if st == 2:
                lattice[k, i] = len(nodes)
                nodes.append(zc)
                weights.append(full_area)
                kinds.append(LATTICE)
                polys.append(rect)
                continue
            area, cen = clip[(k, i)]
            if domain.contains(zc):
                lattice[k, i] = len(nodes)
                nodes.append(zc)
                kinds.append(LATTICE)
            else:
                nodes.append(cen)
                kinds.append(CLIPPED)
            weights.append(area)
            polys.append([complex("nan")] * 4)

    ring_width = []
    for p, rect in zip(points if rings > 0 else (), blocks):
        rn, rw, rp, inner = _star_cells(p, rect, rings, angles, grading)
        nodes += rn
        weights += rw
        polys += rp
        kinds += [RING] * len(rn)
        ring_width.append(inner)

    grid = Grid(
        domain=domain, n=n,
        nodes=np.array(nodes, dtype=complex),
        weights=np.array(weights, dtype=float),
        kinds=np.array(kinds, dtype=np.int8),
        lattice=lattice,
        polygons=np.array(polys, dtype=complex).reshape(-1, 4),
        hx=hx, hy=hy, points=points,
        rings=rings if points else 0, angles=angles if points else 0,
        block=block if points else 0, grading=grading,
        ring_width=tuple(ring_width),
    )
    return grid


def integrate(f: GridField) -> complex:
    """Quadrature sum ``sum(values * weights)``."""
    return complex(np.dot(f.values, f.grid.weights))


def wirtinger_dbar(f: GridField) -> GridField:
    """Centred-difference approximation of ``d/dzbar = (d/dx + i d/dy) / 2``.

    Defined on lattice nodes whose four lattice neighbours exist; every
    other node (one-cell border, ring and clipped nodes, neighbours of
    removed cells) carries NaN.
    """
    g = f.grid
    if g.n < 3:
        raise ValueError("grid too small for centred differences")
    lat = g.lattice
    vals = np.full(lat.shape, np.nan + 0j)
    ok = lat >= 0
    vals[ok] = f.values[lat[ok]]
    dx = np.full(lat.shape, np.nan + 0j)
    dy = np.full(lat.shape, np.nan + 0j)
    dx[:, 1:-1] = (vals[:, 2:] - vals[:, :-2]) / (2 * g.hx)
    dy[1:-1, :] = (vals[2:, :] - vals[:-2, :]) / (2 * g.hy)
    d = 0.5 * (dx + 1j * dy)
    out = np.full(g.size, np.nan + 0j)
    out[lat[ok]] = d[ok]
    return GridField(g, out)


def dbar_mask(grid: Grid) -> np.ndarray:
    """Nodes at which :func:`wirtinger_dbar` is defined."""
    lat = grid.lattice
    ok = lat >= 0
    inner = np.zeros_like(ok)
    inner[1:-1, 1:-1] = ok[1:-1, 1:-1] & ok[2:, 1:-1] & ok[:-2, 1:-1] & ok[1:-1, 2:] & ok[1:-1, :-2]
    mask = np.zeros(grid.size, dtype=bool)
    mask[lat[inner]] = True
    return mask


def verification_mask(grid: Grid, exclusion: float | None = None,
                      margin: float | None = None, points=None) -> np.ndarray:
    """Lattice nodes used by residual metrics.

    Nodes must carry a finite-difference derivative, lie at least
    ``exclusion`` (default ``4h``) from every singular point and at least
    ``margin`` (default ``domain.margin``) from the boundary.
    """
    mask = dbar_mask(grid)
    pts = grid.points if points is None else points
    excl = 4 * grid.h if exclusion is None else exclusion
    for p in pts:
        mask &= np.abs(grid.nodes - p) >= excl
    marg = grid.domain.margin if margin is None else margin
    mask &= grid.domain.boundary_distance(grid.nodes) >= marg
    return mask


def check_finite(f: GridField, what: str = "field"):
    bad = ~np.isfinite(f.values)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise NonFiniteError(
            f"{what} is not finite at node {k} (z = {f.grid.nodes[k]:.6g})", node=k)


def holder_estimate(f: GridField, sample_pairs: int = 8, exclusion: Sequence = (),
                    scales: int = 12, mask: np.ndarray | None = None) -> float:
    """Empirical Hoelder exponent from the modulus of continuity.

    For geometric distances ``d`` between ``~h`` and a quarter of the
    domain diameter, every admissible node is paired with the node
    nearest to ``z + d e^{i phi}`` for ``sample_pairs`` directions ``phi``.
    The upper envelope ``omega(d) = max |f(z1) - f(z2)|`` is regressed
    against ``|z1 - z2|`` on a log-log scale and the slope returned.

    ``exclusion`` is a sequence of ``(center, radius)`` discs whose nodes
    are ignored. A constant field returns ``inf``.
    """
    g = f.grid
    keep = np.isfinite(f.values)
    if mask is not None:
        keep &= mask
    for c, r in exclusion:
        keep &= np.abs(g.nodes - c) >= r
    idx = np.flatnonzero(keep)
    if idx.size < 15:
        raise ValueError("fewer than 15 admissible nodes for the Hoelder estimate")
    z = g.nodes[idx]
    v = f.values[idx]
    if np.ptp(v.real) == 0 and np.ptp(v.imag) == 0:
        return math.inf
    tree = cKDTree(np.column_stack([z.real, z.imag]))
    dmin, dmax = 1.5 * g.h, g.domain.diameter / 4
    phis = 2 * np.pi * (np.arange(sample_pairs) + 0.5) / sample_pairs
    dist_all, osc_all = [], []
    for d in np.geomspace(dmin, dmax, scales):
        best_d, best_o = 0.0, -1.0
        for phi in phis:
            q = z + d * np.exp(1j * phi)
            _, nb = tree.query(np.column_stack([q.real, q.imag]))
            sep = np.abs(z[nb] - z)
            ok = (sep > 0) & (sep <= dmax)
            if not np.any(ok):
                continue
            osc = np.abs(v[nb] - v)[ok]
            k = int(np.argmax(osc))
            if osc[k] > best_o:
                best_o, best_d = osc[k], sep[ok][k]
        if best_o > 0:
            dist_all.append(best_d)
            osc_all.append(best_o)
    if len(dist_all) < 3:
        return math.inf
    slope = np.polyfit(np.log(dist_all), np.log(osc_all), 1)[0]
    return float(slope)


def field_to_rows(f: GridField) -> np.ndarray:
    z = f.grid.nodes
    return np.column_stack([z.real, z.imag, f.values.real, f.values.imag])
