"""Compiled inner loops for the area Cauchy sums.

All loops visit sources in node order for every target, so results are
bit-reproducible.
"""

import math

import numba as nb
import numpy as np

SKIP, CORRECTED = 0, 1


@nb.njit(cache=True)
def polygon_cauchy(poly, z):
    """Exact ``int_P dA(zeta) / (zeta - z)`` over a convex polygon.

    By Green's formula the area integral equals
    ``(1/2i) oint (conj(zeta) - conj(z)) / (zeta - z) dzeta``; per edge
    ``a -> a + d`` with ``alpha = a - z`` this collapses to
    ``Im(conj(alpha) d) / d * Log((alpha + d) / alpha)`` after the
    ``conj(d)`` terms cancel around the closed boundary.
    """
    acc = 0j
    m = poly.shape[0]
    for e in range(m):
        a = poly[e]
        b = poly[(e + 1) % m]
        d = b - a
        if d == 0:
            continue
        alpha = a - z
        im = (alpha.conjugate() * d).imag
        if im == 0.0:
            continue
        ratio = (alpha + d) / alpha
        acc += im / d * complex(math.log(abs(ratio)), math.atan2(ratio.imag, ratio.real))
    return acc


@nb.njit(cache=True)
def _inside(poly, z):
    m = poly.shape[0]
    sgn = 0
    for e in range(m):
        a = poly[e]
        b = poly[(e + 1) % m]
        c = ((b - a).conjugate() * (z - a)).imag
        if c > 0:
            if sgn < 0:
                return False
            sgn = 1
        elif c < 0:
            if sgn > 0:
                return False
            sgn = -1
    return True


@nb.njit(cache=True)
def _near_coef(z, k, polys, mode):
    if mode == CORRECTED:
        return polygon_cauchy(polys[k], z)
    if _inside(polys[k], z):
        return 0j
    return complex(np.nan, 0.0)


@nb.njit(cache=True)
def cauchy_apply(targets, nodes, weights, polys, has_poly, radius, values, mode, near):
    """``sum_k c_k(z_i) values_k`` with ``c_k(z) ~ int_cell dA / (zeta - z)``."""
    nt = targets.shape[0]
    ns = nodes.shape[0]
    xs = nodes.real.copy()
    ys = nodes.imag.copy()
    vr = values.real.copy()
    vi = values.imag.copy()
    near2 = (near * radius) ** 2
    out = np.zeros(nt, dtype=np.complex128)
    for i in range(nt):
        zx = targets[i].real
        zy = targets[i].imag
        acc_r = 0.0
        acc_i = 0.0
        for k in range(ns):
            dx = xs[k] - zx
            dy = ys[k] - zy
            r2 = dx * dx + dy * dy
            if has_poly[k] and r2 <= near2[k]:
                c = _near_coef(targets[i], k, polys, mode)
                if c.real != c.real:
                    c = weights[k] / complex(dx, dy)
                acc_r += c.real * vr[k] - c.imag * vi[k]
                acc_i += c.real * vi[k] + c.imag * vr[k]
                continue
            if r2 == 0.0:
                continue
            s = weights[k] / r2
            acc_r += s * (dx * vr[k] + dy * vi[k])
            acc_i += s * (dx * vi[k] - dy * vr[k])
        out[i] = complex(acc_r, acc_i)
    return out


@nb.njit(cache=True)
def cauchy_matrix(targets, nodes, weights, polys, has_poly, radius, mode, near):
    nt = targets.shape[0]
    ns = nodes.shape[0]
    near2 = (near * radius) ** 2
    out = np.empty((nt, ns), dtype=np.complex128)
    for i in range(nt):
        z = targets[i]
        for k in range(ns):
            d = nodes[k] - z
            r2 = d.real * d.real + d.imag * d.imag
            if has_poly[k] and r2 <= near2[k]:
                c = _near_coef(z, k, polys, mode)
                if c.real != c.real:
                    c = weights[k] / d
                out[i, k] = c
            elif r2 == 0.0:
                out[i, k] = 0j
            else:
                out[i, k] = weights[k] * d.conjugate() / r2
    return out
