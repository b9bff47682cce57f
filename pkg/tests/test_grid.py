import math

import numpy as np
import pytest

from vekua import Domain, GeometryError, GridField, holder_estimate, integrate, make_grid, \
    verification_mask, wirtinger_dbar
from vekua.grid import CLIPPED, LATTICE, RING, dbar_mask, field_to_rows


def test_rectangle_weights_sum_to_area():
    g = make_grid(Domain.rectangle(-1 - 0.5j, 2 + 1j), 20)
    assert g.weights.sum() == pytest.approx(4.5, rel=1e-13)
    assert np.all(g.kinds == LATTICE)


def test_disc_weights_sum_to_area(disc):
    g = make_grid(disc, 40)
    assert g.weights.sum() == pytest.approx(math.pi, rel=1e-10)
    assert np.any(g.kinds == CLIPPED)
    assert np.all(g.weights > 0)


def test_rings_keep_the_area_exact(disc):
    plain = make_grid(disc, 32)
    ringed = make_grid(disc, 32, [0.1 + 0.2j])
    assert ringed.weights.sum() == pytest.approx(plain.weights.sum(), rel=1e-12)
    ring = ringed.kinds == RING
    assert ring.sum() == 6 * 32
    assert ringed.local_size(0) < ringed.h / 4


def test_point_too_close_to_boundary(disc):
    with pytest.raises(GeometryError):
        make_grid(disc, 32, [0.97])
    with pytest.raises(GeometryError):
        make_grid(disc, 32, [2.0])


def test_dbar_of_linear_fields_is_exact(disc_grid_32):
    g = disc_grid_32
    mask = dbar_mask(g)
    zb = wirtinger_dbar(GridField(g, np.conj(g.nodes)))
    z = wirtinger_dbar(GridField(g, g.nodes.copy()))
    assert np.max(np.abs(zb.values[mask] - 1)) < 1e-12
    assert np.max(np.abs(z.values[mask])) < 1e-12
    assert np.all(np.isnan(zb.values[~mask]))


def test_dbar_second_order(disc):
    errs = []
    for n in (16, 32, 64):
        g = make_grid(disc, n)
        m = verification_mask(g)
        f = GridField(g, np.exp(g.nodes) * np.conj(g.nodes) ** 2)
        exact = 2 * np.exp(g.nodes) * np.conj(g.nodes)
        errs.append(np.max(np.abs(wirtinger_dbar(f).values[m] - exact[m])))
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


def test_verification_mask_respects_exclusion_and_margin(disc):
    g = make_grid(disc, 32, [0j])
    m = verification_mask(g, exclusion=0.3, margin=0.2)
    assert np.all(np.abs(g.nodes[m]) >= 0.3)
    assert np.all(np.abs(g.nodes[m]) <= 0.8)


def test_integrate_polynomial(disc):
    g = make_grid(disc, 64)
    # int_D |z|^2 dA = pi / 2
    assert integrate(GridField(g, np.abs(g.nodes) ** 2 + 0j)).real == pytest.approx(
        math.pi / 2, rel=2e-3)


def test_holder_estimate_of_power(disc):
    g = make_grid(disc, 64)
    f = GridField(g, np.sqrt(np.abs(g.nodes)) + 0j)
    assert holder_estimate(f) == pytest.approx(0.5, abs=0.1)
    smooth = GridField(g, g.nodes**2)
    assert holder_estimate(smooth) > 0.9
    assert holder_estimate(GridField(g, np.ones(g.size, complex))) == math.inf


def test_field_arithmetic_and_rows(disc_grid_32):
    g = disc_grid_32
    a = GridField.from_function(g, lambda z: z)
    b = (a * 2 - 1) / 2
    assert np.allclose(b.values, g.nodes - 0.5)
    assert np.allclose(a.conj().values, np.conj(g.nodes))
    rows = field_to_rows(a)
    assert rows.shape == (g.size, 4)
    with pytest.raises(ValueError):
        GridField(g, np.zeros(3))
