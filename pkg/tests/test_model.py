import numpy as np
import pytest

from vekua import PeriodicProfile, SingularPoint, find_exponents, make_grid, model_solution, monodromy
from vekua.model import closed_form_constant, effective_model_profile, model_dbar, model_values

ZERO = PeriodicProfile.constant(0)
HALF = PeriodicProfile.constant(0.5)
MIXED = PeriodicProfile.from_function(lambda t: 0.5 + 0.2 * np.exp(1j * t))

# frozen from a 2048-step run; agrees with a 4096-step run to 1e-9
MIXED_EXPONENTS = [0.29554776, 0.85662368, 1.36978867, 1.3940489, 2.23231766, 2.23235065]


@pytest.fixture(scope="module")
def mixed():
    return find_exponents(MIXED, 3.0)


def test_zero_profile_is_a_rotation():
    lam = 0.3
    M = monodromy(lam, ZERO)
    c, s = np.cos(2 * np.pi * lam), np.sin(2 * np.pi * lam)
    assert np.allclose(M, [[c, -s], [s, c]], atol=1e-10)


def test_monodromy_is_identity_at_integers_for_zero_profile():
    for lam in (1.0, 2.0):
        assert np.allclose(monodromy(lam, ZERO), np.eye(2), atol=1e-9)


def test_monodromy_is_unimodular():
    for lam in (0.2, 0.9, 2.4):
        assert abs(np.linalg.det(monodromy(lam, MIXED)) - 1) < 1e-10


def test_zero_profile_spectrum_is_integers_with_multiplicity_two():
    sp = find_exponents(ZERO, 3.5)
    assert np.allclose(sp.exponents, [1, 2, 3], atol=1e-8)
    assert sp.multiplicities == [2, 2, 2]
    a, b = sp.profiles[0]
    assert abs(np.real(np.mean(a.samples * np.conj(b.samples)))) < 1e-12


@pytest.mark.parametrize("m", [0, 1, 2])
def test_constant_profile_matches_closed_form(m):
    sp = find_exponents(HALF, 2.5)
    assert sp.exponents[m] == pytest.approx(closed_form_constant(0.5, m), abs=1e-8)


def test_frozen_exponents(mixed):
    assert np.allclose(mixed.exponents, MIXED_EXPONENTS, rtol=0, atol=5e-8)
    assert max(mixed.residuals) < 1e-8


def test_profiles_never_vanish(mixed):
    assert min(np.min(np.abs(p[0].samples)) for p in mixed.profiles) > 1e-3


def test_spectrum_is_invariant_under_rotation_and_phase(mixed):
    a = 0.7
    rotated = PeriodicProfile.from_function(lambda t: np.exp(-1j * a) * (0.5 + 0.2 * np.exp(1j * (t + a))))
    phased = PeriodicProfile(MIXED.samples * np.exp(1.1j))
    for q in (rotated, phased):
        assert np.allclose(find_exponents(q, 3.0).exponents, mixed.exponents, atol=1e-8)


def test_step_doubling_changes_little(mixed):
    fine = find_exponents(MIXED, 3.0, steps=4096)
    assert np.max(np.abs(fine.exponents - mixed.exponents)) < 1e-8


def test_model_solution_satisfies_the_model_equation(mixed):
    z = np.array([0.3 + 0.1j, -0.2 + 0.4j, 0.05 - 0.3j])
    t = np.mod(np.angle(z), 2 * np.pi)
    for k in range(len(mixed)):
        W = model_values(mixed, k, z)
        assert np.max(np.abs(model_dbar(mixed, k, z) - MIXED(t) / np.abs(z) * np.conj(W))) < 1e-8


def test_zero_profile_model_solution_is_holomorphic_power(disc):
    sp = find_exponents(ZERO, 1.5)
    g = make_grid(disc, 16, [0j])
    W = model_solution(sp, 0, 0j, g).values
    # profile e^{i theta} up to a constant phase
    c = W[np.argmax(np.abs(g.nodes))] / g.nodes[np.argmax(np.abs(g.nodes))]
    assert abs(abs(c) - 1) < 1e-10
    assert np.max(np.abs(W - c * g.nodes)) < 1e-9


def test_smallest_at_least(mixed):
    assert mixed.smallest_at_least(1.0) == 2
    with pytest.raises(ValueError):
        mixed.smallest_at_least(10)


def test_effective_profile_scales_by_the_other_factors():
    pts = [SingularPoint(-0.5), SingularPoint(0.5)]
    q = PeriodicProfile.constant(1.0)
    eff = effective_model_profile(pts, 1, q)
    assert np.allclose(eff.samples, np.exp(-1j * eff.thetas) / 1.0)
    eff0 = effective_model_profile(pts, 0, q)
    assert np.allclose(eff0.samples, -np.exp(-1j * eff0.thetas))
