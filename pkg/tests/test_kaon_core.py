import math

import numpy as np
import pytest

from core import kaon_core as kc
from core.errors import BasisError, ParameterError, TimeOrderError
from core.kaon_core import KaonConstants, KaonVec


@pytest.fixture
def c():
    return KaonConstants()


def test_default_constants(c):
    assert c.gamma_S == 1.0
    assert c.gamma_L == pytest.approx(8.954e-11 / 5.17e-8)
    assert c.delta_m == pytest.approx(0.47)
    assert c.gamma == pytest.approx(0.5 * (1.0 + c.gamma_L))


@pytest.mark.parametrize('kwargs', [
    {'gamma_L': 2.0},
    {'m_L': -0.1},
    {'lam': -0.01},
    {'gamma_S': float('nan')},
])
def test_invalid_constants(kwargs):
    with pytest.raises(ParameterError):
        KaonConstants(**kwargs)


def test_mass_difference_from_mev():
    assert kc.UnitSystem().energy_to_natural(3.49e-12) == pytest.approx(0.4748, abs=1e-4)
    c = KaonConstants.from_physical()
    assert c.delta_m == pytest.approx(0.4748, abs=1e-4)
    assert c.gamma_S == pytest.approx(1.0)
    assert c.gamma_L == pytest.approx(8.954e-11 / 5.17e-8)


@pytest.mark.parametrize('to_natural, from_natural, physical', [
    ('energy_to_natural', 'energy_from_natural', [3.49e-12, 1.84e-12, 7.35e-12]),
    ('time_to_natural', 'time_from_natural', [8.954e-11, 5.17e-8, 1e-9]),
    ('width_to_natural', 'width_from_natural', [1 / 8.954e-11, 1 / 5.17e-8, 3.2e6]),
])
def test_unit_conversions_round_trip(to_natural, from_natural, physical):
    units = kc.UnitSystem()
    values = np.array(physical)
    back = getattr(units, from_natural)(getattr(units, to_natural)(values))
    np.testing.assert_allclose(back, values, rtol=1e-12, atol=0)
    natural = np.array([0.0, 0.47, 1.0, 50.0])
    again = getattr(units, to_natural)(getattr(units, from_natural)(natural))
    np.testing.assert_allclose(again, natural, rtol=1e-12, atol=0)


def test_time_and_width_scales():
    units = kc.UnitSystem()
    assert units.time_to_natural(8.954e-11) == pytest.approx(1.0, rel=1e-12)
    assert units.time_from_natural(1.0) == pytest.approx(8.954e-11, rel=1e-12)
    assert units.width_to_natural(1 / 5.17e-8) == pytest.approx(8.954e-11 / 5.17e-8, rel=1e-12)
    assert units.width_from_natural(1.0) == pytest.approx(1 / 8.954e-11, rel=1e-12)


def test_lambda_from_mev():
    c = KaonConstants.from_physical(lambda_mev=1.84e-12)
    assert c.lam == pytest.approx(0.2503, abs=1e-4)


def test_probabilities_at_one_lifetime(c):
    assert kc.survival_prob(1.0, c) == pytest.approx(0.61168, abs=1e-5)
    assert kc.oscillation_prob(1.0, c) == pytest.approx(0.07139, abs=1e-5)
    assert kc.oscillation_frequency(c) == pytest.approx(0.074802, abs=1e-6)


def test_probabilities_at_zero(c):
    assert kc.survival_prob(0.0, c) == pytest.approx(1.0)
    assert kc.oscillation_prob(0.0, c) == pytest.approx(0.0, abs=1e-15)


def test_probabilities_match_amplitudes(c):
    t = np.linspace(0.0, 6.0, 25)
    amps = kc.evolve_strangeness_state('K0', t, c)
    np.testing.assert_allclose(np.abs(amps[:, 0]) ** 2, kc.survival_prob(t, c), atol=1e-14)
    np.testing.assert_allclose(np.abs(amps[:, 1]) ** 2, kc.oscillation_prob(t, c), atol=1e-14)
    anti = kc.evolve_strangeness_state('K0bar', t, c)
    np.testing.assert_allclose(np.abs(anti[:, 0]) ** 2, kc.anti_oscillation_prob(t, c), atol=1e-14)
    np.testing.assert_allclose(np.abs(anti[:, 1]) ** 2, kc.anti_survival_prob(t, c), atol=1e-14)


@pytest.mark.parametrize('eps', [0.0, 0.05, 0.002 + 0.002j])
def test_evolve_free_matches_closed_form(eps):
    c = KaonConstants(eps=eps)
    evolved = kc.evolve_free(KaonVec([1, 0]), 1.3, c)
    np.testing.assert_allclose(evolved.amps, kc.evolve_strangeness_state('K0', 1.3, c), atol=1e-13)
    assert evolved.t == pytest.approx(1.3)
    assert evolved.basis == kc.STRANGENESS


@pytest.mark.parametrize('eps', [0.0, 0.05, 0.1j])
def test_heff_spectrum(eps):
    c = KaonConstants(eps=eps)
    spectrum = np.sort_complex(np.linalg.eigvals(kc.build_heff(c)))
    np.testing.assert_allclose(spectrum, np.sort_complex([c.mu_S, c.mu_L]), atol=1e-12)
    quasi = np.sort_complex(np.linalg.eigvals(kc.build_quasispin_h(c).matrix()))
    np.testing.assert_allclose(quasi, spectrum, atol=1e-10)


def test_free_space_overlap():
    assert kc.free_space_overlap(KaonConstants()) == pytest.approx(0.0, abs=1e-15)
    assert kc.free_space_overlap(KaonConstants(eps=0.05)).real == pytest.approx(0.09975, abs=1e-5)


def test_cp_eigenstates():
    k1, k2 = kc.cp_eigenstates()
    cp = kc.cp_operator()
    np.testing.assert_allclose(cp @ k1.amps, k1.amps)
    np.testing.assert_allclose(cp @ k2.amps, -k2.amps)
    np.testing.assert_allclose(kc.strangeness_operator() @ [1, 0], [1, 0])


def test_basis_round_trip(c):
    c = c.with_eps(0.03 + 0.01j)
    v = KaonVec([0.6, 0.8j])
    back = kc.to_basis(kc.to_basis(v, kc.FREE_SPACE, c), kc.STRANGENESS, c)
    np.testing.assert_allclose(back.amps, v.amps, atol=1e-14)


def test_inside_matter_basis_requires_medium():
    with pytest.raises(BasisError):
        kc.Basis(kc.BasisKind.INSIDE_MATTER)


def test_negative_time_rejected(c):
    with pytest.raises(TimeOrderError):
        kc.survival_prob(-0.1, c)
    with pytest.raises(TimeOrderError):
        kc.evolve_free(KaonVec([1, 0]), -1.0, c)


def test_decay_of_free_states(c):
    s = kc.evolve_free(KaonVec([1, 0], kc.FREE_SPACE), 2.0, c)
    assert s.norm() ** 2 == pytest.approx(math.exp(-2.0))
