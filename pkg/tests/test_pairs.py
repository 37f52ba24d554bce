import logging
import math

import numpy as np
import pytest

from core import kaon_core as kc
from core import pairs
from core.errors import BasisError, TimeOrderError
from core.kaon_core import KaonConstants
from core.medium import MediumParams
from core.pairs import TwoKaonVec


@pytest.fixture
def c():
    return KaonConstants()


def test_singlet_in_free_basis(c):
    state = pairs.singlet(c, kc.FREE_SPACE)
    np.testing.assert_allclose(state.amps, np.array([0, 1, -1, 0]) / np.sqrt(2), atol=1e-15)
    assert pairs.singlet_prefactor(c) == pytest.approx(1 / np.sqrt(2))


def test_singlet_is_antisymmetric(c):
    c = c.with_eps(0.02 + 0.01j)
    state = pairs.singlet(c)
    np.testing.assert_allclose(state.swapped().amps, -state.amps, atol=1e-15)


def test_pair_trace_at_one_lifetime(c):
    state = pairs.two_times_strangeness(1.0, 1.0, c)
    assert pairs.pair_norm(state) ** 2 == pytest.approx(0.36724, abs=1e-5)
    assert pairs.pair_norm(state) ** 2 == pytest.approx(math.exp(-2 * c.gamma))


def test_two_times_relative_phase(c):
    state = pairs.evolve_two_times(pairs.singlet(c, kc.FREE_SPACE), 1.7, 0.4, c)
    dt = 1.7 - 0.4
    ratio = state.amps[2] / state.amps[1]
    assert ratio == pytest.approx(-np.exp(-(1j * c.delta_m + 0.5 * c.delta_gamma) * dt))
    assert state.dt == pytest.approx(dt)


def test_two_times_equal_time_like_strangeness_vanishes(c):
    state = pairs.two_times_strangeness(0.8, 0.8, c)
    assert abs(state.amps[0]) < 1e-15
    assert abs(state.amps[3]) < 1e-15


def test_time_reversal_rejected(c):
    state = pairs.evolve_two_times(pairs.singlet(c), 1.0, 1.0, c)
    with pytest.raises(TimeOrderError):
        pairs.evolve_two_times(state, 0.5, 2.0, c)


def test_inside_matter_pair_rejected(c):
    basis = kc.Basis.inside_matter(MediumParams.from_drive(0.1))
    with pytest.raises(BasisError):
        TwoKaonVec([0, 1, -1, 0], basis)


def test_thin_regenerator(c):
    m = MediumParams.from_regenerator(0.1, c)
    state, coeffs = pairs.regenerate_thin(pairs.singlet(c), m, 0.05, c)
    eta = coeffs.eta
    np.testing.assert_allclose(state.amps, np.array([eta, 1, -1, -eta]) / np.sqrt(2), atol=1e-15)
    assert coeffs.R_S == pytest.approx(eta)
    assert coeffs.R_L == pytest.approx(-eta)


def test_thin_regenerator_needs_fresh_pair(c):
    m = MediumParams.from_regenerator(0.1, c)
    evolved = pairs.evolve_two_times(pairs.singlet(c), 0.1, 0.1, c)
    with pytest.raises(TimeOrderError):
        pairs.regenerate_thin(evolved, m, 0.05, c)


@pytest.mark.parametrize('T', [1.0, 5.0, 50.0])
def test_propagated_coefficients_match_closed_form(c, T):
    m = MediumParams.from_regenerator(0.2 - 0.1j, c)
    regenerated, start = pairs.regenerate_thin(pairs.singlet(c), m, 0.05, c)
    phi, coeffs = pairs.propagate_and_normalize(regenerated, T, c)
    expected = pairs.closed_form_coefficients(start.eta, T, c)
    assert coeffs.eta == pytest.approx(start.eta)
    assert coeffs.R_L == pytest.approx(expected.R_L, rel=1e-12)
    assert coeffs.R_S == pytest.approx(expected.R_S, rel=1e-12)
    assert pairs.pair_norm(phi) == pytest.approx(1.0)
    np.testing.assert_allclose(phi.amps, pairs.normalized_phi(coeffs.R_L, coeffs.R_S).amps, atol=1e-14)


def test_long_propagation_favours_long_lived_pair(c):
    m = MediumParams.from_regenerator(0.2, c)
    regenerated, _ = pairs.regenerate_thin(pairs.singlet(c), m, 0.05, c)
    early, _ = pairs.propagate_and_normalize(regenerated, 1.0, c)
    late, _ = pairs.propagate_and_normalize(regenerated, 20.0, c)
    assert abs(late.amps[3]) > abs(early.amps[3])
    assert abs(late.amps[0]) < abs(early.amps[0])


def test_propagation_range_warning(c, caplog):
    m = MediumParams.from_regenerator(0.2, c)
    regenerated, _ = pairs.regenerate_thin(pairs.singlet(c), m, 0.05, c)
    with caplog.at_level(logging.WARNING):
        pairs.propagate_and_normalize(regenerated, 0.2, c)
    assert any('推荐区间' in r.getMessage() for r in caplog.records)
    with pytest.raises(TimeOrderError):
        pairs.propagate_and_normalize(regenerated, -1.0, c)
