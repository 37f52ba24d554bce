import math

import numpy as np
import pytest

from core import observables as obs
from core.errors import ParameterError, TimeOrderError, UnidentifiableError
from core.kaon_core import KaonConstants
from core.observables import AsymmetrySample


@pytest.fixture
def c():
    return KaonConstants()


def test_asymmetry_reference_value(c):
    assert obs.asymmetry_qm(1.0, 0.0, c) == pytest.approx(0.791, abs=1e-3)
    assert obs.asymmetry_qm(0.0, 1.0, c) == obs.asymmetry_qm(1.0, 0.0, c)
    assert obs.asymmetry_qm(0.3, 0.3, c) == pytest.approx(1.0)


def test_effective_zeta_reference_value(c):
    assert obs.effective_zeta(0.55, 0.55, c.with_lambda(0.25031)) == pytest.approx(0.12861, abs=1e-5)


@pytest.mark.parametrize('t', [0.0, 0.5, 2.0, 5.0])
def test_perfect_anticorrelation_without_decoherence(c, t):
    assert obs.joint_probability('K0', t, 'K0', t, c) == pytest.approx(0.0, abs=1e-15)
    assert obs.joint_probability('K0bar', t, 'K0bar', t, c) == pytest.approx(0.0, abs=1e-15)
    unlike = obs.joint_probability('K0', t, 'K0bar', t, c)
    assert unlike == pytest.approx(0.5 * math.exp(-2 * c.gamma * t))


def test_like_strangeness_with_decoherence(c):
    c = c.with_lambda(0.25)
    t = 1.5
    expected = 0.25 * math.exp(-2 * c.gamma * t) * (1 - math.exp(-0.25 * t))
    assert obs.joint_probability('K0', t, 'K0', t, c) == pytest.approx(expected, abs=1e-14)


@pytest.mark.parametrize('outcome_l', obs.OUTCOMES)
@pytest.mark.parametrize('outcome_r', obs.OUTCOMES)
@pytest.mark.parametrize('t_l, t_r', [(0.4, 1.1), (2.0, 0.3), (0.8, 0.8)])
def test_joint_probability_matches_density_route(c, outcome_l, outcome_r, t_l, t_r):
    c = c.with_lambda(0.3)
    closed = obs.joint_probability(outcome_l, t_l, outcome_r, t_r, c)
    density = obs.joint_probability_from_density(outcome_l, t_l, outcome_r, t_r, c)
    assert density == pytest.approx(closed, abs=1e-13)


def test_raw_right_time_variant(c):
    c = c.with_lambda(0.3)
    early_left = obs.joint_probability('K0', 0.5, 'K0bar', 1.5, c, raw_tr=True)
    assert early_left < obs.joint_probability('K0', 0.5, 'K0bar', 1.5, c)
    assert obs.joint_probability('K0', 1.5, 'K0bar', 0.5, c, raw_tr=True) == pytest.approx(
        obs.joint_probability('K0', 1.5, 'K0bar', 0.5, c))


@pytest.mark.parametrize('lam', [0.0, 0.25])
def test_asymmetry_ratio_equals_closed_form(c, lam):
    c = c.with_lambda(lam)
    grid = np.linspace(0.0, 4.5, 10)
    t_l, t_r = np.meshgrid(grid, grid)
    np.testing.assert_allclose(obs.asymmetry_from_probabilities(t_l, t_r, c),
                               obs.asymmetry_decohered(t_l, t_r, c), atol=1e-12)


def test_asymmetry_uses_first_detection_time(c):
    c = c.with_lambda(0.4)
    value = obs.asymmetry_decohered(2.0, 0.5, c)
    assert value == pytest.approx(obs.asymmetry_qm(2.0, 0.5, c) * math.exp(-0.4 * 0.5))


def test_correlation_report(c):
    report = obs.correlation_report(1.0, 0.55, c.with_lambda(0.25031))
    assert report.A_lambda == pytest.approx(report.A_qm * (1 - report.zeta))
    assert report.P_like > 0


def test_unknown_outcome(c):
    with pytest.raises(ParameterError):
        obs.joint_probability('K+', 1.0, 'K0', 1.0, c)
    with pytest.raises(TimeOrderError):
        obs.joint_probability('K0', -1.0, 'K0', 1.0, c)


def test_reference_grid():
    grid = obs.reference_grid()
    assert len(grid) == 200
    assert all(t_l >= t_r > 0 for t_l, t_r in grid)


def test_synthesis_is_reproducible(c):
    c = c.with_lambda(0.25)
    grid = obs.reference_grid()
    first = obs.synthesize_asymmetry_data(c, grid, 0.01, seed=7)
    second = obs.synthesize_asymmetry_data(c, grid, 0.01, seed=7)
    assert first == second
    other = obs.synthesize_asymmetry_data(c, grid, 0.01, seed=8)
    assert first != other
    assert all(s.sigma == 0.01 for s in first)


def test_noiseless_synthesis(c):
    c = c.with_lambda(0.25)
    samples = obs.synthesize_asymmetry_data(c, [(1.0, 0.5)], 0.0, seed=1)
    assert samples[0].value == pytest.approx(obs.asymmetry_decohered(1.0, 0.5, c))
    assert samples[0].sigma == 1.0
    with pytest.raises(ParameterError):
        obs.synthesize_asymmetry_data(c, [(1.0, 0.5)], -0.1, seed=1)


def test_fit_recovers_lambda_from_clean_data(c):
    samples = obs.synthesize_asymmetry_data(c.with_lambda(0.25), obs.reference_grid(), 0.0, seed=1)
    result = obs.fit_lambda(samples, c)
    assert result.lambda_hat == pytest.approx(0.25, abs=0.25e-6)
    assert not result.at_boundary
    assert result.n_samples == 200
    assert result.sum_sq_residual == pytest.approx(0.0, abs=1e-12)
    assert result.zeta_hat[0.55] == pytest.approx(1 - math.exp(-0.25 * 0.55), abs=1e-6)
    assert result.lambda_mev == pytest.approx(0.25 * 6.58212e-22 / 8.954e-11, rel=1e-5)


@pytest.mark.parametrize('seed', range(20))
def test_fit_with_noise(c, seed):
    grid = obs.reference_grid()
    assert len(grid) == 200
    samples = obs.synthesize_asymmetry_data(c.with_lambda(0.25), grid, 0.01, seed=seed)
    result = obs.fit_lambda(samples, c)
    assert result.lambda_hat == pytest.approx(0.25, rel=0.05)
    assert 0 < result.lambda_sigma < 0.05
    assert len(result.residuals) == len(samples)


def test_fit_clamps_to_zero(c):
    samples = obs.synthesize_asymmetry_data(c, obs.reference_grid(), 0.0, seed=1)
    result = obs.fit_lambda(samples, c)
    assert result.lambda_hat == 0.0
    assert result.at_boundary


def test_fit_rejects_uninformative_data(c):
    with pytest.raises(UnidentifiableError):
        obs.fit_lambda([AsymmetrySample(1.0, 0.5, 0.7)], c)
    flat = [AsymmetrySample(1.0, 0.0, 0.79), AsymmetrySample(2.0, 0.0, 0.5)]
    with pytest.raises(UnidentifiableError):
        obs.fit_lambda(flat, c)


@pytest.mark.parametrize('kwargs', [
    {'t_l': 1.0, 't_r': 0.5, 'value': 0.5, 'sigma': 0.0},
    {'t_l': 1.0, 't_r': 0.5, 'value': float('inf')},
])
def test_sample_validation(kwargs):
    with pytest.raises(ParameterError):
        AsymmetrySample(**kwargs)


def test_negative_sample_time():
    with pytest.raises(TimeOrderError):
        AsymmetrySample(-1.0, 0.5, 0.5)


def test_reference_values():
    values = obs.reference_values({'reference': {'cplear_tau': 0.55}})
    assert values == {'cplear_tau': 0.55}
