import logging
import math

import numpy as np
import pytest

from core import measures
from core import openquantum as oq
from core.errors import DimensionError, NormalizationError
from core.kaon_core import KaonConstants


@pytest.fixture
def c():
    return KaonConstants()


def werner(p: float) -> np.ndarray:
    singlet = np.array([0, 1, -1, 0]) / np.sqrt(2)
    return p * np.outer(singlet, singlet) + (1 - p) * np.eye(4) / 4


def test_binary_entropy():
    assert measures.binary_entropy(0.5) == pytest.approx(1.0)
    assert measures.binary_entropy(0.0) == 0.0
    assert measures.binary_entropy(1.0) == 0.0
    assert measures.binary_entropy(0.25) == pytest.approx(0.81128, abs=1e-5)


def test_normalized_entropy_at_ln2(c):
    c = c.with_lambda(math.log(2))
    rho = measures.normalize(oq.pair_closed_form(1.0, c))
    assert measures.von_neumann_entropy(rho) == pytest.approx(0.81128, abs=1e-5)


def test_entropy_of_pure_and_mixed_states():
    assert measures.von_neumann_entropy(oq.bell_singlet_support()) == pytest.approx(0.0, abs=1e-12)
    assert measures.von_neumann_entropy(np.eye(4) / 4) == pytest.approx(2.0)


def test_normalize_rejects_vanishing_trace():
    with pytest.raises(NormalizationError):
        measures.normalize(np.zeros((2, 2)))


def test_eof_from_concurrence():
    assert measures.eof_from_concurrence(0.5) == pytest.approx(0.35458, abs=1e-5)
    assert measures.eof_from_concurrence(1.0) == pytest.approx(1.0)
    assert measures.eof_from_concurrence(0.0) == 0.0
    assert measures.eof_from_fef(0.4) == 0.0


def test_concurrence_of_reference_states():
    assert measures.concurrence(oq.bell_singlet_support()) == pytest.approx(1.0, abs=1e-12)
    product = np.kron(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))
    assert measures.concurrence(product) == pytest.approx(0.0, abs=1e-12)
    # Werner 态在 p <= 1/3 时可分
    assert measures.concurrence(werner(0.6)) == pytest.approx(0.4, abs=1e-12)
    assert measures.concurrence(werner(0.3)) == 0.0


def test_concurrence_needs_two_qubits():
    with pytest.raises(DimensionError):
        measures.concurrence(np.eye(8) / 8)
    with pytest.raises(NormalizationError):
        measures.concurrence(np.eye(4) / 2)


@pytest.mark.parametrize('lam', [0.0, 0.1, 0.25, 0.59, 2.0])
def test_concurrence_of_decohered_pair(c, lam):
    c = c.with_lambda(lam)
    for t in (0.0, 1.0, 2.5, 5.0):
        rho = measures.normalize(oq.pair_closed_form(t, c))
        assert measures.concurrence(rho) == pytest.approx(math.exp(-lam * t), abs=1e-9)
        assert measures.concurrence_spin_flip_shortcut(rho) == pytest.approx(math.exp(-lam * t), abs=1e-9)


def test_fully_entangled_fraction_family(c):
    rho = measures.normalize(oq.pair_closed_form(1.0, c.with_lambda(0.5)))
    assert measures.fully_entangled_fraction(rho) == pytest.approx(0.5 * (1 + math.exp(-0.5)))


def test_fully_entangled_fraction_of_singlet():
    assert measures.fully_entangled_fraction(oq.bell_singlet_support()) == pytest.approx(1.0, abs=1e-12)
    assert measures.fully_entangled_fraction(oq.bell_singlet_support(), resolution=16) == pytest.approx(1.0, abs=1e-8)


def test_fully_entangled_fraction_closed_form_matches_search(c):
    rho = oq.embed_pair(measures.normalize(oq.pair_closed_form(1.0, c.with_lambda(0.5))))
    closed = measures.fully_entangled_fraction(rho)
    # 对角微扰使其离开态族, 强制走网格搜索
    nudged = rho.copy()
    nudged[1, 1] += 1e-9
    nudged[2, 2] -= 1e-9
    searched = measures.fully_entangled_fraction(nudged, resolution=16)
    assert closed == pytest.approx(0.80327, abs=1e-5)
    assert searched == pytest.approx(closed, abs=1e-8)


def test_eof_route_check_only_at_debug(c, monkeypatch, caplog):
    rho = measures.normalize(oq.pair_closed_form(1.0, c.with_lambda(0.5)))
    calls = []
    original = measures.fully_entangled_fraction

    def counting(*args, **kwargs):
        calls.append(1)
        return original(*args, **kwargs)

    monkeypatch.setattr(measures, 'fully_entangled_fraction', counting)
    with caplog.at_level(logging.WARNING, logger='measures'):
        value = measures.entanglement_of_formation(rho)
    assert calls == []
    with caplog.at_level(logging.DEBUG, logger='measures'):
        assert measures.entanglement_of_formation(rho) == pytest.approx(value)
    assert calls == [1]
    assert not any('不一致' in r.getMessage() for r in caplog.records)


def test_fully_entangled_fraction_search():
    assert measures.fully_entangled_fraction(werner(0.6), resolution=16) == pytest.approx(0.7, abs=1e-8)
    product = np.kron(np.diag([1.0, 0.0]), np.diag([1.0, 0.0]))
    assert measures.fully_entangled_fraction(product, resolution=16) == pytest.approx(0.5, abs=1e-8)


def test_reduced_entropy_is_maximal(c):
    rho = measures.normalize(oq.pair_closed_form(2.0, c.with_lambda(0.3)))
    assert measures.reduced_entropy(rho, 'left') == pytest.approx(1.0, abs=1e-10)
    assert measures.reduced_entropy(rho, 'right') == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(ValueError):
        measures.reduced_entropy(rho, 'up')


@pytest.mark.parametrize('lam, expected', [(0.25031, 0.1814), (0.59039, 0.3790)])
def test_entanglement_loss_at_reference_time(c, lam, expected):
    report = measures.losses(c.with_lambda(lam), 0.55)
    assert report.L_E == pytest.approx(expected, abs=1e-3)
    assert report.L_C == pytest.approx(1 - math.exp(-lam * 0.55), abs=1e-12)
    assert report.xi == pytest.approx(report.L_C, abs=1e-12)
    assert measures.eof_from_fef(report.f) == pytest.approx(report.E_f, abs=1e-10)


def test_losses_at_start(c):
    report = measures.losses(c.with_lambda(0.25), 0.0)
    assert report.C == pytest.approx(1.0)
    assert report.L_E == pytest.approx(0.0, abs=1e-12)
    assert report.S_total == pytest.approx(0.0, abs=1e-12)
    assert report.purity_normalized == pytest.approx(1.0)


def test_small_lambda_approximation(c):
    c = c.with_lambda(1e-4)
    report = measures.losses(c, 1.0)
    assert report.L_E == pytest.approx(measures.loss_small_lambda(c, 1.0), rel=1e-2)


def test_loss_curve_matches_pointwise(c):
    c = c.with_lambda(0.25)
    times = [0.0, 0.55, 2.0]
    curve = measures.loss_curve(c, times, workers=2)
    assert [r.t for r in curve] == times
    for report in curve:
        assert report == measures.losses(c, report.t)
