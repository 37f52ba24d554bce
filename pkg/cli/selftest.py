'''
自检: 在进程内逐项验证核心不变量, 输出 PASS/FAIL
'''
import math
from typing import Callable, List, Tuple

import numpy as np

from core import kaon_core as kc
from core import measures, medium, observables
from core import openquantum as oq
from core.kaon_core import KaonConstants
from core.logger import get_log_manager

logger = get_log_manager().get_logger('selftest')

LAMBDAS = (0.0, 0.25, 0.59)
LAMBDA_MEAN = 0.25031
LAMBDA_UPPER = 0.59039


def _expect(condition: bool, message: str):
    if not condition:
        raise AssertionError(message)


def check_oscillation_anchor(c: KaonConstants):
    value = kc.UnitSystem().energy_to_natural(3.49e-12)
    _expect(0.465 <= value <= 0.480, f"Δm·τ_S = {value}")


def check_oscillation_curves(c: KaonConstants):
    c = c.with_eps(0)
    t = np.linspace(0.0, 5.0, 501)
    p0, p1 = kc.survival_prob(t, c), kc.oscillation_prob(t, c)
    _expect(abs(p0[0] - 1) < 1e-15 and abs(p1[0]) < 1e-15, "t=0 边界值错误")
    _expect(np.all(p0 + p1 <= 1 + 1e-15), "P_K0 + P_K0bar > 1")
    gap = np.max(np.abs(p0 - p1 - np.exp(-c.gamma * t) * np.cos(c.delta_m * t)))
    _expect(gap < 1e-10, f"干涉项偏差 {gap:.3e}")


def check_lindblad_oracle(c: KaonConstants):
    rho_single = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
    worst = 0.0
    for lam in LAMBDAS:
        cl = c.with_lambda(lam)
        single = oq.decoherence_ansatz(cl, 'single')
        pair = oq.decoherence_ansatz(cl, 'pair')
        for t in np.arange(0.0, 3.0001, 0.5):
            worst = max(worst, np.max(np.abs(oq.liouvillian_propagate(single, rho_single, t)
                                             - oq.single_closed_form(rho_single, t, cl))))
            worst = max(worst, np.max(np.abs(oq.liouvillian_propagate(pair, oq.bell_singlet_support(), t)
                                             - oq.pair_closed_form(t, cl))))
    _expect(worst < 1e-9, f"最大偏差 {worst:.3e}")


def check_trace(c: KaonConstants):
    pair = oq.decoherence_ansatz(c, 'pair')
    extended = oq.trace_preserving_extension(c)
    rho_ext = np.zeros((4, 4), dtype=complex)
    rho_ext[:2, :2] = 0.5
    for t in np.linspace(0.0, 10.0, 11):
        rho = oq.liouvillian_propagate(pair, oq.bell_singlet_support(), t)
        _expect(abs(np.trace(rho).real - math.exp(-2 * c.gamma * t)) < 1e-10, f"粒子对迹错误 t={t}")
        total = np.trace(oq.liouvillian_propagate(extended, rho_ext, t)).real
        _expect(abs(total - 1) < 1e-10, f"扩展系统迹不守恒 t={t}: {total}")


def check_purity(c: KaonConstants):
    for lam in LAMBDAS:
        cl = c.with_lambda(lam)
        for t in np.linspace(0.0, 5.0, 11):
            expected = 0.5 * math.exp(-4 * cl.gamma * t) * (1 + math.exp(-2 * lam * t))
            _expect(abs(oq.purity(oq.pair_closed_form(t, cl)) - expected) < 1e-10, f"纯度错误 t={t}")
            normalized = oq.purity(measures.normalize(oq.pair_closed_form(t, cl)))
            _expect(0.5 - 1e-12 <= normalized <= 1 + 1e-12, f"归一化纯度越界 {normalized}")


def check_epr_anticorrelation(c: KaonConstants):
    for t in np.linspace(0.0, 5.0, 11):
        like = observables.joint_probability('K0', t, 'K0', t, c.with_lambda(0.0))
        _expect(abs(like) < 1e-14, f"λ=0 同号概率非零 t={t}")
        cl = c.with_lambda(0.25)
        like = observables.joint_probability('K0', t, 'K0', t, cl)
        expected = 0.25 * math.exp(-2 * cl.gamma * t) * (1 - math.exp(-0.25 * t))
        _expect(abs(like - expected) < 1e-12, f"λ>0 同号概率错误 t={t}")


def check_asymmetry(c: KaonConstants):
    grid = np.linspace(0.0, 4.5, 10)
    t_l, t_r = np.meshgrid(grid, grid)
    for lam in (0.0, 0.25):
        cl = c.with_lambda(lam)
        ratio = observables.asymmetry_from_probabilities(t_l, t_r, cl)
        closed = observables.asymmetry_decohered(t_l, t_r, cl)
        _expect(np.max(np.abs(ratio - closed)) < 1e-12, f"不对称度偏差 λ={lam}")


def check_entanglement_measures(c: KaonConstants):
    for lam in (0.0, 0.1, 0.25, 0.59, 2.0):
        cl = c.with_lambda(lam)
        for t in np.linspace(0.0, 5.0, 6):
            report = measures.losses(cl, t)
            _expect(abs(report.C - math.exp(-lam * t)) < 1e-9, f"并发度错误 λ={lam}, t={t}")
            _expect(abs(report.S_reduced_l - 1) < 1e-10 and abs(report.S_reduced_r - 1) < 1e-10,
                    f"约化熵错误 λ={lam}, t={t}")
            route = measures.eof_from_fef(report.f)
            _expect(abs(route - report.E_f) < 1e-10, f"形成纠缠两种算法不一致 λ={lam}, t={t}")


def check_loss_numbers(c: KaonConstants):
    for lam, expected in ((LAMBDA_MEAN, 0.18), (LAMBDA_UPPER, 0.38)):
        report = measures.losses(c.with_lambda(lam), 0.55)
        _expect(abs(report.L_E - expected) <= 0.01, f"L_E={report.L_E:.4f}, 期望 {expected}")
        _expect(abs(report.L_C - (1 - math.exp(-lam * 0.55))) < 1e-12, "L_C 与 ξ 不一致")


def check_fit_round_trip(c: KaonConstants):
    cl = c.with_lambda(0.25)
    samples = observables.synthesize_asymmetry_data(cl, observables.reference_grid(), 0.0, 1)
    result = observables.fit_lambda(samples, cl)
    _expect(abs(result.lambda_hat - 0.25) < 0.25e-6, f"λ̂={result.lambda_hat}")


def check_regeneration_limits(c: KaonConstants):
    c = c.with_eps(0)
    low = medium.MediumParams.from_regenerator(1e-7, c)
    k_long, k_short = medium.eigenstates_in_matter(low, c)
    k_s = kc.to_basis(kc.KaonVec([1, 0], kc.FREE_SPACE), kc.STRANGENESS, c).amps
    k_l = kc.to_basis(kc.KaonVec([0, 1], kc.FREE_SPACE), kc.STRANGENESS, c).amps
    _expect(np.max(np.abs(k_short.amps - k_s)) < 1e-6 and np.max(np.abs(k_long.amps - k_l)) < 1e-6,
            "低密度极限错误")
    high = medium.MediumParams.from_regenerator(1e6, c)
    k_long, k_short = medium.eigenstates_in_matter(high, c)
    _expect(np.max(np.abs(np.abs(k_long.amps) - [0, 1])) < 1e-5, "高密度极限 K'_L 错误")
    _expect(np.max(np.abs(np.abs(k_short.amps) - [1, 0])) < 1e-5, "高密度极限 K'_S 错误")
    for rho in (1e-7, 0.3 + 0.2j, 10.0, 1e3):
        bar, inv = medium.rhobar_pair(rho)
        _expect(abs(bar * inv - 1) < 1e-12, f"ρ̄·ρ̄⁻¹ ≠ 1, ρ={rho}")


def check_quasispin(c: KaonConstants):
    for eps in (0.0, 0.05, 0.1j):
        ce = c.with_eps(eps)
        spectrum = np.linalg.eigvals(kc.build_quasispin_h(ce).matrix())
        expected = np.array([ce.mu_S, ce.mu_L])
        gap = np.max(np.abs(np.sort_complex(spectrum) - np.sort_complex(expected)))
        _expect(gap < 1e-10, f"准自旋谱偏差 {gap:.3e}, ε={eps}")


CHECKS: List[Tuple[str, Callable[[KaonConstants], None]]] = [
    ('oscillation_anchor', check_oscillation_anchor),
    ('oscillation_curves', check_oscillation_curves),
    ('lindblad_oracle', check_lindblad_oracle),
    ('trace_behavior', check_trace),
    ('purity', check_purity),
    ('epr_anticorrelation', check_epr_anticorrelation),
    ('asymmetry_closed_form', check_asymmetry),
    ('entanglement_measures', check_entanglement_measures),
    ('loss_numbers', check_loss_numbers),
    ('fit_round_trip', check_fit_round_trip),
    ('regeneration_limits', check_regeneration_limits),
    ('quasispin_spectrum', check_quasispin),
]


def run_selftest(c: KaonConstants = None) -> bool:
    '''
    逐项运行自检并打印结果

    Args:
        c: 基准常数, 各项按需替换 λ 与 ε

    Returns:
        全部通过时为 True
    '''
    c = (c or KaonConstants()).with_lambda(0.0)
    failures = 0
    for name, check in CHECKS:
        try:
            check(c)
            print(f"PASS {name}")
        except Exception as e:
            failures += 1
            print(f"FAIL {name}: {e}")
            logger.error(f"自检失败: {name}: {e}")
    print(f"{len(CHECKS) - failures}/{len(CHECKS)} passed")
    return failures == 0
