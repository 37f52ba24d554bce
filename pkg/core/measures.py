'''
纠缠度量: 归一化、约化熵、完全纠缠分数、形成纠缠与并发度
'''
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, List, Optional

import numpy as np
import scipy.optimize
import scipy.special
import scipy.stats

from core import numkernel as nk
from core import openquantum as oq
from core.errors import ConcurrenceError, DimensionError, NormalizationError
from core.kaon_core import KaonConstants
from core.logger import get_log_manager

logger = get_log_manager().get_logger('measures')

MIN_TRACE = 1e-300
UNIT_TRACE_TOL = 1e-9
CONCURRENCE_IMAG_TOL = 1e-9
FAMILY_TOL = 1e-12
ROUTE_AGREEMENT_TOL = 1e-10

SIGMA_YY = np.kron(nk.SIGMA_Y, nk.SIGMA_Y)


@dataclass(frozen=True)
class EntanglementReport:
    '''单个时间点上的全部纠缠量(熵以比特为单位)'''
    t: float
    S_total: float
    S_reduced_l: float
    S_reduced_r: float
    f: float
    E_f: float
    C: float
    L_E: float
    L_C: float
    xi: float
    purity_normalized: float


def _two_qubit(rho) -> np.ndarray:
    '''2x2 的 {e₁, e₂} 支撑矩阵自动嵌入到两比特空间'''
    rho = nk.as_cmatrix(rho, '密度矩阵')
    if rho.shape == (2, 2):
        return oq.embed_pair(rho)
    if rho.shape != (4, 4):
        raise DimensionError(f"需要两比特密度矩阵, 实际为{rho.shape}")
    return rho


def _require_unit_trace(rho: np.ndarray):
    trace = np.real(np.trace(rho))
    if abs(trace - 1) > UNIT_TRACE_TOL:
        raise NormalizationError(f"需要单位迹的密度矩阵, 实际 tr={trace}")


def normalize(rho) -> np.ndarray:
    '''ρ_N = ρ / tr(ρ)'''
    rho = nk.as_cmatrix(rho, '密度矩阵')
    trace = np.real(np.trace(rho))
    if trace <= MIN_TRACE:
        raise NormalizationError(f"密度矩阵的迹趋于零: {trace}")
    return rho / trace


def binary_entropy(x: float) -> float:
    '''H(x) = -x log₂x - (1-x) log₂(1-x)'''
    x = min(max(float(x), 0.0), 1.0)
    return float((scipy.special.entr(x) + scipy.special.entr(1.0 - x)) / math.log(2))


def von_neumann_entropy(rho, base: int = 2) -> float:
    '''
    S = -tr(ρ log ρ)

    Args:
        rho: 单位迹密度矩阵
        base: 对数底, 默认取支撑维度2

    Returns:
        熵
    '''
    rho = nk.as_cmatrix(rho, '密度矩阵')
    _require_unit_trace(rho)
    values = np.clip(nk.eig_hermitian(rho), 0.0, None)
    return float(scipy.stats.entropy(values, base=base))


def reduced_entropy(rho, side: str) -> float:
    '''
    约化密度矩阵的熵

    Args:
        rho: 两比特密度矩阵
        side: 保留的子系统 'left' 或 'right'
    '''
    rho = _two_qubit(rho)
    _require_unit_trace(rho)
    traced = {'left': 'right', 'right': 'left'}.get(side)
    if traced is None:
        raise ValueError(f"未知子系统: {side}")
    return von_neumann_entropy(nk.partial_trace(rho, traced))


def _family_coherence(rho: np.ndarray) -> Optional[complex]:
    '''若 ρ 形如 ½(|e₁⟩⟨e₁| + |e₂⟩⟨e₂|) + x|e₁⟩⟨e₂| + h.c., 返回 x'''
    support = np.ix_(oq.PAIR_SUPPORT, oq.PAIR_SUPPORT)
    outside = rho.copy()
    outside[support] = 0
    block = rho[support]
    if np.max(np.abs(outside)) > FAMILY_TOL:
        return None
    if abs(block[0, 0] - 0.5) > FAMILY_TOL or abs(block[1, 1] - 0.5) > FAMILY_TOL:
        return None
    return complex(block[0, 1])


def _bell_states(theta, phi1, phi2) -> np.ndarray:
    '''(I ⊗ U)|Φ⁺⟩, U = [[a, -b*], [b, a*]], a = cosθ e^{iφ₁}, b = sinθ e^{iφ₂}'''
    a = np.cos(theta) * np.exp(1j * phi1)
    b = np.sin(theta) * np.exp(1j * phi2)
    # |Φ⁺⟩ = (|00⟩ + |11⟩)/√2 -> (|0⟩U|0⟩ + |1⟩U|1⟩)/√2
    return np.stack([a, b, -np.conj(b), np.conj(a)], axis=-1) / np.sqrt(2)


def _default_resolution() -> int:
    from config.config_manager import get_config_manager
    return int(get_config_manager().get_numerics().get('fef_resolution', 64))


def fully_entangled_fraction(rho, resolution: Optional[int] = None) -> float:
    '''
    完全纠缠分数 f(ρ) = max⟨e|ρ|e⟩, |e⟩ 取遍最大纠缠态

    退相干粒子对的态族直接用闭式 ½ + |x|; 其他输入先在 SU(2) 网格上粗搜索,
    再用 Nelder-Mead 局部细化。

    Args:
        rho: 单位迹两比特密度矩阵
        resolution: 每个角度方向的网格点数

    Returns:
        f ∈ [0, 1]
    '''
    rho = _two_qubit(rho)
    _require_unit_trace(rho)
    coherence = _family_coherence(rho)
    if coherence is not None:
        return 0.5 + abs(coherence)

    n = resolution or _default_resolution()
    theta = np.linspace(0.0, np.pi / 2, n)
    phi = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    grid = np.meshgrid(theta, phi, phi, indexing='ij')
    states = _bell_states(*grid).reshape(-1, 4)
    overlaps = np.real(np.einsum('ni,ij,nj->n', states.conj(), rho, states))
    best = int(np.argmax(overlaps))
    start = np.array([g.reshape(-1)[best] for g in grid])

    def negative_overlap(params: np.ndarray) -> float:
        e = _bell_states(*params)
        return -float(np.real(np.vdot(e, rho @ e)))

    result = scipy.optimize.minimize(negative_overlap, start, method='Nelder-Mead',
                                     options={'xatol': 1e-10, 'fatol': 1e-14, 'maxiter': 4000})
    value = max(float(overlaps[best]), -float(result.fun))
    logger.debug(f"完全纠缠分数搜索: 网格最优={overlaps[best]:.12f}, 细化后={value:.12f}")
    return min(1.0, max(0.0, value))


def eof_from_concurrence(C: float) -> float:
    '''𝓔(C) = H(½ + ½√(1-C²))'''
    C = min(max(float(C), 0.0), 1.0)
    return binary_entropy(0.5 + 0.5 * math.sqrt(1.0 - C * C))


def eof_from_fef(f: float) -> float:
    '''𝓔(f) = H(½ + √(f(1-f))), f < ½ 时为0'''
    if f < 0.5:
        return 0.0
    f = min(float(f), 1.0)
    return binary_entropy(0.5 + math.sqrt(f * (1.0 - f)))


def _check_r_spectrum(r: np.ndarray):
    values = nk.eig_general(r)
    worst = float(np.max(np.abs(values.imag)))
    if worst > CONCURRENCE_IMAG_TOL:
        raise ConcurrenceError(f"ρρ̃ 本征值虚部过大: {worst:.3e}")


def _sqrt_psd(rho: np.ndarray) -> np.ndarray:
    values, vecs = nk.eig_hermitian(rho, vectors=True)
    return vecs @ np.diag(np.sqrt(np.clip(values, 0.0, None))) @ nk.dagger(vecs)


def _concurrence_from_roots(roots: np.ndarray) -> float:
    roots = np.sort(roots)[::-1]
    return float(min(1.0, max(0.0, roots[0] - roots[1] - roots[2] - roots[3])))


def spin_flip(rho) -> np.ndarray:
    '''ρ̃ = (σ_y⊗σ_y) ρ* (σ_y⊗σ_y)'''
    rho = _two_qubit(rho)
    return SIGMA_YY @ rho.conj() @ SIGMA_YY


def concurrence(rho) -> float:
    '''
    C = max{0, λ₁-λ₂-λ₃-λ₄}, λ_i 为 R = ρρ̃ 本征值的平方根(降序)

    R 的本征值虚部须小于容差; λ_i 取 √ρ√ρ̃ 的奇异值(与 R 本征值的平方根相同),
    零本征值处不损失精度。

    Args:
        rho: 单位迹两比特密度矩阵

    Returns:
        C ∈ [0, 1]
    '''
    rho = _two_qubit(rho)
    _require_unit_trace(rho)
    flipped = spin_flip(rho)
    _check_r_spectrum(rho @ flipped)
    roots = np.linalg.svd(_sqrt_psd(rho) @ _sqrt_psd(flipped), compute_uv=False)
    return _concurrence_from_roots(roots)


def concurrence_spin_flip_shortcut(rho) -> float:
    '''自旋翻转不变的态可取 R = ρ², 此时 λ_i = |ρ 的本征值|; 仅用于交叉校验'''
    rho = _two_qubit(rho)
    _require_unit_trace(rho)
    return _concurrence_from_roots(np.abs(nk.eig_hermitian(rho)))


def entanglement_of_formation(rho) -> float:
    '''
    形成纠缠, 取并发度路线的值

    DEBUG 级别下对退相干粒子对的态族另算完全纠缠分数路线, 两者不一致时记录警告。
    '''
    rho = _two_qubit(rho)
    value = eof_from_concurrence(concurrence(rho))
    if logger.isEnabledFor(logging.DEBUG) and _family_coherence(rho) is not None:
        other = eof_from_fef(fully_entangled_fraction(rho))
        if abs(other - value) > ROUTE_AGREEMENT_TOL:
            logger.warning(f"形成纠缠两种算法不一致: 并发度={value:.12f}, 纠缠分数={other:.12f}")
    return value


def decoherence_xi(c: KaonConstants, t: float) -> float:
    '''ξ(t) = 1 - e^{-λt}'''
    return -math.expm1(-c.lam * t)


def loss_small_lambda(c: KaonConstants, t: float) -> float:
    '''小 λ 近似 L_E ≈ ξ(t)/ln2'''
    return decoherence_xi(c, t) / math.log(2)


def losses(c: KaonConstants, t: float) -> EntanglementReport:
    '''
    归一化粒子对态在时刻 t 的纠缠报告

    Args:
        c: 常数(含 λ)
        t: 时间(τ_S)

    Returns:
        EntanglementReport
    '''
    rho_n = normalize(oq.pair_closed_form(t, c))
    full = oq.embed_pair(rho_n)
    C = concurrence(full)
    E_f = entanglement_of_formation(full)
    return EntanglementReport(
        t=float(t),
        S_total=von_neumann_entropy(rho_n),
        S_reduced_l=reduced_entropy(full, 'left'),
        S_reduced_r=reduced_entropy(full, 'right'),
        f=fully_entangled_fraction(full),
        E_f=E_f,
        C=C,
        L_E=1.0 - E_f,
        L_C=1.0 - C,
        xi=decoherence_xi(c, t),
        purity_normalized=oq.purity(rho_n),
    )


def loss_curve(c: KaonConstants, times: Iterable[float], workers: Optional[int] = None) -> List[EntanglementReport]:
    '''逐点并行计算纠缠报告'''
    times = [float(t) for t in times]
    if workers is None:
        workers = oq.default_workers()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda t: losses(c, t), times))
