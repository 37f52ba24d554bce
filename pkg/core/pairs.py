'''
纠缠K介子对的构造与自由演化

两粒子振幅的下标为 2*(左) + (右); 自由空间基下 0=S⊗S, 1=S⊗L, 2=L⊗S, 3=L⊗L。
'''
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from core import kaon_core as kc
from core import medium as md
from core.errors import BasisError, NormalizationError, TimeOrderError
from core.kaon_core import Basis, BasisKind, KaonConstants
from core.logger import get_log_manager

logger = get_log_manager().get_logger('pairs')

# 闭式系数与构造流程的允许偏差
COEFFICIENT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class TwoKaonVec:
    '''两K介子振幅, 左右粒子共用同一个基'''
    amps: np.ndarray
    basis: Basis = kc.STRANGENESS
    t_l: float = 0.0
    t_r: float = 0.0

    def __post_init__(self):
        amps = np.array(self.amps, dtype=complex).reshape(-1)
        if amps.shape != (4,):
            raise NormalizationError(f"两粒子态需要4个分量, 实际为{amps.shape}")
        if self.basis.kind is BasisKind.INSIDE_MATTER:
            raise BasisError("两粒子态只支持奇异数基与自由空间基")
        amps.setflags(write=False)
        object.__setattr__(self, 'amps', amps)

    @property
    def dt(self) -> float:
        '''Δt = t_l - t_r'''
        return self.t_l - self.t_r

    def swapped(self) -> 'TwoKaonVec':
        '''交换左右粒子'''
        amps = self.amps.reshape(2, 2).T.reshape(-1)
        return TwoKaonVec(amps, self.basis, self.t_r, self.t_l)


@dataclass(frozen=True)
class RegenerationCoefficients:
    eta: complex
    R_L: complex
    R_S: complex
    T: float


def pair_transform(c: KaonConstants) -> np.ndarray:
    '''自由空间两粒子基到奇异数两粒子基的变换 V⊗V'''
    trans = kc.free_space_matrix(c)
    return np.kron(trans, trans)


def pair_to_basis(v: TwoKaonVec, target: Basis, c: KaonConstants) -> TwoKaonVec:
    '''在奇异数基与自由空间基之间转换两粒子态'''
    if target.kind is BasisKind.INSIDE_MATTER:
        raise BasisError("两粒子态不支持物质内基")
    if v.basis.kind is target.kind:
        return v
    trans = pair_transform(c)
    if target.kind is BasisKind.STRANGENESS:
        amps = trans @ v.amps
    else:
        amps = np.linalg.solve(trans, v.amps)
    return TwoKaonVec(amps, target, v.t_l, v.t_r)


def pair_norm(v: TwoKaonVec) -> float:
    return float(np.linalg.norm(v.amps))


def singlet_prefactor(c: KaonConstants) -> complex:
    '''自由空间展开的前因子 (1+|ε|²)/(√2(1-ε²))'''
    return (1 + abs(c.eps) ** 2) / (np.sqrt(2) * (1 - c.eps ** 2))


def singlet(c: KaonConstants, basis: Basis = kc.STRANGENESS) -> TwoKaonVec:
    '''
    反对称最大纠缠态 (|K⁰⟩|K̄⁰⟩ - |K̄⁰⟩|K⁰⟩)/√2

    Args:
        c: 常数
        basis: 返回所用的基

    Returns:
        t_l = t_r = 0 的两粒子态
    '''
    state = TwoKaonVec(np.array([0, 1, -1, 0]) / np.sqrt(2), kc.STRANGENESS)
    return pair_to_basis(state, basis, c)


def evolve_two_times(v: TwoKaonVec, t_l: float, t_r: float, c: KaonConstants) -> TwoKaonVec:
    '''
    左右粒子分别演化到固有时 t_l, t_r

    Args:
        v: 初态
        t_l, t_r: 目标时间, 不得早于当前时间
        c: 常数

    Returns:
        原基下的两时间态
    '''
    d_l, d_r = t_l - v.t_l, t_r - v.t_r
    if d_l < 0 or d_r < 0:
        raise TimeOrderError(f"不允许时间倒流: ({v.t_l}, {v.t_r}) -> ({t_l}, {t_r})")
    free = pair_to_basis(v, kc.FREE_SPACE, c)
    left = np.array(kc.decay_factors(d_l, c))
    right = np.array(kc.decay_factors(d_r, c))
    evolved = TwoKaonVec(np.kron(left, right) * free.amps, kc.FREE_SPACE, t_l, t_r)
    return pair_to_basis(evolved, v.basis, c)


def two_times_strangeness(t_l: float, t_r: float, c: KaonConstants) -> TwoKaonVec:
    '''两时间态在奇异数基下的展开(由基变换得到)'''
    return evolve_two_times(singlet(c), t_l, t_r, c)


def regenerate_thin(v: TwoKaonVec, m: 'md.MediumParams', dt: float,
                    c: KaonConstants) -> Tuple[TwoKaonVec, RegenerationCoefficients]:
    '''
    右行粒子穿越薄再生器

    右粒子上作用 I + ησ_x (自由空间基), 得到
    (S⊗L - L⊗S + η(S⊗S - L⊗L))/√2。

    Args:
        v: t = 0 的单态
        m: 介质参数
        dt: 再生器厚度(τ_S)
        c: 常数

    Returns:
        (自由空间基下的态, 对应的系数)
    '''
    if v.t_l != 0 or v.t_r != 0:
        raise TimeOrderError(f"薄再生器只作用于 t=0 的单态, 实际为 ({v.t_l}, {v.t_r})")
    eta = md.regeneration_eta(m, c, dt)
    free = pair_to_basis(v, kc.FREE_SPACE, c)
    regen = np.array([[1, eta], [eta, 1]], dtype=complex)
    amps = np.kron(np.eye(2), regen) @ free.amps
    state = TwoKaonVec(amps, kc.FREE_SPACE)
    coeffs = _coefficients_from_amps(amps, eta, 0.0)
    logger.debug(f"薄再生器: η={eta:.6g}")
    return state, coeffs


def _coefficients_from_amps(amps: np.ndarray, eta: complex, T: float) -> RegenerationCoefficients:
    if amps[1] == 0:
        raise NormalizationError("S⊗L 分量为零, 无法归一化")
    return RegenerationCoefficients(eta=eta, R_L=complex(amps[3] / amps[1]),
                                    R_S=complex(amps[0] / amps[1]), T=T)


def closed_form_coefficients(eta: complex, T: float, c: KaonConstants) -> RegenerationCoefficients:
    '''R_L = -η e^{-(iΔm+ΔΓ/2)T}, R_S = η e^{(iΔm+ΔΓ/2)T}'''
    rate = 1j * c.delta_m + 0.5 * c.delta_gamma
    return RegenerationCoefficients(eta=eta, R_L=complex(-eta * np.exp(-rate * T)),
                                    R_S=complex(eta * np.exp(rate * T)), T=T)


def propagate_and_normalize(v: TwoKaonVec, T: float, c: KaonConstants,
                            warn_range: bool = True) -> Tuple[TwoKaonVec, RegenerationCoefficients]:
    '''
    再生后的态自由传播到共同固有时 T, 再对存活的粒子对归一化

    |Φ⟩ = (S⊗L - L⊗S + R_L·L⊗L + R_S·S⊗S)/√(2+|R_L|²+|R_S|²)

    Args:
        v: regenerate_thin 的输出
        T: 共同固有时(τ_S)
        c: 常数
        warn_range: T 超出 [τ_S, τ_L] 时是否记录警告

    Returns:
        (自由空间基下的单位态, 流程得到的系数)
    '''
    if T < 0:
        raise TimeOrderError(f"传播时间不能为负: T={T}")
    tau_l = 1.0 / c.gamma_L
    if warn_range and (T < 1.0 or T > tau_l):
        logger.warning(f"传播时间超出推荐区间 [τ_S, τ_L]: T={T}")
    free = pair_to_basis(v, kc.FREE_SPACE, c)
    # 传播前 S⊗S 与 S⊗L 之比即 η
    eta = _coefficients_from_amps(free.amps, 0j, 0.0).R_S
    evolved = evolve_two_times(free, free.t_l + T, free.t_r + T, c)
    amps = evolved.amps
    coeffs = _coefficients_from_amps(amps, eta, T)
    expected = closed_form_coefficients(eta, T, c)
    deviation = max(abs(coeffs.R_L - expected.R_L), abs(coeffs.R_S - expected.R_S))
    scale = max(1.0, abs(expected.R_L), abs(expected.R_S))
    if deviation > COEFFICIENT_TOL * scale:
        logger.warning(f"再生系数与闭式不一致: 偏差={deviation:.3e}")
    normalized = amps / amps[1]
    normalized = normalized / np.linalg.norm(normalized)
    return TwoKaonVec(normalized, kc.FREE_SPACE, evolved.t_l, evolved.t_r), coeffs


def normalized_phi(R_L: complex, R_S: complex) -> TwoKaonVec:
    '''直接由 R_L, R_S 构造归一化的 |Φ⟩ (自由空间基)'''
    amps = np.array([R_S, 1, -1, R_L], dtype=complex)
    return TwoKaonVec(amps / np.linalg.norm(amps), kc.FREE_SPACE)
