'''
中性K介子单粒子动力学

内部单位制: ħ = 1, 时间以 τ_S 为单位, 能量以 ħ/τ_S 为单位。
'''
import cmath
import dataclasses
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Optional, Union

import numpy as np

from core import numkernel as nk
from core.errors import BasisError, ParameterError, TimeOrderError
from core.logger import get_log_manager

if TYPE_CHECKING:
    from core.medium import MediumParams

logger = get_log_manager().get_logger('kaon_core')

HBAR_MEV_S = 6.58212e-22
TAU_S_SECONDS = 8.954e-11
TAU_L_SECONDS = 5.17e-8
DELTA_M_TAU_S = 0.47

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class UnitSystem:
    '''MeV/秒 与内部自然单位之间的换算'''
    hbar_mev_s: float = HBAR_MEV_S
    tau_s_s: float = TAU_S_SECONDS

    def energy_to_natural(self, mev: ArrayLike) -> ArrayLike:
        return mev * self.tau_s_s / self.hbar_mev_s

    def energy_from_natural(self, value: ArrayLike) -> ArrayLike:
        return value * self.hbar_mev_s / self.tau_s_s

    def time_to_natural(self, seconds: ArrayLike) -> ArrayLike:
        return seconds / self.tau_s_s

    def time_from_natural(self, value: ArrayLike) -> ArrayLike:
        return value * self.tau_s_s

    def width_to_natural(self, per_second: ArrayLike) -> ArrayLike:
        return per_second * self.tau_s_s

    def width_from_natural(self, value: ArrayLike) -> ArrayLike:
        return value / self.tau_s_s

    @classmethod
    def from_config(cls, physics: Optional[dict] = None) -> 'UnitSystem':
        '''从 physics 配置读取 ħ 与 τ_S'''
        if physics is None:
            from config.config_manager import get_config_manager
            physics = get_config_manager().get_physics()
        return cls(
            hbar_mev_s=float(physics.get('hbar_mev_s', HBAR_MEV_S)),
            tau_s_s=float(physics.get('tau_s_s', TAU_S_SECONDS)),
        )


@dataclass(frozen=True)
class KaonConstants:
    '''
    K介子常数(自然单位)

    Attributes:
        m_S, m_L: 质量
        gamma_S, gamma_L: 衰变宽度
        lam: 退相干参数 λ
        eps: CP 破坏参数 ε
    '''
    m_S: float = 0.0
    m_L: float = DELTA_M_TAU_S
    gamma_S: float = 1.0
    gamma_L: float = TAU_S_SECONDS / TAU_L_SECONDS
    lam: float = 0.0
    eps: complex = 0j

    def __post_init__(self):
        values = (self.m_S, self.m_L, self.gamma_S, self.gamma_L, self.lam)
        if not all(np.isfinite(v) for v in values) or not cmath.isfinite(self.eps):
            raise ParameterError("K介子常数必须为有限值")
        if not self.gamma_S > self.gamma_L > 0:
            raise ParameterError(f"需要 Γ_S > Γ_L > 0, 实际为 Γ_S={self.gamma_S}, Γ_L={self.gamma_L}")
        if not self.delta_m > 0:
            raise ParameterError(f"需要 Δm > 0, 实际为 {self.delta_m}")
        if self.lam < 0:
            raise ParameterError(f"退相干参数不能为负: λ={self.lam}")
        object.__setattr__(self, 'eps', complex(self.eps))

    @property
    def delta_m(self) -> float:
        return self.m_L - self.m_S

    @property
    def delta_gamma(self) -> float:
        return self.gamma_L - self.gamma_S

    @property
    def gamma(self) -> float:
        return 0.5 * (self.gamma_S + self.gamma_L)

    @property
    def p(self) -> complex:
        return 1 + self.eps

    @property
    def q(self) -> complex:
        return 1 - self.eps

    @property
    def mu_S(self) -> complex:
        '''K_S 的复能量 m_S - iΓ_S/2'''
        return self.m_S - 0.5j * self.gamma_S

    @property
    def mu_L(self) -> complex:
        return self.m_L - 0.5j * self.gamma_L

    def with_lambda(self, lam: float) -> 'KaonConstants':
        return dataclasses.replace(self, lam=float(lam))

    def with_eps(self, eps: complex) -> 'KaonConstants':
        return dataclasses.replace(self, eps=complex(eps))

    @classmethod
    def from_physical(cls, delta_m_mev: float = 3.49e-12,
                      tau_s_s: float = TAU_S_SECONDS,
                      tau_l_s: float = TAU_L_SECONDS,
                      lambda_mev: float = 0.0,
                      eps: complex = 0j,
                      units: Optional[UnitSystem] = None) -> 'KaonConstants':
        '''
        从实验单位构造常数

        Args:
            delta_m_mev: 质量差(MeV)
            tau_s_s, tau_l_s: 寿命(秒)
            lambda_mev: 退相干参数(MeV)
            eps: CP 破坏参数
            units: 单位制, 默认以 tau_s_s 为时间单位

        Returns:
            KaonConstants
        '''
        units = units or UnitSystem(tau_s_s=tau_s_s)
        return cls(
            m_S=0.0,
            m_L=float(units.energy_to_natural(delta_m_mev)),
            gamma_S=float(units.width_to_natural(1.0 / tau_s_s)),
            gamma_L=float(units.width_to_natural(1.0 / tau_l_s)),
            lam=float(units.energy_to_natural(lambda_mev)),
            eps=eps,
        )

    @classmethod
    def from_config(cls, physics: Optional[dict] = None) -> 'KaonConstants':
        '''从 physics.json 构造默认常数'''
        if physics is None:
            from config.config_manager import get_config_manager
            physics = get_config_manager().get_physics()
        tau_s = float(physics.get('tau_s_s', TAU_S_SECONDS))
        tau_l = float(physics.get('tau_l_s', TAU_L_SECONDS))
        m_s = float(physics.get('m_s', 0.0))
        return cls(
            m_S=m_s,
            m_L=m_s + float(physics.get('delta_m_tau_s', DELTA_M_TAU_S)),
            gamma_S=1.0,
            gamma_L=tau_s / tau_l,
            lam=float(physics.get('lambda', 0.0)),
            eps=complex(float(physics.get('eps_re', 0.0)), float(physics.get('eps_im', 0.0))),
        )


class BasisKind(Enum):
    STRANGENESS = 'strangeness'
    FREE_SPACE = 'free_space'
    INSIDE_MATTER = 'inside_matter'


@dataclass(frozen=True)
class Basis:
    '''准自旋基; 物质内基携带介质参数'''
    kind: BasisKind
    medium: Optional['MediumParams'] = None

    def __post_init__(self):
        if self.kind is BasisKind.INSIDE_MATTER and self.medium is None:
            raise BasisError("物质内基必须携带介质参数")

    @classmethod
    def inside_matter(cls, medium: 'MediumParams') -> 'Basis':
        return cls(BasisKind.INSIDE_MATTER, medium)


STRANGENESS = Basis(BasisKind.STRANGENESS)
FREE_SPACE = Basis(BasisKind.FREE_SPACE)


@dataclass(frozen=True, eq=False)
class KaonVec:
    '''单K介子振幅; 分量顺序为 (K⁰, K̄⁰) 或 (K_S, K_L)'''
    amps: np.ndarray
    basis: Basis = STRANGENESS
    t: float = 0.0

    def __post_init__(self):
        amps = np.array(self.amps, dtype=complex).reshape(-1)
        if amps.shape != (2,):
            raise ParameterError(f"单粒子态需要2个分量, 实际为{amps.shape}")
        amps.setflags(write=False)
        object.__setattr__(self, 'amps', amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))


@dataclass(frozen=True)
class QuasiSpinHamiltonian:
    '''H = αI + β(sinθ σ_x + cosθ σ_y)'''
    alpha: complex
    beta: complex
    theta: complex

    def matrix(self) -> np.ndarray:
        return (self.alpha * nk.IDENTITY2
                + self.beta * (cmath.sin(self.theta) * nk.SIGMA_X + cmath.cos(self.theta) * nk.SIGMA_Y))


def _require_p(c: KaonConstants):
    if c.p == 0:
        raise ParameterError("ε = -1 时 p = 0, 无法定义")


def _require_q(c: KaonConstants):
    if c.q == 0:
        raise ParameterError("ε = 1 时 q = 0, 无法定义")


def free_space_matrix(c: KaonConstants) -> np.ndarray:
    '''
    自由空间基到奇异数基的变换矩阵

    列向量依次为 K_S = (p, -q)/N 与 K_L = (p, q)/N。
    '''
    _require_p(c)
    _require_q(c)
    norm = np.sqrt(abs(c.p) ** 2 + abs(c.q) ** 2)
    return np.array([[c.p, c.p], [-c.q, c.q]], dtype=complex) / norm


def build_heff(c: KaonConstants, basis: Basis = STRANGENESS) -> np.ndarray:
    '''
    有效哈密顿量 H = M - (i/2)Γ

    Args:
        c: 常数
        basis: 奇异数基或自由空间基

    Returns:
        2x2 复矩阵
    '''
    if basis.kind is BasisKind.FREE_SPACE:
        return np.diag([c.mu_S, c.mu_L]).astype(complex)
    if basis.kind is BasisKind.STRANGENESS:
        if c.eps == 0:
            mass = np.array([[c.m_L + c.m_S, c.delta_m],
                             [c.delta_m, c.m_L + c.m_S]], dtype=complex) * 0.5
            width = np.array([[c.gamma_L + c.gamma_S, c.delta_gamma],
                              [c.delta_gamma, c.gamma_L + c.gamma_S]], dtype=complex) * 0.5
            return mass - 0.5j * width
        v = free_space_matrix(c)
        return v @ np.diag([c.mu_S, c.mu_L]) @ np.linalg.inv(v)
    raise BasisError("物质内哈密顿量请使用 medium.build_medium_h")


def build_quasispin_h(c: KaonConstants) -> QuasiSpinHamiltonian:
    '''准自旋形式的 α, β, θ, 其中 e^{iθ} = q/p'''
    _require_p(c)
    _require_q(c)
    theta = -1j * cmath.log(c.q / c.p)
    alpha = 0.5 * (c.m_L + c.m_S - 0.5j * (c.gamma_L + c.gamma_S))
    beta = 0.5 * (c.delta_m - 0.5j * c.delta_gamma)
    return QuasiSpinHamiltonian(alpha=alpha, beta=beta, theta=theta)


def to_basis(v: KaonVec, target: Basis, c: KaonConstants) -> KaonVec:
    '''
    在奇异数基与自由空间基之间转换

    Args:
        v: 单粒子态
        target: 目标基
        c: 常数

    Returns:
        新基下的态
    '''
    if BasisKind.INSIDE_MATTER in (v.basis.kind, target.kind):
        raise BasisError("物质内基的转换请使用 medium 模块")
    if v.basis.kind is target.kind:
        return v
    trans = free_space_matrix(c)
    if target.kind is BasisKind.STRANGENESS:
        amps = trans @ v.amps
    else:
        amps = np.linalg.solve(trans, v.amps)
    return KaonVec(amps, target, v.t)


def free_space_overlap(c: KaonConstants) -> complex:
    '''⟨K_S|K_L⟩ = (ε+ε*)/(1+|ε|²)'''
    trans = free_space_matrix(c)
    return complex(np.vdot(trans[:, 0], trans[:, 1]))


def cp_eigenstates():
    '''CP 本征态 K₁⁰ = (K⁰ - K̄⁰)/√2, K₂⁰ = (K⁰ + K̄⁰)/√2'''
    k1 = KaonVec(np.array([1, -1]) / np.sqrt(2), STRANGENESS)
    k2 = KaonVec(np.array([1, 1]) / np.sqrt(2), STRANGENESS)
    return k1, k2


def cp_operator() -> np.ndarray:
    '''CP|K⁰⟩ = -|K̄⁰⟩'''
    return -nk.SIGMA_X


def strangeness_operator() -> np.ndarray:
    return nk.SIGMA_Z.copy()


def decay_factors(t: ArrayLike, c: KaonConstants):
    '''K_S, K_L 分量的演化因子 e^{-(i m_j + Γ_j/2) t}'''
    t = np.asarray(t, dtype=float)
    return np.exp(-1j * c.mu_S * t), np.exp(-1j * c.mu_L * t)


def _check_times(t: ArrayLike):
    if np.any(np.asarray(t) < 0):
        raise TimeOrderError(f"时间不能为负: {t}")


def evolve_free(v: KaonVec, t: float, c: KaonConstants) -> KaonVec:
    '''
    自由演化 t 时长

    Args:
        v: 初态(奇异数基或自由空间基)
        t: 演化时长(τ_S)
        c: 常数

    Returns:
        原基下的末态, 时间标记为 v.t + t
    '''
    _check_times(t)
    free = to_basis(v, FREE_SPACE, c)
    f_s, f_l = decay_factors(t, c)
    evolved = KaonVec(free.amps * np.array([f_s, f_l]), FREE_SPACE, v.t + t)
    return to_basis(evolved, v.basis, c)


def evolve_strangeness_state(initial: str, t: ArrayLike, c: KaonConstants) -> np.ndarray:
    '''
    |K⁰(t)⟩ 或 |K̄⁰(t)⟩ 在奇异数基下的闭式振幅

    Args:
        initial: 'K0' 或 'K0bar'
        t: 时间(可为数组)
        c: 常数

    Returns:
        形状 (..., 2) 的振幅数组
    '''
    _check_times(t)
    _require_p(c)
    _require_q(c)
    f_s, f_l = decay_factors(t, c)
    g_plus = 0.5 * (f_l + f_s)
    g_minus = 0.5 * (f_l - f_s)
    if initial == 'K0':
        return np.stack([g_plus, (c.q / c.p) * g_minus], axis=-1)
    if initial == 'K0bar':
        return np.stack([(c.p / c.q) * g_minus, g_plus], axis=-1)
    raise ParameterError(f"未知初态: {initial}")


def _interference(t: np.ndarray, c: KaonConstants, sign: float) -> np.ndarray:
    return 0.25 * (np.exp(-c.gamma_S * t) + np.exp(-c.gamma_L * t)
                   + sign * 2.0 * np.exp(-c.gamma * t) * np.cos(c.delta_m * t))


def survival_prob(t: ArrayLike, c: KaonConstants) -> ArrayLike:
    '''|⟨K⁰|K⁰(t)⟩|²'''
    _check_times(t)
    return _interference(np.asarray(t, dtype=float), c, +1.0)


def oscillation_prob(t: ArrayLike, c: KaonConstants) -> ArrayLike:
    '''|⟨K̄⁰|K⁰(t)⟩|² = ¼|q/p|²(e^{-Γ_S t} + e^{-Γ_L t} - 2e^{-Γt}cos(Δm t))'''
    _check_times(t)
    _require_p(c)
    return abs(c.q / c.p) ** 2 * _interference(np.asarray(t, dtype=float), c, -1.0)


def anti_survival_prob(t: ArrayLike, c: KaonConstants) -> ArrayLike:
    '''|⟨K̄⁰|K̄⁰(t)⟩|², 与 survival_prob 相同'''
    return survival_prob(t, c)


def anti_oscillation_prob(t: ArrayLike, c: KaonConstants) -> ArrayLike:
    '''|⟨K⁰|K̄⁰(t)⟩|², 前因子为 |p/q|²'''
    _check_times(t)
    _require_q(c)
    return abs(c.p / c.q) ** 2 * _interference(np.asarray(t, dtype=float), c, -1.0)


def oscillation_frequency(c: KaonConstants) -> float:
    '''f = Δm/2π, 单位为每 τ_S 周期数'''
    return c.delta_m / (2.0 * np.pi)
