'''
核物质中的传播: 介质哈密顿量、再生参数 ρ 与物质内本征态
'''
import cmath
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from core import kaon_core as kc
from core.errors import ParameterError, TimeOrderError
from core.kaon_core import Basis, KaonConstants, KaonVec
from core.logger import get_log_manager

logger = get_log_manager().get_logger('medium')

# 薄再生器近似的上限 (τ_S)
THIN_REGENERATOR_DT = 0.1


@dataclass(frozen=True)
class MediumParams:
    '''
    介质参数

    Attributes:
        nu: 核子数密度
        m_K: K介子平均质量
        f0, f0bar: K⁰ 与 K̄⁰ 的前向散射振幅
    '''
    nu: float
    m_K: float
    f0: complex
    f0bar: complex

    def __post_init__(self):
        if not (np.isfinite(self.nu) and np.isfinite(self.m_K)
                and cmath.isfinite(self.f0) and cmath.isfinite(self.f0bar)):
            raise ParameterError("介质参数必须为有限值")
        if self.nu < 0:
            raise ParameterError(f"核子数密度不能为负: ν={self.nu}")
        if self.m_K <= 0:
            raise ParameterError(f"K介子质量必须为正: m_K={self.m_K}")
        object.__setattr__(self, 'f0', complex(self.f0))
        object.__setattr__(self, 'f0bar', complex(self.f0bar))

    @property
    def drive(self) -> complex:
        '''(πν/m_K)(f₀ - f̄₀)'''
        return np.pi * self.nu / self.m_K * (self.f0 - self.f0bar)

    @classmethod
    def from_drive(cls, drive: complex) -> 'MediumParams':
        '''直接给定 (πν/m_K)(f₀ - f̄₀) 的合成介质'''
        drive = complex(drive)
        return cls(nu=1.0, m_K=np.pi, f0=drive / 2, f0bar=-drive / 2)

    @classmethod
    def from_regenerator(cls, rho: complex, c: KaonConstants) -> 'MediumParams':
        '''给定再生参数 ρ 的合成介质'''
        return cls.from_drive(complex(rho) * _splitting(c))


def _splitting(c: KaonConstants) -> complex:
    '''Δm - (i/2)ΔΓ'''
    return c.delta_m - 0.5j * c.delta_gamma


def build_medium_h(m: MediumParams, c: KaonConstants) -> np.ndarray:
    '''H_medium = H - (2πν/m_K)·diag(f₀, f̄₀), 奇异数基'''
    shift = 2.0 * np.pi * m.nu / m.m_K
    return kc.build_heff(c, kc.STRANGENESS) - shift * np.diag([m.f0, m.f0bar])


def regenerator_rho(m: MediumParams, c: KaonConstants) -> complex:
    '''ρ = (πν/m_K)(f₀ - f̄₀) / (Δm - (i/2)ΔΓ)'''
    return complex(m.drive / _splitting(c))


def rhobar_pair(rho: complex) -> Tuple[complex, complex]:
    '''
    计算 ρ̄ = √(1+4ρ²)+2ρ 及其倒数 √(1+4ρ²)-2ρ

    两者中模较小的一个由另一个取倒数得到, 避免相消误差。

    Returns:
        (ρ̄, ρ̄⁻¹)
    '''
    root = cmath.sqrt(1 + 4 * rho * rho)
    plus = root + 2 * rho
    minus = root - 2 * rho
    if abs(plus) >= abs(minus):
        return plus, 1 / plus
    return 1 / minus, minus


def inside_matter_matrix(m: MediumParams, c: KaonConstants) -> np.ndarray:
    '''列向量依次为归一化的 K'_S 与 K'_L (奇异数基)'''
    r = c.q / c.p
    rhobar, rhobar_inv = rhobar_pair(regenerator_rho(m, c))
    k_long = np.array([1, r * rhobar], dtype=complex)
    k_short = np.array([1, -r * rhobar_inv], dtype=complex)
    k_long /= np.linalg.norm(k_long)
    k_short /= np.linalg.norm(k_short)
    return np.column_stack([k_short, k_long])


def eigenstates_in_matter(m: MediumParams, c: KaonConstants) -> Tuple[KaonVec, KaonVec]:
    '''
    物质内本征态

    Args:
        m: 介质参数
        c: 常数

    Returns:
        (K'_L, K'_S), 均为奇异数基下的归一化态
    '''
    trans = inside_matter_matrix(m, c)
    return KaonVec(trans[:, 1], kc.STRANGENESS), KaonVec(trans[:, 0], kc.STRANGENESS)


def inside_matter_energies(m: MediumParams, c: KaonConstants) -> Tuple[complex, complex]:
    '''K'_L 与 K'_S 的复能量 A ± β√(1+4ρ²)'''
    beta = 0.5 * _splitting(c)
    center = 0.5 * (c.mu_S + c.mu_L) - np.pi * m.nu / m.m_K * (m.f0 + m.f0bar)
    root = cmath.sqrt(1 + 4 * regenerator_rho(m, c) ** 2)
    return center + beta * root, center - beta * root


def inside_matter_overlap(m: MediumParams, c: KaonConstants) -> complex:
    '''
    准正交基的重叠闭式

    (1 - |r|²ρ̄*/ρ̄) / (√(1+|rρ̄|²)·√(1+|r/ρ̄|²)),
    数值上等于 np.vdot(K'_L, K'_S)。
    '''
    r = c.q / c.p
    rhobar, rhobar_inv = rhobar_pair(regenerator_rho(m, c))
    num = 1 - abs(r) ** 2 * rhobar.conjugate() * rhobar_inv
    den = np.sqrt(1 + abs(r * rhobar) ** 2) * np.sqrt(1 + abs(r * rhobar_inv) ** 2)
    return complex(num / den)


def to_inside_matter(v: KaonVec, m: MediumParams, c: KaonConstants) -> KaonVec:
    '''把奇异数基或自由空间基的态展开到 (K'_S, K'_L)'''
    strange = kc.to_basis(v, kc.STRANGENESS, c)
    amps = np.linalg.solve(inside_matter_matrix(m, c), strange.amps)
    return KaonVec(amps, Basis.inside_matter(m), v.t)


def regeneration_eta(m: MediumParams, c: KaonConstants, dt: float) -> complex:
    '''
    薄再生器系数 η = iρ(Δm - (i/2)ΔΓ)Δt

    Args:
        m: 介质参数
        c: 常数
        dt: 穿越再生器的固有时间(τ_S)

    Returns:
        复数 η
    '''
    if dt < 0:
        raise TimeOrderError(f"再生器厚度不能为负: Δt={dt}")
    if dt > THIN_REGENERATOR_DT:
        logger.warning(f"再生器厚度超出薄再生器近似: Δt={dt} > {THIN_REGENERATOR_DT}")
    return complex(1j * regenerator_rho(m, c) * _splitting(c) * dt)
