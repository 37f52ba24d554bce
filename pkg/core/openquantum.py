'''
GKSL 主方程

ρ̇ = -i(Hρ - ρH†) + Σ_j (L_j ρ L_j† - ½{L_j†L_j, ρ}) + Σ_k B_k ρ B_k†,  H = M - (i/2)Γ

矩阵按行展开为向量: vec(AXB) = (A ⊗ Bᵀ) vec(X)。
'''
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Tuple

import numpy as np

from core import numkernel as nk
from core.errors import DimensionError, NotHermitianError, NormalizationError, TimeOrderError
from core.kaon_core import KaonConstants
from core.logger import get_log_manager

logger = get_log_manager().get_logger('openquantum')

DENSITY_HERMITIAN_TOL = 1e-10
DENSITY_EIGEN_TOL = 1e-10
DENSITY_TRACE_TOL = 1e-9

# {e₁, e₂} 支撑在自由空间两粒子基中的位置 (S⊗L, L⊗S)
PAIR_SUPPORT = (1, 2)


@dataclass(frozen=True, eq=False)
class LindbladSpec:
    '''
    GKSL 生成元

    Attributes:
        M: 厄米质量矩阵
        Gamma: 厄米半正定衰变矩阵
        jumps: 跃迁算符 L_j, 带反对易子项
        feeds: 只贡献 BρB† 的算符 (衰变通道, 反对易子已含于 Gamma)
    '''
    M: np.ndarray
    Gamma: np.ndarray
    jumps: Tuple[np.ndarray, ...] = field(default_factory=tuple)
    feeds: Tuple[np.ndarray, ...] = field(default_factory=tuple)

    def __post_init__(self):
        mass = np.asarray(self.M, dtype=complex)
        width = np.asarray(self.Gamma, dtype=complex)
        if mass.shape != width.shape or mass.ndim != 2 or mass.shape[0] != mass.shape[1]:
            raise DimensionError(f"M 与 Γ 维度不一致: {mass.shape}, {width.shape}")
        if not nk.is_hermitian(mass):
            raise NotHermitianError("质量矩阵 M 必须厄米")
        if np.min(nk.eig_hermitian(width)) < -DENSITY_EIGEN_TOL:
            raise NotHermitianError("衰变矩阵 Γ 必须半正定")
        dim = mass.shape[0]
        jumps = tuple(np.asarray(j, dtype=complex) for j in self.jumps)
        feeds = tuple(np.asarray(b, dtype=complex) for b in self.feeds)
        for op in jumps + feeds:
            if op.shape != (dim, dim):
                raise DimensionError(f"跃迁算符维度{op.shape}与系统维度{dim}不一致")
        object.__setattr__(self, 'M', mass)
        object.__setattr__(self, 'Gamma', width)
        object.__setattr__(self, 'jumps', jumps)
        object.__setattr__(self, 'feeds', feeds)

    @property
    def dim(self) -> int:
        return self.M.shape[0]

    @property
    def hamiltonian(self) -> np.ndarray:
        '''H = M - (i/2)Γ'''
        return self.M - 0.5j * self.Gamma


def check_density(rho, allow_decayed: bool = True) -> np.ndarray:
    '''
    校验密度矩阵

    Args:
        rho: 方阵
        allow_decayed: 是否允许迹小于1

    Returns:
        complex128 数组
    '''
    rho = nk.as_cmatrix(rho, '密度矩阵')
    err = nk.hermiticity_error(rho)
    if err >= DENSITY_HERMITIAN_TOL:
        raise NotHermitianError(f"密度矩阵非厄米, 偏差 {err:.3e}")
    if np.min(nk.eig_hermitian(rho)) < -DENSITY_EIGEN_TOL:
        raise NotHermitianError("密度矩阵存在负本征值")
    trace = float(np.real(np.trace(rho)))
    if trace <= 0 or trace > 1 + DENSITY_TRACE_TOL:
        raise NormalizationError(f"密度矩阵的迹超出 (0, 1]: {trace}")
    if not allow_decayed and abs(trace - 1) > DENSITY_TRACE_TOL:
        raise NormalizationError(f"密度矩阵未归一化: tr={trace}")
    return rho


def liouvillian(spec: LindbladSpec) -> np.ndarray:
    '''dim²×dim² 超算符'''
    dim = spec.dim
    if dim * dim > nk.MAX_DIM:
        raise DimensionError(f"Liouvillian 维度{dim * dim}超过{nk.MAX_DIM}")
    eye = np.eye(dim, dtype=complex)
    ham = spec.hamiltonian
    sup = -1j * (nk.kron(ham, eye) - nk.kron(eye, ham.conj()))
    for op in spec.jumps:
        rate = nk.dagger(op) @ op
        sup += nk.kron(op, op.conj()) - 0.5 * nk.kron(rate, eye) - 0.5 * nk.kron(eye, rate.T)
    for op in spec.feeds:
        sup += nk.kron(op, op.conj())
    return sup


def _check_inputs(spec: LindbladSpec, rho0, t: float) -> np.ndarray:
    if t < 0:
        raise TimeOrderError(f"传播时间不能为负: t={t}")
    rho0 = nk.as_cmatrix(rho0, '初始密度矩阵')
    if rho0.shape != (spec.dim, spec.dim):
        raise DimensionError(f"初态维度{rho0.shape}与生成元维度{spec.dim}不一致")
    return rho0


def _hermitize(rho: np.ndarray) -> np.ndarray:
    return 0.5 * (rho + nk.dagger(rho))


def liouvillian_propagate(spec: LindbladSpec, rho0, t: float) -> np.ndarray:
    '''
    ρ(t) = e^{𝓛t} ρ(0)

    Args:
        spec: 生成元
        rho0: 初始密度矩阵
        t: 时间(τ_S)

    Returns:
        ρ(t)
    '''
    rho0 = _check_inputs(spec, rho0, t)
    prop = nk.expm(liouvillian(spec) * t)
    rho = (prop @ rho0.reshape(-1)).reshape(spec.dim, spec.dim)
    return _hermitize(rho)


def propagate_grid(spec: LindbladSpec, rho0, times: Iterable[float],
                   workers: Optional[int] = None) -> List[np.ndarray]:
    '''
    在时间网格上逐点传播, 各点相互独立

    Args:
        spec: 生成元
        rho0: 初态
        times: 时间点
        workers: 线程数, 默认取配置 numerics.workers

    Returns:
        与 times 对应的密度矩阵列表
    '''
    times = [float(t) for t in times]
    rho0 = _check_inputs(spec, rho0, min(times, default=0.0))
    sup = liouvillian(spec)
    vec0 = rho0.reshape(-1)
    dim = spec.dim

    def one(t: float) -> np.ndarray:
        return _hermitize((nk.expm(sup * t) @ vec0).reshape(dim, dim))

    workers = workers or default_workers()
    logger.debug(f"网格传播: {len(times)}个时间点, {workers}个线程")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, times))


def default_workers() -> int:
    from config.config_manager import get_config_manager
    return int(get_config_manager().get_numerics().get('workers', 4))


def _lindblad_rhs(spec: LindbladSpec, rho: np.ndarray) -> np.ndarray:
    ham = spec.hamiltonian
    out = -1j * (ham @ rho - rho @ nk.dagger(ham))
    for op in spec.jumps:
        rate = nk.dagger(op) @ op
        out += op @ rho @ nk.dagger(op) - 0.5 * (rate @ rho + rho @ rate)
    for op in spec.feeds:
        out += op @ rho @ nk.dagger(op)
    return out


def _rk4_step(spec: LindbladSpec, rho: np.ndarray, dt: float) -> np.ndarray:
    k1 = _lindblad_rhs(spec, rho)
    k2 = _lindblad_rhs(spec, rho + 0.5 * dt * k1)
    k3 = _lindblad_rhs(spec, rho + 0.5 * dt * k2)
    k4 = _lindblad_rhs(spec, rho + dt * k3)
    return rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def rk4_propagate(spec: LindbladSpec, rho0, t: float, h: float = 1e-3) -> np.ndarray:
    '''四阶 Runge-Kutta 时间步进, 用作指数传播的交叉校验'''
    rho = _check_inputs(spec, rho0, t).copy()
    steps = max(1, math.ceil(t / h))
    dt = t / steps
    for _ in range(steps):
        rho = _rk4_step(spec, rho, dt)
    return _hermitize(rho)


def _projector(dim: int, index: int) -> np.ndarray:
    proj = np.zeros((dim, dim), dtype=complex)
    proj[index, index] = 1.0
    return proj


def decoherence_ansatz(c: KaonConstants, system: str = 'single') -> LindbladSpec:
    '''
    投影算符退相干: 𝒟(ρ) = (λ/2)Σ[P_j,[P_j,ρ]], L_j = √λ P_j

    Args:
        c: 常数
        system: 'single' 为单粒子自由空间基 (K_S, K_L);
                'pair' 为 {e₁, e₂} 支撑;
                'pair_full' 为完整的两粒子自由空间基

    Returns:
        LindbladSpec
    '''
    if system == 'single':
        mass = np.diag([c.m_S, c.m_L])
        width = np.diag([c.gamma_S, c.gamma_L])
        dim = 2
    elif system == 'pair':
        mass = (c.m_S + c.m_L) * np.eye(2)
        width = 2.0 * c.gamma * np.eye(2)
        dim = 2
    elif system == 'pair_full':
        masses = np.array([c.m_S, c.m_L])
        widths = np.array([c.gamma_S, c.gamma_L])
        mass = np.diag(np.add.outer(masses, masses).reshape(-1))
        width = np.diag(np.add.outer(widths, widths).reshape(-1))
        dim = 4
    else:
        raise DimensionError(f"未知系统: {system}")
    jumps = ()
    if c.lam > 0:
        jumps = tuple(np.sqrt(c.lam) * _projector(dim, k) for k in range(dim))
    return LindbladSpec(M=mass, Gamma=width, jumps=jumps)


def trace_preserving_extension(c: KaonConstants) -> LindbladSpec:
    '''
    加入衰变产物态后迹守恒的单粒子系统

    下标 0, 1 为存活的 K_S, K_L; 2, 3 为对应的衰变态。
    B = √Γ_S|2⟩⟨0| + √Γ_L|3⟩⟨1|, 满足 B†B = Γ。
    '''
    mass = np.diag([c.m_S, c.m_L, 0.0, 0.0])
    width = np.diag([c.gamma_S, c.gamma_L, 0.0, 0.0])
    decay = np.zeros((4, 4), dtype=complex)
    decay[2, 0] = np.sqrt(c.gamma_S)
    decay[3, 1] = np.sqrt(c.gamma_L)
    jumps = ()
    if c.lam > 0:
        jumps = (np.sqrt(c.lam) * _projector(4, 0), np.sqrt(c.lam) * _projector(4, 1))
    spec = LindbladSpec(M=mass, Gamma=width, jumps=jumps, feeds=(decay,))
    gap = np.max(np.abs(nk.dagger(decay) @ decay - spec.Gamma))
    if gap > 1e-12:
        raise NotHermitianError(f"B†B 与 Γ 不一致: {gap:.3e}")
    return spec


def bell_singlet_support() -> np.ndarray:
    '''|ψ⁻⟩ = (e₁ - e₂)/√2 在 {e₁, e₂} 支撑上的投影'''
    return 0.5 * np.array([[1, -1], [-1, 1]], dtype=complex)


def pair_closed_form(t: float, c: KaonConstants) -> np.ndarray:
    '''
    ρ(t) = ½e^{-2Γt}(|e₁⟩⟨e₁| + |e₂⟩⟨e₂| - e^{-λt}(|e₁⟩⟨e₂| + |e₂⟩⟨e₁|))

    Returns:
        {e₁, e₂} 坐标下的 2x2 矩阵
    '''
    if t < 0:
        raise TimeOrderError(f"时间不能为负: t={t}")
    coherence = -math.exp(-c.lam * t)
    return 0.5 * math.exp(-2.0 * c.gamma * t) * np.array([[1, coherence], [coherence, 1]], dtype=complex)


def single_closed_form(rho0, t: float, c: KaonConstants) -> np.ndarray:
    '''
    单粒子密度矩阵元的解析解 (自由空间基 K_S, K_L)

    ρ_SS(t) = ρ_SS(0)e^{-Γ_S t}, ρ_LL(t) = ρ_LL(0)e^{-Γ_L t},
    ρ_LS(t) = ρ_LS(0)e^{-(iΔm+Γ+λ)t}
    '''
    if t < 0:
        raise TimeOrderError(f"时间不能为负: t={t}")
    rho0 = nk.as_cmatrix(rho0, '初始密度矩阵')
    if rho0.shape != (2, 2):
        raise DimensionError("单粒子解析解需要2x2密度矩阵")
    off = np.exp(-(1j * c.delta_m + c.gamma + c.lam) * t)
    return np.array([
        [rho0[0, 0] * math.exp(-c.gamma_S * t), rho0[0, 1] * np.conj(off)],
        [rho0[1, 0] * off, rho0[1, 1] * math.exp(-c.gamma_L * t)],
    ], dtype=complex)


def embed_pair(rho2) -> np.ndarray:
    '''把 {e₁, e₂} 支撑上的矩阵嵌入 4x4 自由空间两粒子基'''
    rho2 = nk.as_cmatrix(rho2)
    if rho2.shape != (2, 2):
        raise DimensionError("嵌入需要2x2矩阵")
    full = np.zeros((4, 4), dtype=complex)
    full[np.ix_(PAIR_SUPPORT, PAIR_SUPPORT)] = rho2
    return full


def purity(rho) -> float:
    '''𝒫 = tr(ρ²)'''
    rho = nk.as_cmatrix(rho, '密度矩阵')
    return float(np.real(np.trace(rho @ rho)))
