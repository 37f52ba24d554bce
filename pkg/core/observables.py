'''
EPR 关联观测量: 联合探测概率、不对称度、有效退相干参数 ζ 与 λ 拟合
'''
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.optimize

from core import kaon_core as kc
from core import numkernel as nk
from core import openquantum as oq
from core.errors import ParameterError, TimeOrderError, UnidentifiableError
from core.kaon_core import KaonConstants
from core.logger import get_log_manager

logger = get_log_manager().get_logger('observables')

OUTCOMES = ('K0', 'K0bar')
# ε = 0 时奇异数本征态在 (K_S, K_L) 下的坐标
STRANGENESS_IN_FREE_SPACE = {
    'K0': np.array([1, 1], dtype=complex) / np.sqrt(2),
    'K0bar': np.array([-1, 1], dtype=complex) / np.sqrt(2),
}
A_QM_DEGENERATE = 1e-12
BOUNDARY_LAMBDA = 1e-8
DEFAULT_LAMBDA_MAX = 10.0
DEFAULT_REFERENCE_TAUS = (0.55,)


@dataclass(frozen=True)
class CorrelationReport:
    t_l: float
    t_r: float
    P_unlike: float
    P_like: float
    A_qm: float
    A_lambda: float
    zeta: float


@dataclass(frozen=True)
class AsymmetrySample:
    '''一个不对称度测量点, 时间以 τ_S 为单位'''
    t_l: float
    t_r: float
    value: float
    sigma: float = 1.0

    def __post_init__(self):
        if not all(math.isfinite(x) for x in (self.t_l, self.t_r, self.value, self.sigma)):
            raise ParameterError("样本必须为有限值")
        if self.t_l < 0 or self.t_r < 0:
            raise TimeOrderError(f"样本时间不能为负: ({self.t_l}, {self.t_r})")
        if self.sigma <= 0:
            raise ParameterError(f"样本误差必须为正: σ={self.sigma}")


@dataclass(frozen=True)
class FitResult:
    '''
    最小二乘拟合结果

    Attributes:
        lambda_hat: λ̂ (自然单位)
        lambda_sigma: 由目标函数曲率估计的 λ̂ 误差
        lambda_mev: λ̂ (MeV)
        zeta_hat: 参考时间 τ 处的 ζ̂
        sum_sq_residual: 加权残差平方和
        iterations: 目标函数求值次数
        at_boundary: λ̂ 是否落在搜索区间端点
    '''
    lambda_hat: float
    lambda_sigma: float
    lambda_mev: float
    zeta_hat: Dict[float, float]
    sum_sq_residual: float
    iterations: int
    at_boundary: bool
    n_samples: int = 0
    residuals: Tuple[float, ...] = field(default_factory=tuple)


def _times(t_l, t_r) -> Tuple[np.ndarray, np.ndarray]:
    '''返回 τ = min(t_l, t_r) 与 Δt = |t_l - t_r|'''
    t_l = np.asarray(t_l, dtype=float)
    t_r = np.asarray(t_r, dtype=float)
    if np.any(t_l < 0) or np.any(t_r < 0):
        raise TimeOrderError(f"探测时间不能为负: t_l={t_l}, t_r={t_r}")
    return np.minimum(t_l, t_r), np.abs(t_l - t_r)


def _check_outcome(outcome: str):
    if outcome not in OUTCOMES:
        raise ParameterError(f"未知探测结果: {outcome}, 可选值: {OUTCOMES}")


def joint_probability(outcome_l: str, t_l, outcome_r: str, t_r, c: KaonConstants,
                      raw_tr: bool = False):
    '''
    左右两侧分别在 t_l, t_r 探测到给定奇异数的联合概率

    P = ⅛e^{-2Γτ}(e^{-Γ_SΔt} + e^{-Γ_LΔt} ± 2e^{-λτ}cos(ΔmΔt)e^{-ΓΔt}),
    奇异数相反取 +, 相同取 -。

    Args:
        outcome_l, outcome_r: 'K0' 或 'K0bar'
        t_l, t_r: 探测时间(可为数组)
        c: 常数
        raw_tr: 为 True 时指数中直接用 t_r 而不是 τ = min(t_l, t_r)

    Returns:
        概率
    '''
    _check_outcome(outcome_l)
    _check_outcome(outcome_r)
    tau, dt = _times(t_l, t_r)
    if raw_tr:
        tau = np.asarray(t_r, dtype=float)
    sign = 1.0 if outcome_l != outcome_r else -1.0
    value = 0.125 * np.exp(-2.0 * c.gamma * tau) * (
        np.exp(-c.gamma_S * dt) + np.exp(-c.gamma_L * dt)
        + sign * 2.0 * np.exp(-c.lam * tau) * np.cos(c.delta_m * dt) * np.exp(-c.gamma * dt))
    return value if np.ndim(value) else float(value)


def joint_probability_from_density(outcome_l: str, t_l: float, outcome_r: str, t_r: float,
                                   c: KaonConstants) -> float:
    '''
    先探测到的一侧使态坍缩, 另一侧随后无退相干地演化 Δt 再探测

    与 joint_probability 相互独立, 用作两条路线的一致性检验。
    '''
    _check_outcome(outcome_l)
    _check_outcome(outcome_r)
    tau, dt = (float(x) for x in _times(t_l, t_r))
    rho = oq.embed_pair(oq.pair_closed_form(tau, c))
    if t_l <= t_r:
        first, second, traced = outcome_l, outcome_r, 'left'
        proj = np.kron(_projector(first), np.eye(2))
    else:
        first, second, traced = outcome_r, outcome_l, 'right'
        proj = np.kron(np.eye(2), _projector(first))
    other = nk.partial_trace(proj @ rho @ proj, traced)
    f_s, f_l = kc.decay_factors(dt, c)
    evolve = np.diag([f_s, f_l])
    other = evolve @ other @ nk.dagger(evolve)
    state = STRANGENESS_IN_FREE_SPACE[second]
    return float(np.real(np.vdot(state, other @ state)))


def _projector(outcome: str) -> np.ndarray:
    state = STRANGENESS_IN_FREE_SPACE[outcome]
    return np.outer(state, state.conj())


def asymmetry_qm(t_l, t_r, c: KaonConstants):
    '''A^QM = cos(ΔmΔt)/cosh(½ΔΓΔt)'''
    _, dt = _times(t_l, t_r)
    value = np.cos(c.delta_m * dt) / np.cosh(0.5 * c.delta_gamma * dt)
    return value if np.ndim(value) else float(value)


def asymmetry_from_probabilities(t_l, t_r, c: KaonConstants):
    '''由四个联合概率计算的比值形式不对称度 (P_unlike - P_like)/(P_unlike + P_like)'''
    unlike = joint_probability('K0', t_l, 'K0bar', t_r, c) + joint_probability('K0bar', t_l, 'K0', t_r, c)
    like = joint_probability('K0', t_l, 'K0', t_r, c) + joint_probability('K0bar', t_l, 'K0bar', t_r, c)
    value = (np.asarray(unlike) - like) / (np.asarray(unlike) + like)
    return value if np.ndim(value) else float(value)


def asymmetry_decohered(t_l, t_r, c: KaonConstants):
    '''A^λ = A^QM·e^{-λτ}, τ 为先探测到的K介子的时间'''
    tau, _ = _times(t_l, t_r)
    value = asymmetry_qm(t_l, t_r, c) * np.exp(-c.lam * tau)
    return value if np.ndim(value) else float(value)


def effective_zeta(t_l, t_r, c: KaonConstants):
    '''ζ = 1 - e^{-λτ}'''
    tau, _ = _times(t_l, t_r)
    value = -np.expm1(-c.lam * tau)
    return value if np.ndim(value) else float(value)


def correlation_report(t_l: float, t_r: float, c: KaonConstants) -> CorrelationReport:
    return CorrelationReport(
        t_l=float(t_l),
        t_r=float(t_r),
        P_unlike=joint_probability('K0', t_l, 'K0bar', t_r, c),
        P_like=joint_probability('K0', t_l, 'K0', t_r, c),
        A_qm=asymmetry_qm(t_l, t_r, c),
        A_lambda=asymmetry_decohered(t_l, t_r, c),
        zeta=effective_zeta(t_l, t_r, c),
    )


def synthesize_asymmetry_data(c: KaonConstants, grid: Iterable[Tuple[float, float]],
                              noise_sigma: float, seed: int) -> List[AsymmetrySample]:
    '''
    合成不对称度数据: A^λ 加高斯噪声, 同一 seed 输出相同

    Args:
        c: 生成数据所用的常数(含 λ)
        grid: (t_l, t_r) 列表
        noise_sigma: 噪声标准差
        seed: 随机种子

    Returns:
        样本列表; noise_sigma 为0时 sigma 记为1
    '''
    if noise_sigma < 0:
        raise ParameterError(f"噪声标准差不能为负: {noise_sigma}")
    points = np.asarray(list(grid), dtype=float).reshape(-1, 2)
    model = np.atleast_1d(asymmetry_decohered(points[:, 0], points[:, 1], c))
    rng = np.random.default_rng(seed)
    values = model + rng.normal(0.0, noise_sigma, size=model.shape)
    sigma = noise_sigma if noise_sigma > 0 else 1.0
    return [AsymmetrySample(float(tl), float(tr), float(v), sigma)
            for (tl, tr), v in zip(points, values)]


def reference_grid(n_tau: int = 20, n_dt: int = 10, tau_max: float = 5.0,
                   dt_max: float = 2.0) -> List[Tuple[float, float]]:
    '''合成数据的默认 (t_l, t_r) 网格, 右侧先探测'''
    grid = []
    for tau in np.linspace(0.1, tau_max, n_tau):
        for dt in np.linspace(0.0, dt_max, n_dt):
            grid.append((float(tau + dt), float(tau)))
    return grid


def fit_lambda(samples: Sequence[AsymmetrySample], c: KaonConstants,
               lambda_max: float = DEFAULT_LAMBDA_MAX,
               reference_taus: Sequence[float] = DEFAULT_REFERENCE_TAUS,
               units: Optional[kc.UnitSystem] = None) -> FitResult:
    '''
    最小二乘拟合退相干参数

    在 [0, lambda_max] 上对 Σ((A^λ - value)/σ)² 做一维有界最小化
    (黄金分割加抛物线插值)。

    Args:
        samples: 至少2个样本
        c: 常数(其中 λ 不参与拟合)
        lambda_max: 搜索上限(1/τ_S)
        reference_taus: 报告 ζ̂ 的参考时间
        units: 单位制, 用于换算 λ̂ 到 MeV

    Returns:
        FitResult
    '''
    if len(samples) < 2:
        raise UnidentifiableError(f"至少需要2个样本, 实际为{len(samples)}")
    t_l = np.array([s.t_l for s in samples])
    t_r = np.array([s.t_r for s in samples])
    values = np.array([s.value for s in samples])
    sigma = np.array([s.sigma for s in samples])
    a_qm = np.atleast_1d(asymmetry_qm(t_l, t_r, c))
    tau, _ = _times(t_l, t_r)
    informative = (np.abs(a_qm) >= A_QM_DEGENERATE) & (tau > 0)
    if not np.any(informative):
        raise UnidentifiableError("所有样本的 A^QM 为零或 τ 为零, λ 无法确定")

    def residuals(lam: float) -> np.ndarray:
        return (a_qm * np.exp(-lam * tau) - values) / sigma

    def objective(lam: float) -> float:
        r = residuals(lam)
        return float(r @ r)

    result = scipy.optimize.minimize_scalar(objective, bounds=(0.0, lambda_max), method='bounded',
                                            options={'xatol': 1e-12, 'maxiter': 1000})
    if not result.success:
        logger.warning(f"λ 拟合未收敛: {result.message}")
    lam = float(result.x)
    at_boundary = False
    if lam < BOUNDARY_LAMBDA or objective(0.0) <= objective(lam):
        lam = 0.0
        at_boundary = True
    elif lambda_max - lam < 1e-6 * lambda_max:
        at_boundary = True
    if at_boundary:
        logger.warning(f"λ 拟合落在搜索区间端点: λ̂={lam}")

    units = units or kc.UnitSystem()
    residual = residuals(lam)
    return FitResult(
        lambda_hat=lam,
        lambda_sigma=_curvature_sigma(objective, lam, lambda_max),
        lambda_mev=float(units.energy_from_natural(lam)),
        zeta_hat={float(t): float(-math.expm1(-lam * t)) for t in reference_taus},
        sum_sq_residual=float(residual @ residual),
        iterations=int(getattr(result, 'nfev', 0)),
        at_boundary=at_boundary,
        n_samples=len(samples),
        residuals=tuple(float(r) for r in residual),
    )


def _curvature_sigma(objective, lam: float, lambda_max: float) -> float:
    '''σ_λ ≈ √(2/χ''), χ'' 取二阶差分'''
    h = max(1e-4, 1e-4 * lam)
    if lam - h >= 0 and lam + h <= lambda_max:
        second = (objective(lam + h) - 2 * objective(lam) + objective(lam - h)) / h ** 2
    else:
        second = (objective(lam + 2 * h) - 2 * objective(lam + h) + objective(lam)) / h ** 2
    if second <= 0:
        return math.inf
    return math.sqrt(2.0 / second)


def reference_values(physics: Optional[dict] = None) -> Dict[str, float]:
    '''实验参考值(仅记录, 不复现)'''
    if physics is None:
        from config.config_manager import get_config_manager
        physics = get_config_manager().get_physics()
    return dict(physics.get('reference', {}))
