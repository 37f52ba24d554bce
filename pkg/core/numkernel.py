'''
小型复矩阵运算

所有矩阵均为 complex128 的 numpy 数组, 维度限定在 {2, 3, 4, 8, 16}。
两粒子空间的下标顺序为 2*(左下标) + (右下标), 左因子为慢下标。
'''
import numpy as np
import scipy.linalg

from core.errors import ConvergenceError, DimensionError, NotHermitianError, ParameterError
from core.logger import get_log_manager

logger = get_log_manager().get_logger('numkernel')

VALID_DIMS = (2, 3, 4, 8, 16)
MAX_DIM = 16
HERMITIAN_TOL = 1e-10
RECONSTRUCTION_TOL = 1e-9

IDENTITY2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def check_finite(arr: np.ndarray, what: str = '矩阵') -> np.ndarray:
    '''NaN/Inf 不允许离开本模块'''
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{what}含有非有限数值")
    return arr


def as_cmatrix(m, name: str = '矩阵') -> np.ndarray:
    '''
    转换并校验方阵

    Args:
        m: 任意可转为二维数组的对象
        name: 出错时的名称

    Returns:
        complex128 方阵
    '''
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name}不是方阵: shape={arr.shape}")
    if arr.shape[0] not in VALID_DIMS:
        raise DimensionError(f"{name}维度{arr.shape[0]}不在{VALID_DIMS}中")
    return check_finite(arr, name)


def dagger(m: np.ndarray) -> np.ndarray:
    '''共轭转置'''
    return np.conj(m).T


def hermiticity_error(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - dagger(m))))


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return hermiticity_error(np.asarray(m, dtype=complex)) < tol


def sort_spectrum(values: np.ndarray) -> np.ndarray:
    '''按实部降序排列, 实部相同时按虚部降序'''
    values = np.asarray(values)
    order = np.lexsort((-values.imag, -values.real))
    return values[order]


def kron(a, b) -> np.ndarray:
    '''
    Kronecker 积

    Args:
        a: 左因子
        b: 右因子

    Returns:
        a ⊗ b, 维度不超过16
    '''
    a = as_cmatrix(a, '左因子')
    b = as_cmatrix(b, '右因子')
    if a.shape[0] * b.shape[0] > MAX_DIM:
        raise DimensionError(f"张量积维度{a.shape[0] * b.shape[0]}超过{MAX_DIM}")
    return np.kron(a, b)


def partial_trace(m, subsystem: str) -> np.ndarray:
    '''
    两比特矩阵的偏迹

    Args:
        m: 4x4 矩阵
        subsystem: 被求迹的子系统, 'left' 或 'right'

    Returns:
        2x2 约化矩阵
    '''
    m = as_cmatrix(m)
    if m.shape != (4, 4):
        raise DimensionError(f"偏迹只支持4x4矩阵, 实际为{m.shape}")
    blocks = m.reshape(2, 2, 2, 2)
    if subsystem == 'right':
        return np.einsum('ijkj->ik', blocks)
    if subsystem == 'left':
        return np.einsum('ijil->jl', blocks)
    raise ValueError(f"未知子系统: {subsystem}")


def eig_hermitian(m, vectors: bool = False):
    '''
    厄米矩阵本征值(降序)

    Args:
        m: 厄米方阵
        vectors: 是否同时返回本征向量(按列)

    Returns:
        实本征值数组, 或 (本征值, 本征向量)
    '''
    m = as_cmatrix(m)
    err = hermiticity_error(m)
    if err >= HERMITIAN_TOL:
        raise NotHermitianError(f"矩阵非厄米, 偏差 {err:.3e}")
    # 对称化后再分解
    herm = 0.5 * (m + dagger(m))
    try:
        values, vecs = np.linalg.eigh(herm)
    except np.linalg.LinAlgError as e:
        raise ConvergenceError(f"厄米本征分解失败: {e}") from e
    values = values[::-1]
    vecs = vecs[:, ::-1]
    residual = np.max(np.abs(herm - vecs @ np.diag(values) @ dagger(vecs)))
    scale = max(1.0, float(np.max(np.abs(herm))))
    if residual > RECONSTRUCTION_TOL * scale:
        raise ConvergenceError(f"本征分解重构误差过大: {residual:.3e}")
    if vectors:
        return values, vecs
    return values


def eig_general(m) -> np.ndarray:
    '''
    一般复矩阵的本征值(dim <= 4)

    Args:
        m: 方阵, 例如非厄米的有效哈密顿量或 R = ρρ̃

    Returns:
        复本征值数组, 已排序
    '''
    m = as_cmatrix(m)
    if m.shape[0] > 4:
        raise DimensionError(f"一般本征值只支持维度<=4, 实际为{m.shape[0]}")
    try:
        values = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as e:
        raise ConvergenceError(f"本征值迭代不收敛: {e}") from e
    return sort_spectrum(check_finite(values, '本征值'))


def expm(m) -> np.ndarray:
    '''矩阵指数(缩放平方法)'''
    m = as_cmatrix(m)
    return check_finite(scipy.linalg.expm(m), '矩阵指数')
