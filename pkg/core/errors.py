'''kaondyn 异常类型'''


class KaonDynError(Exception):
    '''所有 kaondyn 错误的基类'''


class DimensionError(KaonDynError, ValueError):
    '''矩阵维度不合法或不匹配'''


class NotHermitianError(KaonDynError, ValueError):
    '''矩阵超出厄米容差'''


class ConvergenceError(KaonDynError, ValueError):
    '''迭代或优化未收敛'''


class BasisError(KaonDynError, ValueError):
    '''不支持的基'''


class TimeOrderError(KaonDynError, ValueError):
    '''负时间或时间倒流'''


class ParameterError(KaonDynError, ValueError):
    '''物理参数不合法或结果非有限'''


class NormalizationError(KaonDynError, ValueError):
    '''迹为零或未归一化'''


class ConcurrenceError(KaonDynError, ValueError):
    '''并发度本征值虚部超出容差'''


class UnidentifiableError(KaonDynError, ValueError):
    '''数据无法确定退相干参数'''


class ConfigError(KaonDynError, ValueError):
    '''配置文件或命令行参数错误'''

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"第{line}行: {message}"
        super().__init__(message)


class SampleFileError(KaonDynError, ValueError):
    '''样本CSV文件格式错误'''

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"第{line}行: {message}"
        super().__init__(message)
