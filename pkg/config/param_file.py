'''
运行参数文件

格式为扁平的 key = value 文本, 键带 constants. / medium. / run. 前缀, # 开头为注释。
优先级: 内置默认 < physics.json / app.json < 参数文件 < 命令行。
'''
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from core.errors import ConfigError, KaonDynError
from core.kaon_core import KaonConstants, UnitSystem
from core.logger import get_log_manager
from core.medium import MediumParams

logger = get_log_manager().get_logger('param_file')

FLOAT, INT, TEXT, FLOAT_LIST = 'float', 'int', 'text', 'float_list'

KNOWN_KEYS = {
    'constants': {
        'm_S': FLOAT, 'm_L': FLOAT, 'gamma_S': FLOAT, 'gamma_L': FLOAT,
        'lambda': FLOAT, 'lambda_mev': FLOAT, 'eps_re': FLOAT, 'eps_im': FLOAT,
        'units': TEXT,
    },
    'medium': {
        'nu': FLOAT, 'm_K': FLOAT, 'f0_re': FLOAT, 'f0_im': FLOAT,
        'f0bar_re': FLOAT, 'f0bar_im': FLOAT, 'drive_re': FLOAT, 'drive_im': FLOAT,
        'dt': FLOAT,
    },
    'run': {
        't_start': FLOAT, 't_end': FLOAT, 'points': INT, 'out': TEXT, 'seed': INT,
        'mode': TEXT, 'tau': FLOAT, 'noise': FLOAT, 'lambdas_mev': FLOAT_LIST,
    },
}
UNIT_CHOICES = ('natural', 'mev_s')
MODE_CHOICES = ('dt', 't')


@dataclass
class RunConfig:
    '''一次命令行运行的全部参数'''
    command: str
    constants: KaonConstants = field(default_factory=KaonConstants)
    units: UnitSystem = field(default_factory=UnitSystem)
    medium: Optional[MediumParams] = None
    medium_dt: float = 0.01
    t_start: float = 0.0
    t_end: float = 5.0
    points: int = 501
    out: Optional[str] = None
    seed: int = 12345
    mode: str = 'dt'
    tau: float = 0.55
    noise: float = 0.01
    lambdas_mev: List[float] = field(default_factory=list)

    def validate(self):
        if not self.t_start >= 0:
            raise ConfigError(f"t_start 不能为负: {self.t_start}")
        if not self.t_end > self.t_start:
            raise ConfigError(f"需要 t_end > t_start, 实际为 {self.t_end} <= {self.t_start}")
        if self.points < 2:
            raise ConfigError(f"points 至少为2, 实际为{self.points}")
        if self.mode not in MODE_CHOICES:
            raise ConfigError(f"未知模式: {self.mode}, 可选值: {MODE_CHOICES}")
        if self.noise < 0:
            raise ConfigError(f"噪声不能为负: {self.noise}")
        if self.tau < 0 or self.medium_dt < 0:
            raise ConfigError("tau 与 medium.dt 不能为负")
        return self

    def times(self) -> np.ndarray:
        '''[t_start, t_end] 上的等距网格'''
        return np.linspace(self.t_start, self.t_end, self.points)


def _convert(raw: str, kind: str, key: str, line: Optional[int]) -> Any:
    try:
        if kind == FLOAT:
            return float(raw)
        if kind == INT:
            return int(raw)
        if kind == FLOAT_LIST:
            return [float(item) for item in raw.split(',') if item.strip()]
        return raw
    except ValueError:
        raise ConfigError(f"{key} 的值无法解析: {raw!r}", line) from None


def parse_entry(key: str, raw: str, line: Optional[int] = None) -> Dict[str, Any]:
    '''
    解析单个 section.key = value

    Returns:
        {'section.key': 转换后的值}
    '''
    section, _, name = key.partition('.')
    kinds = KNOWN_KEYS.get(section)
    if kinds is None or name not in kinds:
        raise ConfigError(f"未知参数: {key}", line)
    return {key: _convert(raw.strip(), kinds[name], key, line)}


def parse_param_file(path) -> Dict[str, Any]:
    '''
    读取参数文件

    Args:
        path: 文件路径

    Returns:
        扁平字典 {'section.key': value}
    '''
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as e:
        raise ConfigError(f"无法读取参数文件 {path}: {e}") from e
    values: Dict[str, Any] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f"缺少 '=': {line}", number)
        key, raw = line.split('=', 1)
        values.update(parse_entry(key.strip(), raw, number))
    logger.info(f"参数文件加载成功: {path}, 共{len(values)}项")
    return values


def _build_constants(values: Dict[str, Any], base: KaonConstants, units: UnitSystem) -> KaonConstants:
    unit_mode = values.get('constants.units', 'natural')
    if unit_mode not in UNIT_CHOICES:
        raise ConfigError(f"未知单位制: {unit_mode}, 可选值: {UNIT_CHOICES}")
    energy = (lambda x: x) if unit_mode == 'natural' else units.energy_to_natural
    width = (lambda x: x) if unit_mode == 'natural' else units.width_to_natural
    changes: Dict[str, Any] = {}
    for key, attr, convert in (('m_S', 'm_S', energy), ('m_L', 'm_L', energy),
                               ('gamma_S', 'gamma_S', width), ('gamma_L', 'gamma_L', width),
                               ('lambda', 'lam', energy)):
        if f'constants.{key}' in values:
            changes[attr] = float(convert(values[f'constants.{key}']))
    if 'constants.lambda_mev' in values:
        changes['lam'] = float(units.energy_to_natural(values['constants.lambda_mev']))
    if 'constants.eps_re' in values or 'constants.eps_im' in values:
        changes['eps'] = complex(values.get('constants.eps_re', base.eps.real),
                                 values.get('constants.eps_im', base.eps.imag))
    try:
        return dataclasses.replace(base, **changes)
    except KaonDynError as e:
        raise ConfigError(f"常数不合法: {e}") from e


def _build_medium(values: Dict[str, Any]) -> Optional[MediumParams]:
    try:
        if 'medium.drive_re' in values or 'medium.drive_im' in values:
            return MediumParams.from_drive(complex(values.get('medium.drive_re', 0.0),
                                                   values.get('medium.drive_im', 0.0)))
        if 'medium.nu' in values and 'medium.m_K' in values:
            return MediumParams(
                nu=values['medium.nu'],
                m_K=values['medium.m_K'],
                f0=complex(values.get('medium.f0_re', 0.0), values.get('medium.f0_im', 0.0)),
                f0bar=complex(values.get('medium.f0bar_re', 0.0), values.get('medium.f0bar_im', 0.0)),
            )
    except KaonDynError as e:
        raise ConfigError(f"介质参数不合法: {e}") from e
    return None


def load_run_config(command: str, path=None, overrides: Optional[Dict[str, Any]] = None,
                    physics: Optional[dict] = None, run_defaults: Optional[dict] = None) -> RunConfig:
    '''
    合并各层参数得到 RunConfig

    Args:
        command: 子命令名
        path: 参数文件路径, 可为 None
        overrides: 命令行覆盖值, 键形如 'run.points'
        physics: physics 配置, 默认取配置管理器
        run_defaults: app.run 默认值, 默认取配置管理器

    Returns:
        校验过的 RunConfig
    '''
    if physics is None or run_defaults is None:
        from config.config_manager import get_config_manager
        manager = get_config_manager()
        physics = manager.get_physics() if physics is None else physics
        run_defaults = manager.get_run_defaults() if run_defaults is None else run_defaults

    values: Dict[str, Any] = {}
    for key, raw in run_defaults.items():
        if key in KNOWN_KEYS['run']:
            values[f'run.{key}'] = raw
    if path is not None:
        values.update(parse_param_file(path))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})

    units = UnitSystem.from_config(physics)
    try:
        base = KaonConstants.from_config(physics)
    except KaonDynError as e:
        raise ConfigError(f"physics.json 中的常数不合法: {e}") from e
    reference = physics.get('reference', {})
    default_lambdas = [reference.get('lambda_mean_mev', 1.84e-12), reference.get('lambda_upper_mev', 4.34e-12)]

    run = {key.split('.', 1)[1]: val for key, val in values.items() if key.startswith('run.')}
    config = RunConfig(
        command=command,
        constants=_build_constants(values, base, units),
        units=units,
        medium=_build_medium(values),
        medium_dt=float(values.get('medium.dt', 0.01)),
        t_start=float(run.get('t_start', 0.0)),
        t_end=float(run.get('t_end', 5.0)),
        points=int(run.get('points', 501)),
        out=run.get('out'),
        seed=int(run.get('seed', 12345)),
        mode=str(run.get('mode', 'dt')),
        tau=float(run.get('tau', 0.55)),
        noise=float(run.get('noise', 0.01)),
        lambdas_mev=list(run.get('lambdas_mev') or default_lambdas),
    )
    return config.validate()
