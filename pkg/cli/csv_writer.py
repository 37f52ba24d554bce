'''CSV 读写'''
import sys
from pathlib import Path
from typing import List, Optional

import pandas as pd

from core.errors import KaonDynError, SampleFileError
from core.logger import get_log_manager
from core.observables import AsymmetrySample

logger = get_log_manager().get_logger('csv_writer')

FLOAT_FORMAT = '%.9g'
SAMPLE_COLUMNS = ('t_l', 't_r', 'value')


def write_frame(frame: pd.DataFrame, out: Optional[str] = None):
    '''
    输出 CSV: 逗号分隔, 带表头, LF 换行, 9位有效数字

    Args:
        frame: 数据表
        out: 文件路径; None 或 '-' 表示标准输出
    '''
    options = dict(index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    if out in (None, '-'):
        frame.to_csv(sys.stdout, **options)
        return
    path = Path(out)
    if path.parent != Path('.'):
        path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, **options)
    logger.info(f"CSV 已写入: {path} ({len(frame)}行)")


def read_samples(path) -> List[AsymmetrySample]:
    '''
    读取不对称度样本文件, 表头为 t_l,t_r,value[,sigma]

    Args:
        path: 文件路径

    Returns:
        样本列表
    '''
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise SampleFileError(f"样本文件为空: {path}") from None
    except pd.errors.ParserError as e:
        raise SampleFileError(f"样本文件无法解析: {e}") from e

    frame.columns = [str(col).strip() for col in frame.columns]
    missing = [col for col in SAMPLE_COLUMNS if col not in frame.columns]
    if missing:
        raise SampleFileError(f"缺少列: {', '.join(missing)}", 1)
    if frame.empty:
        raise SampleFileError(f"样本文件没有数据行: {path}")

    has_sigma = 'sigma' in frame.columns
    samples = []
    for index, row in frame.iterrows():
        line = int(index) + 2
        try:
            sigma = float(row['sigma']) if has_sigma and row['sigma'].strip() else 1.0
            samples.append(AsymmetrySample(float(row['t_l']), float(row['t_r']),
                                           float(row['value']), sigma))
        except (ValueError, KaonDynError) as e:
            raise SampleFileError(f"无效的数据行: {e}", line) from None
    logger.info(f"读取样本 {len(samples)} 个: {path}")
    return samples
