'''
命令行入口

子命令: oscillation | asymmetry | entanglement-loss | fit | regenerate | synthesize | selftest
退出码: 0 成功, 1 运行或 I/O 错误, 2 用法或配置错误
'''
import argparse
import os
import sys
import traceback
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import pandas as pd

from cli import csv_writer, selftest
from config.config_manager import get_config_manager
from config.param_file import RunConfig, load_run_config
from core import kaon_core as kc
from core import measures, observables, pairs
from core.errors import ConfigError, KaonDynError, SampleFileError
from core.logger import get_log_manager

logger = get_log_manager().get_logger('commands')

CONFIG_ENV = 'KAONDYN_CONFIG'
EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


def cmd_oscillation(cfg: RunConfig) -> pd.DataFrame:
    '''K⁰ 束流中 K⁰ 与 K̄⁰ 的出现概率'''
    t = cfg.times()
    return pd.DataFrame({
        't': t,
        'P_K0': kc.survival_prob(t, cfg.constants),
        'P_K0bar': kc.oscillation_prob(t, cfg.constants),
    })


def cmd_asymmetry(cfg: RunConfig) -> pd.DataFrame:
    '''
    dt 模式: 固定 τ, Δt 取网格; t 模式: Δt = 0, t 取网格
    '''
    grid = cfg.times()
    c = cfg.constants
    if cfg.mode == 'dt':
        t_r = np.full_like(grid, cfg.tau)
        t_l = t_r + grid
        return pd.DataFrame({
            'dt': grid,
            'A_qm': observables.asymmetry_qm(t_l, t_r, c),
            'A_lambda': observables.asymmetry_decohered(t_l, t_r, c),
        })
    return pd.DataFrame({
        't': grid,
        'A_qm': observables.asymmetry_qm(grid, grid, c),
        'A_lambda': observables.asymmetry_decohered(grid, grid, c),
    })


def cmd_entanglement_loss(cfg: RunConfig) -> pd.DataFrame:
    '''每个 λ 的熵与纠缠损失曲线'''
    frames = []
    for lambda_mev in cfg.lambdas_mev:
        c = cfg.constants.with_lambda(float(cfg.units.energy_to_natural(lambda_mev)))
        reports = measures.loss_curve(c, cfg.times())
        frames.append(pd.DataFrame({
            'lambda_mev': lambda_mev,
            'tau': [r.t for r in reports],
            'S': [r.S_total for r in reports],
            'L_E': [r.L_E for r in reports],
            'L_C': [r.L_C for r in reports],
        }))
        logger.info(f"λ={lambda_mev} MeV 计算完成, 共{len(reports)}个时间点")
    return pd.concat(frames, ignore_index=True)


def cmd_regenerate(cfg: RunConfig) -> pd.DataFrame:
    '''薄再生器后 |Φ⟩ 的系数与各分量权重随 T 的变化'''
    if cfg.medium is None:
        raise ConfigError("regenerate 需要介质参数 (medium.drive_re/drive_im 或 medium.nu/m_K/f0/f0bar)")
    c = cfg.constants
    times = cfg.times()
    if times[0] < 1.0 or times[-1] > 1.0 / c.gamma_L:
        logger.warning(f"T 网格超出推荐区间 [τ_S, τ_L]: [{times[0]}, {times[-1]}]")
    regenerated, _ = pairs.regenerate_thin(pairs.singlet(c), cfg.medium, cfg.medium_dt, c)
    rows = []
    for T in times:
        phi, coeffs = pairs.propagate_and_normalize(regenerated, float(T), c, warn_range=False)
        weights = np.abs(phi.amps) ** 2
        rows.append({
            'T': T,
            'abs_R_L': abs(coeffs.R_L),
            'abs_R_S': abs(coeffs.R_S),
            'p_SS': weights[0],
            'p_SL': weights[1],
            'p_LS': weights[2],
            'p_LL': weights[3],
        })
    return pd.DataFrame(rows)


def cmd_synthesize(cfg: RunConfig) -> pd.DataFrame:
    '''合成不对称度样本, 供 fit 使用'''
    grid = observables.reference_grid(tau_max=cfg.t_end)
    samples = observables.synthesize_asymmetry_data(cfg.constants, grid, cfg.noise, cfg.seed)
    return pd.DataFrame({
        't_l': [s.t_l for s in samples],
        't_r': [s.t_r for s in samples],
        'value': [s.value for s in samples],
        'sigma': [s.sigma for s in samples],
    })


def cmd_fit(cfg: RunConfig, samples_path: str) -> observables.FitResult:
    '''
    拟合 λ 并打印报告; 若指定 --out 则另存残差表

    Args:
        cfg: 运行参数
        samples_path: 样本 CSV
    '''
    samples = csv_writer.read_samples(samples_path)
    lambda_max = float(get_config_manager().get_numerics().get('fit_lambda_max', observables.DEFAULT_LAMBDA_MAX))
    result = observables.fit_lambda(samples, cfg.constants, lambda_max=lambda_max,
                                    reference_taus=(cfg.tau,), units=cfg.units)
    report = sys.stderr if cfg.out == '-' else sys.stdout
    flag = ' (boundary)' if result.at_boundary else ''
    print(f"lambda_hat = {result.lambda_hat:.9g} /tau_S{flag}", file=report)
    print(f"lambda_sigma = {result.lambda_sigma:.9g} /tau_S", file=report)
    print(f"lambda_mev = {result.lambda_mev:.9g} MeV", file=report)
    for tau, zeta in result.zeta_hat.items():
        print(f"zeta_hat(tau={tau:g}) = {zeta:.9g}", file=report)
    print(f"sum_sq_residual = {result.sum_sq_residual:.9g}", file=report)
    print(f"samples = {result.n_samples}, evaluations = {result.iterations}", file=report)
    if cfg.out is not None:
        fitted = cfg.constants.with_lambda(result.lambda_hat)
        t_l = [s.t_l for s in samples]
        t_r = [s.t_r for s in samples]
        csv_writer.write_frame(pd.DataFrame({
            't_l': t_l,
            't_r': t_r,
            'value': [s.value for s in samples],
            'model': observables.asymmetry_decohered(t_l, t_r, fitted),
            'residual': result.residuals,
        }), cfg.out)
    return result


FRAME_COMMANDS: Dict[str, Callable[[RunConfig], pd.DataFrame]] = {
    'oscillation': cmd_oscillation,
    'asymmetry': cmd_asymmetry,
    'entanglement-loss': cmd_entanglement_loss,
    'regenerate': cmd_regenerate,
    'synthesize': cmd_synthesize,
}


def build_parser() -> argparse.ArgumentParser:
    '''构造参数解析器, 所有子命令共享同一组长参数'''
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help=f'参数文件, 默认取环境变量 {CONFIG_ENV}')
    common.add_argument('--out', help="输出 CSV 路径, '-' 为标准输出")
    common.add_argument('--lambda-mev', type=float, help='退相干参数 λ (MeV)')
    common.add_argument('--lambda-natural', type=float, help='退相干参数 λ (1/τ_S)')
    common.add_argument('--eps-re', type=float, help='CP 破坏参数 ε 实部')
    common.add_argument('--eps-im', type=float, help='CP 破坏参数 ε 虚部')
    common.add_argument('--t-start', type=float, help='时间网格起点 (τ_S)')
    common.add_argument('--t-end', type=float, help='时间网格终点 (τ_S)')
    common.add_argument('--points', type=int, help='时间网格点数')
    common.add_argument('--seed', type=int, help='随机种子')
    common.add_argument('--mode', choices=('dt', 't'), help='asymmetry 的扫描方式')
    common.add_argument('--tau', type=float, help='参考时间 τ (τ_S)')
    common.add_argument('--noise', type=float, help='合成数据的噪声标准差')
    common.add_argument('--log-level', choices=('DEBUG', 'INFO', 'WARNING', 'ERROR'), help='日志级别')

    parser = argparse.ArgumentParser(prog='kaondyn', description='中性K介子动力学、退相干与纠缠度量')
    sub = parser.add_subparsers(dest='command', required=True)
    sub.add_parser('oscillation', parents=[common], help='K⁰/K̄⁰ 概率曲线')
    sub.add_parser('asymmetry', parents=[common], help='不对称度 A_qm 与 A_lambda')
    sub.add_parser('entanglement-loss', parents=[common], help='熵与纠缠损失')
    fit = sub.add_parser('fit', parents=[common], help='由样本文件拟合 λ')
    fit.add_argument('samples', help='样本 CSV (t_l,t_r,value,sigma)')
    sub.add_parser('regenerate', parents=[common], help='薄再生器后的 |Φ⟩')
    sub.add_parser('synthesize', parents=[common], help='合成不对称度样本')
    sub.add_parser('selftest', parents=[common], help='运行不变量自检')
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {
        'constants.lambda_mev': args.lambda_mev,
        'constants.eps_re': args.eps_re,
        'constants.eps_im': args.eps_im,
        'run.t_start': args.t_start,
        'run.t_end': args.t_end,
        'run.points': args.points,
        'run.seed': args.seed,
        'run.mode': args.mode,
        'run.tau': args.tau,
        'run.noise': args.noise,
        'run.out': args.out,
    }


def resolve_config(args: argparse.Namespace) -> RunConfig:
    '''参数文件、环境变量与命令行合并为 RunConfig'''
    if args.lambda_mev is not None and args.lambda_natural is not None:
        raise ConfigError("--lambda-mev 与 --lambda-natural 不能同时使用")
    path = args.config or os.environ.get(CONFIG_ENV) or None
    cfg = load_run_config(args.command, path, _overrides(args))
    if args.lambda_natural is not None:
        try:
            cfg.constants = cfg.constants.with_lambda(args.lambda_natural)
        except KaonDynError as e:
            raise ConfigError(f"λ 不合法: {e}") from e
    if args.lambda_mev is not None or args.lambda_natural is not None:
        cfg.lambdas_mev = [float(cfg.units.energy_from_natural(cfg.constants.lam))]
    return cfg


def run(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    logger.info(f"执行子命令: {cfg.command}")
    if cfg.command == 'selftest':
        return EXIT_OK if selftest.run_selftest(cfg.constants) else EXIT_RUNTIME
    if cfg.command == 'fit':
        cmd_fit(cfg, args.samples)
        return EXIT_OK
    csv_writer.write_frame(FRAME_COMMANDS[cfg.command](cfg), cfg.out)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    '''命令行主函数, 返回退出码'''
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    manager = get_config_manager()
    if args.log_level:
        get_log_manager().set_logger_level(args.log_level)
    if not manager.validate_config():
        logger.warning("配置文件不完整, 使用内置默认值")

    try:
        return run(args)
    except (ConfigError, SampleFileError) as e:
        logger.error(f"参数错误: {e}")
        return EXIT_USAGE
    except (KaonDynError, OSError) as e:
        logger.error(f"执行失败: {e}")
        return EXIT_RUNTIME
    except Exception as e:
        logger.error(f"未预期的错误: {e}")
        traceback.print_exc()
        return EXIT_RUNTIME
