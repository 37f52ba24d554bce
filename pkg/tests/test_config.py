from pathlib import Path

import pytest

from config.config_manager import get_config_manager
from config.param_file import load_run_config, parse_entry, parse_param_file
from core.errors import ConfigError
from core.logger import get_log_manager

ROOT = Path(__file__).resolve().parents[1]
PHYSICS = {'tau_s_s': 8.954e-11, 'tau_l_s': 5.17e-8, 'delta_m_tau_s': 0.47, 'hbar_mev_s': 6.58212e-22}
RUN_DEFAULTS = {'t_start': 0.0, 't_end': 5.0, 'points': 501, 'seed': 12345, 'mode': 'dt', 'tau': 0.55}


def write(tmp_path, text: str) -> Path:
    path = tmp_path / 'run.cfg'
    path.write_text(text, encoding='utf-8')
    return path


def test_config_manager_is_singleton():
    manager = get_config_manager()
    assert manager is get_config_manager()
    assert manager.validate_config()
    assert manager.get_physics()['tau_s_s'] == pytest.approx(8.954e-11)
    assert manager.get_run_defaults()['points'] == 501
    assert manager.get_config('workers', category='app', subcategory='numerics') == 4


def test_get_category_returns_copy():
    manager = get_config_manager()
    physics = manager.get_physics()
    physics['tau_s_s'] = 0.0
    assert manager.get_physics()['tau_s_s'] == pytest.approx(8.954e-11)


def test_log_level_validation():
    manager = get_log_manager()
    with pytest.raises(ValueError):
        manager.set_logger_level('LOUD')
    manager.set_logger_level('warning')


def test_parse_param_file(tmp_path):
    path = write(tmp_path, '''
# comment
constants.lambda = 0.25   # trailing comment
run.points = 11
run.lambdas_mev = 1e-12, 2e-12
''')
    values = parse_param_file(path)
    assert values == {'constants.lambda': 0.25, 'run.points': 11, 'run.lambdas_mev': [1e-12, 2e-12]}


@pytest.mark.parametrize('text, line', [
    ('run.points = 3\nconstants.colour = red\n', 2),
    ('run.points = many\n', 1),
    ('\n\nrun.points\n', 3),
])
def test_parse_errors_carry_line_numbers(tmp_path, text, line):
    with pytest.raises(ConfigError) as info:
        parse_param_file(write(tmp_path, text))
    assert info.value.line == line
    assert str(info.value).startswith(f"第{line}行")


def test_parse_entry_unknown_section():
    with pytest.raises(ConfigError):
        parse_entry('physics.tau', '1.0')


def test_medium_dt_is_the_only_dt_key():
    assert parse_entry('medium.dt', '0.05') == {'medium.dt': 0.05}
    with pytest.raises(ConfigError):
        parse_entry('run.dt', '0.05')


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        parse_param_file(tmp_path / 'absent.cfg')


def test_precedence(tmp_path):
    path = write(tmp_path, 'run.points = 101\nrun.t_end = 2.0\n')
    cfg = load_run_config('oscillation', path, {'run.points': 11, 'run.seed': None},
                          physics=PHYSICS, run_defaults=RUN_DEFAULTS)
    assert cfg.points == 11
    assert cfg.t_end == 2.0
    assert cfg.seed == 12345
    assert len(cfg.times()) == 11


def test_mev_units(tmp_path):
    path = write(tmp_path, 'constants.units = mev_s\nconstants.lambda = 1.84e-12\n')
    cfg = load_run_config('asymmetry', path, physics=PHYSICS, run_defaults=RUN_DEFAULTS)
    assert cfg.constants.lam == pytest.approx(0.2503, abs=1e-4)


def test_lambda_mev_key(tmp_path):
    path = write(tmp_path, 'constants.lambda_mev = 4.34e-12\n')
    cfg = load_run_config('asymmetry', path, physics=PHYSICS, run_defaults=RUN_DEFAULTS)
    assert cfg.constants.lam == pytest.approx(0.5904, abs=1e-4)


@pytest.mark.parametrize('text', [
    'run.t_end = 0.0\n',
    'run.points = 1\n',
    'run.mode = both\n',
    'constants.lambda = -1\n',
    'constants.units = cgs\n',
    'medium.nu = -1\nmedium.m_K = 1\n',
])
def test_invalid_run_config(tmp_path, text):
    with pytest.raises(ConfigError):
        load_run_config('oscillation', write(tmp_path, text), physics=PHYSICS, run_defaults=RUN_DEFAULTS)


def test_medium_from_file(tmp_path):
    path = write(tmp_path, 'medium.drive_re = 0.02\nmedium.dt = 0.05\n')
    cfg = load_run_config('regenerate', path, physics=PHYSICS, run_defaults=RUN_DEFAULTS)
    assert cfg.medium.drive == pytest.approx(0.02)
    assert cfg.medium_dt == 0.05


def test_default_lambdas_from_reference():
    physics = dict(PHYSICS, reference={'lambda_mean_mev': 1.84e-12, 'lambda_upper_mev': 4.34e-12})
    cfg = load_run_config('entanglement-loss', None, physics=physics, run_defaults=RUN_DEFAULTS)
    assert cfg.lambdas_mev == [1.84e-12, 4.34e-12]
    assert cfg.medium is None


def test_example_file_loads():
    cfg = load_run_config('regenerate', ROOT / 'config' / 'example.cfg')
    assert cfg.constants.lam == pytest.approx(0.25031)
    assert cfg.medium is not None
    assert cfg.lambdas_mev == [1.84e-12, 4.34e-12]
