import numpy as np
import pytest

from errors import ConfigError
from run_config import DEFAULTS, EXPERIMENT_PRESETS, RunConfig, coerce_value, load_config_values, parse_config_text


def test_parse_typed_values():
    values, lines = parse_config_text("# comment\n\ngrid.N_h=32\nrun.dealias=off\nphysics.sigma=0.97\n")
    assert values == {'grid.N_h': 32, 'run.dealias': False, 'physics.sigma': 0.97}
    assert lines['physics.sigma'] == 5


def test_unknown_key_reports_line():
    with pytest.raises(ConfigError) as info:
        parse_config_text("grid.N_h=32\ngrid.Nx=8\n")
    assert info.value.line == 2
    assert info.value.field == 'grid.Nx'
    assert 'line 2' in str(info.value)


def test_ill_typed_value():
    with pytest.raises(ConfigError) as info:
        parse_config_text("grid.N_h=sixty-four\n")
    assert info.value.field == 'grid.N_h'
    with pytest.raises(ConfigError):
        coerce_value('run.dealias', 'maybe')


def test_missing_value():
    with pytest.raises(ConfigError):
        parse_config_text("grid.N_h\n")


def test_precedence(tmp_path):
    path = tmp_path / 'run.cfg'
    path.write_text("run.preset=nonlinear-smoke\nrun.T=2.0\ndata.seed=5\n")
    values, lines = load_config_values(str(path), {'data.seed': '9'})
    assert values['data.seed'] == 9
    assert values['run.T'] == 2.0
    assert values['run.record_every'] == EXPERIMENT_PRESETS['nonlinear-smoke']['run.record_every']
    assert values['physics.nu'] == DEFAULTS['physics.nu']
    assert lines['run.T'] == 2


def test_unknown_preset_and_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config_values(None, {'run.preset': 'tornado'})
    with pytest.raises(ConfigError):
        load_config_values(str(tmp_path / 'absent.cfg'))


def test_run_config_from_defaults():
    values, _ = load_config_values()
    config = RunConfig.from_values(values)
    assert config.grid.shape == (16, 16, 16)
    assert config.stepper.n_steps == 100
    assert config.fit_window is None
    assert config.oracle_times[0] == pytest.approx(10.0)
    assert len(config.oracle_times) == 25
    assert config.profile.seeded == ('u_perp', 'u3', 'theta')


def test_linear_decay_preset():
    values, _ = load_config_values(None, {'run.preset': 'linear-decay'})
    config = RunConfig.from_values(values)
    assert config.mode == 'linear'
    assert config.grid.L_h == pytest.approx(16.0 * np.pi)
    assert config.fit_window == (5.0, 50.0)
