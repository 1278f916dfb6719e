import os

import pytest

import app
from errors import BlowUpError


@pytest.fixture
def small_args(tmp_path):
    return ['--out', str(tmp_path), '--set', 'grid.N_h=8', '--set', 'grid.N3=8', '--set', 'output.plots=off']


def test_linear_command(tmp_path, small_args):
    argv = ['linear', '--set', 'run.T=0.2', '--set', 'run.dt=0.1'] + small_args
    assert app.main(argv) == app.EXIT_OK
    assert os.path.exists(tmp_path / 'norms.csv')


def test_gen_data_command(tmp_path, small_args):
    assert app.main(['gen-data', '--seed', '4'] + small_args) == app.EXIT_OK
    assert os.path.exists(tmp_path / 'initial_state.npz')


def test_usage_errors(tmp_path, small_args):
    assert app.main([]) == app.EXIT_USAGE
    assert app.main(['check', '--suite', 'medium']) == app.EXIT_USAGE
    assert app.main(['linear', '--set', 'grid.N_h'] + small_args) == app.EXIT_USAGE
    assert app.main(['linear', '--preset', 'tornado'] + small_args) == app.EXIT_USAGE
    assert app.main(['oracle', '--set', 'oracle.a=0.5'] + small_args) == app.EXIT_USAGE


def test_malformed_config_file(tmp_path, small_args):
    path = tmp_path / 'bad.cfg'
    path.write_text("run.T=1.0\ngrid.N_h=lots\n")
    assert app.main(['simulate', '--config', str(path)] + small_args) == app.EXIT_USAGE


def test_config_error_reports_line(tmp_path):
    path = tmp_path / 'bad.cfg'
    path.write_text("grid.N_h=8\ngrid.N3=8\nrun.dt=-1\n")
    parser = app.build_parser()
    args = parser.parse_args(['linear', '--config', str(path)])
    with pytest.raises(app.ConfigError) as info:
        app.load_run_config(args)
    assert info.value.line == 3


def test_numerical_failure(monkeypatch, small_args):
    def explode(config):
        raise BlowUpError("NaN in u1")

    monkeypatch.setattr(app, 'run_experiment', explode)
    assert app.main(['simulate'] + small_args) == app.EXIT_NUMERICAL


def test_command_forces_mode(small_args):
    args = app.build_parser().parse_args(['linear', '--preset', 'nonlinear-smoke'] + small_args)
    assert app.load_run_config(args).mode == 'linear'


def test_duhamel_command(tmp_path, small_args):
    argv = ['duhamel', '--set', 'duhamel.T=0.05', '--set', 'duhamel.K=5'] + small_args
    assert app.main(argv) == app.EXIT_OK
    assert os.path.exists(tmp_path / 'picard.csv')
    assert os.path.exists(tmp_path / 'final_state.npz')
