import json
import os

import numpy as np
import pytest

from errors import ConfigError, FitError
from experiments import (
    SUITE_SIZES,
    check_conservation,
    check_integrators,
    check_leray,
    check_linear_energy,
    check_oracle_rates,
    check_rate_gatekeeping,
    check_rate_ordering,
    check_semigroup,
    check_transforms,
    generate_data,
    load_state,
    read_table,
    run_checks,
    run_experiment,
    save_state,
)
from run_config import RunConfig, load_config_values

SMALL_GRID = {'grid.N_h': '8', 'grid.N3': '8', 'output.plots': 'off'}


def _config(out_dir, **overrides):
    values = dict(SMALL_GRID)
    values['output.dir'] = str(out_dir)
    values.update({k.replace('__', '.'): v for k, v in overrides.items()})
    merged, _ = load_config_values(None, values)
    return RunConfig.from_values(merged)


def test_linear_run_artifacts(tmp_path):
    summary = run_experiment(_config(tmp_path, run__mode='linear', run__T='0.5', run__dt='0.05',
                                     run__record_every='1'))
    for name in ('norms.csv', 'diagnostics.csv', 'summary.json', 'final_state.npz'):
        assert os.path.exists(tmp_path / name)

    with open(tmp_path / 'norms.csv', encoding='utf-8') as f:
        assert f.readline().startswith('# boussinesq-halfspace norms v1')
    norms = read_table(str(tmp_path / 'norms.csv'))
    assert len(norms) == 11
    assert np.all(np.diff(norms['t']) > 0)

    assert summary['samples'] == 11
    assert summary['energy_monotone']
    assert summary['max_divergence'] <= 1e-10
    with open(tmp_path / 'summary.json', encoding='utf-8') as f:
        assert json.load(f)['mode'] == 'linear'


def test_nonlinear_run_balance(tmp_path):
    summary = run_experiment(_config(tmp_path, run__mode='nonlinear', run__T='0.1', run__dt='0.01',
                                     run__record_every='5'))
    assert summary['samples'] == 3
    assert summary['energy_balance_residual'] <= 1e-4
    assert summary['max_boundary_trace'] <= 1e-9
    diagnostics = read_table(str(tmp_path / 'diagnostics.csv'))
    assert list(diagnostics.columns) == ['t', 'energy', 'dissipation', 'balance', 'divergence', 'boundary_trace']


def test_duhamel_run_matches_stepper(tmp_path):
    summary = run_experiment(_config(tmp_path, run__mode='duhamel', duhamel__T='0.1', duhamel__K='9'))
    assert summary['mode'] == 'duhamel'
    assert summary['picard_residual'] < 1e-12
    assert summary['step_difference'] < 1e-4
    assert summary['max_divergence'] <= 1e-10

    picard = read_table(str(tmp_path / 'picard.csv'))
    assert list(picard.columns) == ['iteration', 'residual']
    assert len(picard) == summary['iterations']
    state, t = load_state(str(tmp_path / 'final_state.npz'))
    assert t == 0.1
    assert state.grid.N_h == 8


def test_runs_are_byte_identical(tmp_path):
    for name in ('a', 'b'):
        run_experiment(_config(tmp_path / name, run__mode='linear', run__T='0.2', run__dt='0.1'))
    first = (tmp_path / 'a' / 'norms.csv').read_bytes()
    assert first == (tmp_path / 'b' / 'norms.csv').read_bytes()


def test_oracle_heat_only_run(tmp_path):
    config = _config(tmp_path, run__preset='linear-heat-only', oracle__t_max='1000', oracle__n_times='12',
                     oracle__tol='1e-8')
    summary = run_experiment(config)
    assert summary['heat_only']['within_tolerance']
    assert summary['fits']['u']['exponent'] == pytest.approx(-1.0, abs=0.03)
    assert 'theta' not in summary['fits']
    table = read_table(str(tmp_path / 'oracle.csv'))
    assert list(table.columns[:3]) == ['t', 'all', 'u']


def test_gen_data_and_state_file(tmp_path):
    config = _config(tmp_path, data__seed='21')
    summary = generate_data(config)
    assert summary['seed'] == 21
    state, t = load_state(str(tmp_path / 'initial_state.npz'))
    assert t == 0.0
    assert state.grid.shape == (8, 8, 8)

    path = save_state(state, str(tmp_path / 'copy.npz'), t=1.5)
    again, t_again = load_state(path)
    assert t_again == 1.5
    assert np.array_equal(again.stack(), state.stack())


def test_fit_window_failure_is_fatal(tmp_path):
    with pytest.raises(FitError):
        run_experiment(_config(tmp_path, run__mode='linear', run__T='0.2', run__dt='0.1',
                               fit__t0='0.05', fit__t1='0.15'))


def test_small_checks_pass():
    sizes = SUITE_SIZES['fast']
    for result in check_transforms(sizes) + check_leray(sizes) + check_rate_gatekeeping(sizes):
        assert result.passed, result.line()


@pytest.mark.parametrize("check", [
    check_semigroup,
    check_linear_energy,
    check_oracle_rates,
    check_conservation,
    check_integrators,
    check_rate_ordering,
])
def test_fast_suite_check_passes(check):
    results = check(SUITE_SIZES['fast'])
    assert results
    for result in results:
        assert result.passed, result.line()


def test_unknown_suite():
    with pytest.raises(ConfigError):
        run_checks('medium')
