import numpy as np
import pytest

from errors import ConfigError
from initial_data import ANALYTIC_PRESETS, InitialDataSpec, generate_initial_data
from nonlinear import boundary_trace_check
from spectral_core import divergence_residual, has_mean_content, hermitian_defect, norm_l2, sobolev_norm
from validation import StateValidator


def test_amplitude_sets_h3_norm(grid16):
    state = generate_initial_data(InitialDataSpec(amplitude=3e-3, seed=4), grid16)
    assert sobolev_norm(state, 3) == pytest.approx(3e-3, rel=1e-12)


def test_zero_amplitude_gives_zero_state(grid8):
    state = generate_initial_data(InitialDataSpec(amplitude=0.0), grid8)
    assert norm_l2(state) == 0.0


def test_same_seed_is_bitwise_identical(grid16):
    spec = InitialDataSpec(seed=42)
    a = generate_initial_data(spec, grid16).stack()
    b = generate_initial_data(spec, grid16).stack()
    assert np.array_equal(a, b)
    c = generate_initial_data(InitialDataSpec(seed=43), grid16).stack()
    assert not np.array_equal(a, c)


def test_random_state_satisfies_constraints(small_state):
    assert divergence_residual(small_state) <= 1e-13
    assert boundary_trace_check(small_state).relative <= 1e-12
    assert not any(has_mean_content(c) for c in small_state.components)
    assert max(hermitian_defect(c.coeffs) for c in small_state.components) < 1e-15
    assert StateValidator().validate_state(small_state)['valid']


@pytest.mark.parametrize("preset", sorted(ANALYTIC_PRESETS))
def test_analytic_presets_are_admissible(grid16, preset):
    spec = InitialDataSpec(mode='analytic_preset', preset=preset, amplitude=1e-2)
    state = generate_initial_data(spec, grid16)
    report = StateValidator().validate_state(state, label=preset)
    assert report['valid'], report['errors']
    assert sobolev_norm(state, 3) == pytest.approx(1e-2)


def test_horizontal_shear_is_heat_only(grid16):
    spec = InitialDataSpec(mode='analytic_preset', preset='horizontal-shear')
    state = generate_initial_data(spec, grid16)
    assert not np.any(state.u3.coeffs) and not np.any(state.theta.coeffs)


def test_unknown_preset_and_mode(grid8):
    with pytest.raises(ConfigError) as info:
        generate_initial_data(InitialDataSpec(mode='analytic_preset', preset='vortex'), grid8)
    assert info.value.field == 'data.preset'
    with pytest.raises(ConfigError):
        generate_initial_data(InitialDataSpec(mode='white_noise'), grid8)
