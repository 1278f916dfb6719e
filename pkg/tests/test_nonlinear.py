import logging

import numpy as np
import pytest

from errors import BlowUpError
from initial_data import ANALYTIC_PRESETS
from linear_propagator import apply_semigroup
from nonlinear import (
    DuhamelConfig,
    DuhamelSolver,
    ExponentialStepper,
    NonlinearTerms,
    StepperConfig,
    advect,
    boundary_trace_check,
    duhamel_solve,
    leray_project,
    leray_project_literal,
    nonlinear_forcing,
    pressure_nonlinear,
    project_solenoidal,
    step,
)
from spectral_core import (
    MixedSpectralState,
    Parity,
    align_stack,
    divergence_residual,
    divergence_symbol,
    from_physical,
    inverse_mixed,
    norm_l2,
    to_aligned,
)


def _inner(a: MixedSpectralState, b: MixedSpectralState) -> float:
    grid = a.grid
    total = 0.0
    for x, y in zip(a.components, b.components):
        w = grid.parseval_weights(x.parity)
        total += grid.volume * float(np.sum(w * np.real(np.conj(x.coeffs) * y.coeffs)))
    return total


def _random_terms(grid, rng):
    stack = rng.standard_normal((4,) + grid.shape) + 1j * rng.standard_normal((4,) + grid.shape)
    return NonlinearTerms.from_stack(grid, stack)


def test_zero_state_has_no_forcing(grid8):
    terms = advect(MixedSpectralState.zeros(grid8))
    assert not np.any(terms.stack())
    assert terms.truncation_residual == 0.0


def test_blow_up_guard(small_state8):
    stack = small_state8.stack()
    stack[0, 1, 0, 1] = np.nan
    with pytest.raises(BlowUpError):
        advect(small_state8.with_stack(stack))


def test_projection_is_solenoidal_and_idempotent(grid16, rng):
    projected = leray_project(_random_terms(grid16, rng))
    w = align_stack(projected.stack())
    div = divergence_symbol(grid16, w[0], w[1], w[2])
    assert np.max(np.abs(div)) < 1e-12 * np.max(np.abs(w))
    twice = leray_project(projected)
    np.testing.assert_allclose(twice.stack(), projected.stack(), atol=1e-14 * np.max(np.abs(w)))


def test_projection_matches_component_formulas(grid16, rng):
    terms = _random_terms(grid16, rng)
    a = leray_project(terms).stack()
    b = leray_project_literal(terms).stack()
    assert np.max(np.abs(a - b)) <= 1e-13 * np.max(np.abs(a))


def test_projection_leaves_temperature_forcing(grid8, rng):
    terms = _random_terms(grid8, rng)
    np.testing.assert_array_equal(leray_project(terms).adv_theta.coeffs, terms.adv_theta.coeffs)


def test_projection_subtracts_pressure_gradient(grid16, rng):
    terms = _random_terms(grid16, rng)
    psi = pressure_nonlinear(terms)
    assert psi.parity is Parity.COSINE

    w = align_stack(terms.stack())
    psi_aligned = to_aligned(psi.coeffs, Parity.COSINE)
    projected = align_stack(leray_project(terms).stack())
    mask = np.broadcast_to(grid16.nyquist_free, psi_aligned.shape)[..., :-1]
    for axis, xi in ((0, grid16.xi1), (1, grid16.xi2)):
        expected = (w[axis] - 1j * xi * psi_aligned)[..., :-1]
        np.testing.assert_allclose(projected[axis][..., :-1][mask], expected[mask],
                                   atol=1e-12 * np.max(np.abs(w)))


def test_project_solenoidal_state(grid16, rng):
    stack = rng.standard_normal((4,) + grid16.shape) + 0j
    state = project_solenoidal(MixedSpectralState.from_stack(grid16, stack))
    assert divergence_residual(state) < 1e-13


def test_advection_of_single_mode_wave(grid8):
    state = from_physical(ANALYTIC_PRESETS['single-mode'](grid8))
    terms = advect(state)
    x1, x2, x3 = grid8.mesh()
    expected = (
        0.5 * np.sin(2.0 * x1),
        np.zeros_like(x1),
        0.5 * np.sin(2.0 * x3),
        0.25 * np.sin(2.0 * x3) * np.cos(x1) * np.cos(x2),
    )
    for term, exact in zip(terms.components, expected):
        np.testing.assert_allclose(inverse_mixed(term), exact, atol=1e-13)
    assert terms.truncation_residual < 1e-13


def test_forcing_is_energy_neutral(small_state):
    forcing = nonlinear_forcing(small_state)
    scale = norm_l2(small_state) * norm_l2(forcing)
    assert abs(_inner(small_state, forcing)) <= 1e-10 * scale
    assert divergence_residual(forcing) < 1e-12


def test_truncation_residual_is_reported(small_state):
    terms = advect(small_state)
    assert 0.0 <= terms.truncation_residual < 1.0


def test_boundary_traces_vanish(small_state):
    report = boundary_trace_check(small_state)
    assert report.relative < 1e-12
    assert report.max_trace >= 0.0


def test_stepper_config_validation():
    with pytest.raises(ValueError):
        StepperConfig(dt=0.0, T=1.0)
    with pytest.raises(ValueError):
        StepperConfig(dt=0.1, T=1.0, record_every=0)
    with pytest.raises(ValueError):
        DuhamelConfig(T=0.5, K=2)
    assert StepperConfig(dt=0.01, T=0.1).n_steps == 10


def test_run_records_on_cadence(small_state8):
    stepper = ExponentialStepper(small_state8.grid, StepperConfig(dt=0.01, T=0.1, record_every=3))
    seen = []
    stepper.run(small_state8, lambda k, t, s: seen.append((k, t)))
    assert [k for k, _ in seen] == [0, 3, 6, 9, 10]
    assert seen[-1][1] == pytest.approx(0.1)


def test_final_step_is_shortened_to_reach_T(small_state8, caplog):
    with caplog.at_level(logging.WARNING):
        config = StepperConfig(dt=0.3, T=1.0)
    assert 'not a multiple' in caplog.text
    assert config.n_steps == 4
    assert config.final_dt == pytest.approx(0.1)

    stepper = ExponentialStepper(small_state8.grid, config)
    seen = []
    final = stepper.run(small_state8, lambda k, t, s: seen.append(t))
    np.testing.assert_allclose(seen, [0.0, 0.3, 0.6, 0.9, 1.0])
    assert seen[-1] == 1.0

    manual = small_state8
    for dt in (0.3, 0.3, 0.3, config.final_dt):
        manual = stepper.step(manual, dt)
    np.testing.assert_array_equal(final.stack(), manual.stack())


def test_whole_step_count_is_uniform():
    config = StepperConfig(dt=0.01, T=1.0)
    assert config.is_uniform
    assert config.n_steps == 100
    assert config.final_dt == 0.01
    assert config.time_at(100) == pytest.approx(1.0)


def test_cfl_is_rechecked_at_every_record(small_state8, monkeypatch):
    stepper = ExponentialStepper(small_state8.grid, StepperConfig(dt=0.01, T=0.1, record_every=5))
    checked = []
    monkeypatch.setattr(stepper, 'check_cfl', lambda state: checked.append(state) or True)
    stepper.run(small_state8)
    assert len(checked) == 3


def test_cfl_advisory_flags_fast_flow(small_state8, caplog):
    stepper = ExponentialStepper(small_state8.grid, StepperConfig(dt=0.5, T=0.5))
    with caplog.at_level(logging.WARNING):
        assert not stepper.check_cfl(1e5 * small_state8)
    assert 'CFL advisory' in caplog.text
    assert stepper.check_cfl(small_state8)


def test_tiny_data_follows_linear_flow(small_state8):
    tiny = 1e-6 * small_state8
    stepped = step(tiny, StepperConfig(dt=0.05, T=0.05))
    linear = apply_semigroup(tiny, 0.05)
    assert norm_l2(stepped - linear) <= 1e-6 * norm_l2(linear)


def test_step_preserves_constraints(small_state):
    out = step(small_state, StepperConfig(dt=0.01, T=0.01))
    assert divergence_residual(out) < 1e-12
    assert boundary_trace_check(out).relative < 1e-12
    assert norm_l2(out) <= norm_l2(small_state)


def test_duhamel_agrees_with_stepper(small_state8):
    T = 0.1
    result = DuhamelSolver(small_state8.grid, DuhamelConfig(T=T, K=17)).solve(small_state8)
    assert result.residual < 1e-12
    assert result.iterations == len(result.residual_history)
    stepped = ExponentialStepper(small_state8.grid, StepperConfig(dt=T / 64, T=T)).run(small_state8)
    assert norm_l2(result.state - stepped) <= 1e-5 * norm_l2(stepped)
    np.testing.assert_allclose(duhamel_solve(small_state8, DuhamelConfig(T=T, K=17)).stack(),
                               result.state.stack())
