import numpy as np
import pytest
from scipy.linalg import expm

from errors import PropagatorError
from linear_propagator import (
    DenseModeOperator,
    PropagatorCache,
    apply_semigroup,
    generator,
    generator_matrix,
    pressure_linear,
    semigroup_closed_form,
    semigroup_oracle,
    stable_sinc,
)
from spectral_core import Parity, SpectralScalar, align_stack, divergence_residual, norm_l2


def test_stable_sinc_near_zero():
    x = np.array([0.0, 1e-8, 1e-5, 0.5, 2.0])
    expected = np.array([1.0, 1.0, 1.0 - 1e-10 / 6.0, np.sin(0.5) / 0.5, np.sin(2.0) / 2.0])
    np.testing.assert_allclose(stable_sinc(x), expected, rtol=1e-15)


def test_generator_rejects_zero_vector():
    with pytest.raises(PropagatorError):
        generator([0.0, 0.0, 0.0])
    with pytest.raises(PropagatorError):
        generator([1.0, 0.0])


def test_generator_entries():
    A = generator([1.0, 2.0, 2.0], nu=0.5, kappa=2.0)
    assert A[0, 0] == pytest.approx(-2.5)
    assert A[3, 3] == pytest.approx(-10.0)
    assert A[2, 3] == pytest.approx(5.0 / 9.0)
    assert A[3, 2] == -1.0
    assert A[0, 3] == pytest.approx(2.0j / 9.0)


def test_closed_form_matches_matrix_exponential(rng):
    worst = 0.0
    for _ in range(100):
        xi = rng.standard_normal(3) * 3.0
        t = rng.uniform(0.0, 5.0)
        v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        worst = max(worst, np.max(np.abs(semigroup_closed_form(xi, t, v) - semigroup_oracle(xi, t, v))))
    assert worst <= 1e-10


def test_closed_form_with_vanishing_horizontal_frequency():
    xi = [1e-9, 0.0, 2.0]
    v = np.array([1.0, 0.5, -1.0, 2.0], dtype=complex)
    np.testing.assert_allclose(semigroup_closed_form(xi, 3.0, v), semigroup_oracle(xi, 3.0, v), atol=1e-12)


def test_semigroup_property(rng):
    xi = [0.7, -1.1, 2.3]
    v = rng.standard_normal(4) + 0j
    composed = semigroup_closed_form(xi, 1.3, semigroup_closed_form(xi, 0.4, v))
    np.testing.assert_allclose(composed, semigroup_closed_form(xi, 1.7, v), atol=1e-12)
    np.testing.assert_allclose(semigroup_closed_form(xi, 0.0, v), v, atol=1e-15)


def test_negative_time_rejected(small_state):
    with pytest.raises(PropagatorError):
        semigroup_oracle([1.0, 0.0, 1.0], -1.0, np.ones(4))
    with pytest.raises(PropagatorError):
        apply_semigroup(small_state, -0.1)


def test_grid_kernels_match_dense_exponentials(grid8, rng):
    cache = PropagatorCache(grid8)
    w = rng.standard_normal((4,) + cache.k2.shape) + 1j * rng.standard_normal((4,) + cache.k2.shape)
    dense = DenseModeOperator(expm(generator_matrix(cache.xi1, cache.xi2, cache.xi3) * 0.8))
    np.testing.assert_allclose(cache.operator(0.8).apply(w), dense.apply(w), atol=1e-12)


def test_unequal_diffusion_falls_back_to_dense(small_state8):
    state = small_state8.with_stack(small_state8.stack())
    state.nu, state.kappa = 1.0, 0.5
    evolved = apply_semigroup(state, 0.3)
    cache = PropagatorCache(state.grid, 1.0, 0.5)
    assert not cache.equal_diffusion
    # pick one populated mode and compare with the pointwise oracle
    stack = state.stack()
    i, j, k = np.unravel_index(np.argmax(np.abs(stack[0])), stack[0].shape)
    grid = state.grid
    xi = [grid.xi_h[i], grid.xi_h[j], grid.xi3(Parity.COSINE).ravel()[k]]
    v = np.array([stack[0, i, j, k], stack[1, i, j, k], 0.0, 0.0])
    if k >= 1:
        v[2] = stack[2, i, j, k - 1]
        v[3] = stack[3, i, j, k - 1]
    expected = semigroup_oracle(xi, 0.3, v, nu=1.0, kappa=0.5)
    out = evolved.stack()
    assert out[0, i, j, k] == pytest.approx(expected[0], abs=1e-14)
    assert out[1, i, j, k] == pytest.approx(expected[1], abs=1e-14)


def test_semigroup_dissipates_and_keeps_constraints(small_state):
    evolved = apply_semigroup(small_state, 0.5)
    assert norm_l2(evolved) < norm_l2(small_state)
    assert divergence_residual(evolved) < 1e-12


@pytest.mark.parametrize("t", [0.5, 2.0])
def test_mode_amplitudes_follow_damping_envelope(small_state, t):
    before = np.linalg.norm(align_stack(small_state.stack()), axis=0)
    after = np.linalg.norm(align_stack(apply_semigroup(small_state, t).stack()), axis=0)
    envelope = after * np.exp(small_state.grid.h2 * t)
    live = before > 1e-12 * before.max()
    np.testing.assert_allclose(envelope[live], before[live], rtol=1e-9)


def test_cache_must_match_state(small_state, grid8):
    with pytest.raises(PropagatorError):
        apply_semigroup(small_state, 0.1, PropagatorCache(grid8))
    with pytest.raises(PropagatorError):
        PropagatorCache(grid8, nu=0.0)


def test_linear_pressure(grid8):
    coeffs = np.zeros(grid8.shape, dtype=complex)
    coeffs[1, 0, 0] = 1.0  # sine k3 = 1
    phi = pressure_linear(SpectralScalar(grid8, Parity.SINE, coeffs))
    assert phi.parity is Parity.COSINE
    # -xi3 / |xi|^2 with xi = (1, 0, 1)
    assert phi.coeffs[1, 0, 1] == pytest.approx(-0.5)
    with pytest.raises(PropagatorError):
        pressure_linear(SpectralScalar(grid8, Parity.COSINE, coeffs))
