"""
Linear Propagator Module

Exact mode-wise evolution of the linearized perturbation system. Each
represented wavevector carries a 4x4 ODE

    d/dt (u1, u2, u3, theta)^ = A(xi) (u1, u2, u3, theta)^

whose (u3, theta) block rotates with frequency omega = |xi_h|/|xi| while the
whole vector is damped by exp(-nu |xi_h|^2 t). The closed form is written with
stable sinc factors so every mode, including xi_h -> 0, is evaluated without
division by |xi_h|. See docs/DERIVATION.md for the algebra.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.linalg import expm

from errors import PropagatorError
from spectral_core import (
    GridSpec,
    MixedSpectralState,
    Parity,
    SpectralScalar,
    align_stack,
    from_aligned,
    to_aligned,
    unalign_stack,
)

logger = logging.getLogger(__name__)

# Below this argument sinc uses its Taylor series
SINC_TAYLOR_THRESHOLD = 1e-4


def stable_sinc(x: np.ndarray) -> np.ndarray:
    """sin(x)/x with a Taylor fallback near zero"""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < SINC_TAYLOR_THRESHOLD
    safe = np.where(small, 1.0, x)
    x2 = x * x
    return np.where(small, 1.0 - x2 / 6.0 + x2 * x2 / 120.0, np.sin(safe) / safe)


def generator_matrix(xi1, xi2, xi3, nu: float = 1.0, kappa: float = 1.0) -> np.ndarray:
    """
    Batched generator A(xi), shape (..., 4, 4)

    Rows and columns are ordered (u1, u2, u3, theta). The zero wavevector gets
    the bare coupling A[3, 2] = -1 and is never propagated in practice.
    """
    xi1, xi2, xi3 = np.broadcast_arrays(np.asarray(xi1, float), np.asarray(xi2, float),
                                        np.asarray(xi3, float))
    h2 = xi1 ** 2 + xi2 ** 2
    k2 = h2 + xi3 ** 2
    k2_safe = np.where(k2 > 0, k2, 1.0)

    A = np.zeros(xi1.shape + (4, 4), dtype=complex)
    A[..., 0, 0] = -nu * h2
    A[..., 1, 1] = -nu * h2
    A[..., 2, 2] = -nu * h2
    A[..., 3, 3] = -kappa * h2
    A[..., 0, 3] = 1j * xi1 * xi3 / k2_safe
    A[..., 1, 3] = 1j * xi2 * xi3 / k2_safe
    A[..., 2, 3] = h2 / k2_safe
    A[..., 3, 2] = -1.0
    return A


def _check_wavevector(xi: Sequence[float]) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (3,):
        raise PropagatorError(f"wavevector must have 3 components, got shape {xi.shape}")
    if not np.any(xi):
        raise PropagatorError("generator undefined at the zero wavevector")
    return xi


def generator(xi: Sequence[float], nu: float = 1.0, kappa: float = 1.0) -> np.ndarray:
    """4x4 generator matrix of the linearized system at one nonzero wavevector"""
    xi = _check_wavevector(xi)
    return generator_matrix(xi[0], xi[1], xi[2], nu, kappa)


def semigroup_oracle(xi: Sequence[float], t: float, v: Sequence[complex],
                     nu: float = 1.0, kappa: float = 1.0) -> np.ndarray:
    """exp(A(xi) t) v by dense scaling-and-squaring, independent of the closed form"""
    xi = _check_wavevector(xi)
    if t < 0:
        raise PropagatorError(f"negative time t={t}")
    return expm(generator_matrix(xi[0], xi[1], xi[2], nu, kappa) * t) @ np.asarray(v, dtype=complex)


@dataclass
class ModeKernels:
    """
    The seven multipliers of exp(A tau) for nu == kappa

    j1: u_h <- u_h        j2: u_h <- u3 (vector)   j3: u_h <- theta (vector)
    j4: u3 <- u3          j5: u3 <- theta
    j6: theta <- u3       j7: theta <- theta
    """

    j1: np.ndarray
    j2: np.ndarray
    j3: np.ndarray
    j4: np.ndarray
    j5: np.ndarray
    j6: np.ndarray
    j7: np.ndarray

    def apply(self, w: np.ndarray) -> np.ndarray:
        """Apply to an aligned stack of shape (4, N_h, N_h, N3 + 1)"""
        out = np.empty_like(w)
        out[0] = self.j1 * w[0] + self.j2[0] * w[2] + self.j3[0] * w[3]
        out[1] = self.j1 * w[1] + self.j2[1] * w[2] + self.j3[1] * w[3]
        out[2] = self.j4 * w[2] + self.j5 * w[3]
        out[3] = self.j6 * w[2] + self.j7 * w[3]
        return out


@dataclass
class DenseModeOperator:
    """Per-mode 4x4 matrices exp(A tau), used when nu != kappa"""

    matrices: np.ndarray

    def apply(self, w: np.ndarray) -> np.ndarray:
        return np.einsum("xyzij,jxyz->ixyz", self.matrices, w)


ModeOperator = Union[ModeKernels, DenseModeOperator]


class PropagatorCache:
    """
    Per-mode geometry of the linear semigroup on the aligned vertical layout

    Holds lambda1 = -|xi_h|^2, omega = |xi_h|/|xi|, the coupling symbols and
    the wavenumber tables of one grid. Immutable after construction.
    """

    def __init__(self, grid: GridSpec, nu: float = 1.0, kappa: float = 1.0):
        if nu <= 0 or kappa <= 0:
            raise PropagatorError(f"nu and kappa must be positive (nu={nu}, kappa={kappa})")
        self.grid = grid
        self.nu = float(nu)
        self.kappa = float(kappa)

        self.xi1 = grid.xi1
        self.xi2 = grid.xi2
        self.xi3 = grid.xi3_aligned
        self.h2 = np.broadcast_to(grid.h2, grid.k2_aligned.shape)
        self.k2 = grid.k2_aligned
        k2_safe = np.where(self.k2 > 0, self.k2, 1.0)
        self.lambda1 = -self.h2
        self.omega = np.sqrt(self.h2 / k2_safe)
        # i xi_h xi3 / |xi|^2, stacked over the two horizontal components
        self.coupling_h = np.stack([1j * self.xi1 * self.xi3 / k2_safe,
                                    1j * self.xi2 * self.xi3 / k2_safe])
        self.equal_diffusion = self.nu == self.kappa

        logger.info(f"✅ PropagatorCache initialized ({grid.N_h}x{grid.N_h}x{grid.N3}, "
                    f"nu={self.nu:g}, kappa={self.kappa:g})")

    def operator(self, tau: float) -> ModeOperator:
        """exp(A tau) for every mode, as kernels or dense matrices"""
        if tau < 0:
            raise PropagatorError(f"negative time t={tau}")
        if self.equal_diffusion:
            return duhamel_kernels(self, tau)
        A = generator_matrix(self.xi1, self.xi2, self.xi3, self.nu, self.kappa)
        return DenseModeOperator(expm(A * tau))

    def evolve_aligned(self, w: np.ndarray, t: float) -> np.ndarray:
        return self.operator(t).apply(w)

    def apply(self, state: MixedSpectralState, t: float) -> MixedSpectralState:
        if t < 0:
            raise PropagatorError(f"negative time t={t}")
        if t == 0:
            return state.with_stack(state.stack().copy())
        aligned = align_stack(state.stack())
        return state.with_stack(unalign_stack(self.evolve_aligned(aligned, t)))


def mode_kernels(h2: np.ndarray, omega: np.ndarray, coupling_h: np.ndarray,
                 tau: float, nu: float = 1.0) -> ModeKernels:
    """
    Closed-form multipliers of exp(A tau) at lag tau for nu == kappa

    With E = exp(-nu |xi_h|^2 tau), C = cos(omega tau), S = tau sinc(omega tau)
    and Q = -(tau^2 / 2) sinc^2(omega tau / 2) = (cos(omega tau) - 1) / omega^2:

        u_h   = E [u_h + g (Q u3 + S theta)],      g = i xi_h xi3 / |xi|^2
        u3    = E [C u3 + omega^2 S theta]
        theta = E [-S u3 + C theta]
    """
    decay = np.exp(-nu * h2 * tau)
    phase = omega * tau
    cos_t = np.cos(phase)
    sin_t = tau * stable_sinc(phase)
    half = stable_sinc(0.5 * phase)
    quad = -0.5 * tau * tau * half * half

    return ModeKernels(
        j1=decay,
        j2=coupling_h * (decay * quad),
        j3=coupling_h * (decay * sin_t),
        j4=decay * cos_t,
        j5=decay * omega ** 2 * sin_t,
        j6=-decay * sin_t,
        j7=decay * cos_t,
    )


def duhamel_kernels(cache: PropagatorCache, tau: float) -> ModeKernels:
    """Kernels J1..J7 of the Duhamel integrand at lag tau on the cache's grid"""
    if tau < 0:
        raise PropagatorError(f"negative time t={tau}")
    if not cache.equal_diffusion:
        raise PropagatorError("closed-form kernels require nu == kappa")
    return mode_kernels(cache.h2, cache.omega, cache.coupling_h, tau, cache.nu)


def semigroup_closed_form(xi: Sequence[float], t: float, v: Sequence[complex],
                          nu: float = 1.0) -> np.ndarray:
    """Closed-form exp(A(xi) t) v at a single wavevector (nu == kappa)"""
    xi = _check_wavevector(xi)
    if t < 0:
        raise PropagatorError(f"negative time t={t}")
    h2 = np.asarray(xi[0] ** 2 + xi[1] ** 2)
    k2 = h2 + xi[2] ** 2
    omega = np.sqrt(h2 / k2)
    coupling_h = np.array([1j * xi[0] * xi[2] / k2, 1j * xi[1] * xi[2] / k2])
    kernels = mode_kernels(h2, omega, coupling_h, t, nu)
    return kernels.apply(np.asarray(v, dtype=complex).reshape(4, 1))[:, 0]


def apply_semigroup(state: MixedSpectralState, t: float,
                    cache: Optional[PropagatorCache] = None) -> MixedSpectralState:
    """
    Evolve a state by the exact linear semigroup

    Args:
        state: divergence-free mixed spectral state
        t: elapsed time, t >= 0
        cache: precomputed geometry for state's grid and (nu, kappa)

    Returns:
        State at time t
    """
    if cache is None:
        cache = PropagatorCache(state.grid, state.nu, state.kappa)
    elif cache.grid != state.grid or cache.nu != state.nu or cache.kappa != state.kappa:
        raise PropagatorError("propagator cache does not match the state's grid or diffusivities")
    return cache.apply(state, t)


def pressure_linear(theta: SpectralScalar) -> SpectralScalar:
    """Hydrostatic-perturbation pressure phi_c = -xi3 theta_s / |xi|^2"""
    if theta.parity is not Parity.SINE:
        raise PropagatorError("pressure_linear expects a sine-parity temperature")
    grid = theta.grid
    k2 = grid.k2_aligned
    k2_safe = np.where(k2 > 0, k2, 1.0)
    aligned = to_aligned(theta.coeffs, Parity.SINE)
    phi = np.where(k2 > 0, -grid.xi3_aligned * aligned / k2_safe, 0.0)
    return SpectralScalar(grid, Parity.COSINE, from_aligned(phi, Parity.COSINE).copy())
