"""
Nonlinear Module

Advection terms, the spectral Helmholtz/Leray projection, the integrating
factor Heun stepper built on the exact linear propagator, and a Picard
solver for the Duhamel representation used to cross-validate the stepper.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from errors import BlowUpError, DuhamelContractionError, SpectralError
from linear_propagator import PropagatorCache
from spectral_core import (
    COMPONENT_PARITIES,
    GridSpec,
    MixedSpectralState,
    Parity,
    SpectralScalar,
    align_stack,
    d_horizontal,
    d_vertical,
    dealias,
    divergence_symbol,
    forward_mixed,
    from_aligned,
    inverse_mixed,
    norm_l2,
    project_represented,
    unalign_stack,
)

logger = logging.getLogger(__name__)

# Relative slack when deciding whether T is a whole number of steps
STEP_COUNT_RTOL = 1e-9


@dataclass
class NonlinearTerms:
    """Transforms of (u.grad u)_h, (u.grad u)_3 and u.grad theta"""

    adv_u1: SpectralScalar
    adv_u2: SpectralScalar
    adv_u3: SpectralScalar
    adv_theta: SpectralScalar
    # relative L2 size of the content removed by dealiasing
    truncation_residual: float = 0.0

    def __post_init__(self):
        for comp, parity in zip(self.components, COMPONENT_PARITIES):
            if comp.parity is not parity:
                raise SpectralError(f"nonlinear term has parity {comp.parity.value}, expected {parity.value}")

    @property
    def grid(self) -> GridSpec:
        return self.adv_u1.grid

    @property
    def components(self):
        return (self.adv_u1, self.adv_u2, self.adv_u3, self.adv_theta)

    def stack(self) -> np.ndarray:
        return np.stack([c.coeffs for c in self.components])

    @classmethod
    def from_stack(cls, grid: GridSpec, stack: np.ndarray, truncation_residual: float = 0.0) -> "NonlinearTerms":
        comps = [SpectralScalar(grid, p, np.asarray(stack[i], dtype=complex))
                 for i, p in enumerate(COMPONENT_PARITIES)]
        return cls(*comps, truncation_residual=truncation_residual)

    @classmethod
    def zeros(cls, grid: GridSpec) -> "NonlinearTerms":
        return cls.from_stack(grid, np.zeros((4,) + grid.shape, dtype=complex))


@dataclass
class StepperConfig:
    """Time-stepping parameters of the exponential integrator"""

    dt: float
    T: float
    dealias: bool = True
    record_every: int = 1
    cfl_safety: float = 0.5

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.T < 0:
            raise ValueError(f"T must be nonnegative, got {self.T}")
        if self.record_every < 1:
            raise ValueError(f"record_every must be >= 1, got {self.record_every}")

        if not self.is_uniform:
            logger.warning(f"⚠️ T={self.T:g} is not a multiple of dt={self.dt:g}; "
                           f"the final step is shortened to {self.final_dt:.6g}")

    @property
    def is_uniform(self) -> bool:
        ratio = self.T / self.dt
        return abs(ratio - round(ratio)) <= STEP_COUNT_RTOL * max(1.0, ratio)

    @property
    def n_steps(self) -> int:
        ratio = self.T / self.dt
        return int(round(ratio)) if self.is_uniform else int(math.ceil(ratio))

    @property
    def final_dt(self) -> float:
        if self.is_uniform or self.n_steps == 0:
            return self.dt
        return self.T - (self.n_steps - 1) * self.dt

    def time_at(self, k: int) -> float:
        """Time reached after k steps"""
        if k == self.n_steps and not self.is_uniform:
            return self.T
        return k * self.dt


@dataclass
class DuhamelConfig:
    """Quadrature and Picard parameters of the Duhamel solver"""

    T: float
    K: int = 65
    picard_iters: int = 50
    tol: float = 1e-12
    dealias: bool = True

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"Duhamel T must be positive, got {self.T}")
        if self.K < 3:
            raise ValueError(f"Duhamel needs K >= 3 trapezoid nodes, got {self.K}")
        if self.picard_iters < 1:
            raise ValueError("picard_iters must be >= 1")


def _check_finite(fields, label: str) -> None:
    for f in fields:
        if not np.all(np.isfinite(f)):
            raise BlowUpError(f"non-finite values in {label}")


def _gradient(s: SpectralScalar):
    return (inverse_mixed(d_horizontal(s, 1)),
            inverse_mixed(d_horizontal(s, 2)),
            inverse_mixed(d_vertical(s)))


def advect(state: MixedSpectralState, apply_dealias: bool = True) -> NonlinearTerms:
    """
    Pseudo-spectral advection terms of a divergence-free state

    Args:
        state: current state
        apply_dealias: truncate the products by the grid's dealiasing rule

    Returns:
        NonlinearTerms with F_c for the horizontal momentum forcing and F_s for
        the vertical momentum and temperature forcing
    """
    grid = state.grid
    velocity = [inverse_mixed(c) for c in (state.u1, state.u2, state.u3)]
    _check_finite(velocity, "velocity")

    products = []
    for comp in state.components:
        g1, g2, g3 = _gradient(comp)
        products.append(velocity[0] * g1 + velocity[1] * g2 + velocity[2] * g3)
    _check_finite(products, "advection products")

    terms = [forward_mixed(p, parity, grid) for p, parity in zip(products, COMPONENT_PARITIES)]
    residual = 0.0
    if apply_dealias:
        kept = [dealias(t) for t in terms]
        full = np.sqrt(sum(norm_l2(t) ** 2 for t in terms))
        if full > 0:
            removed = np.sqrt(sum(norm_l2(t.with_coeffs(t.coeffs - k.coeffs)) ** 2
                                  for t, k in zip(terms, kept)))
            residual = float(removed / full)
        terms = kept
    return NonlinearTerms(*terms, truncation_residual=residual)


def _aligned_terms(n: NonlinearTerms) -> np.ndarray:
    w = align_stack(n.stack())
    # the top sine mode has no cosine partner and cannot be made solenoidal
    w[..., -1] = 0.0
    return w


def _projectable_mask(grid: GridSpec) -> np.ndarray:
    return np.broadcast_to(grid.nyquist_free, grid.k2_aligned.shape)


def pressure_nonlinear(n: NonlinearTerms) -> SpectralScalar:
    """Pressure psi_c = -(i xi_h . w_h + xi3 w3) / |xi|^2 with Neumann data built in"""
    grid = n.grid
    w = align_stack(n.stack())
    k2 = grid.k2_aligned
    div = divergence_symbol(grid, w[0], w[1], w[2])
    psi = np.where(k2 > 0, -div / np.where(k2 > 0, k2, 1.0), 0.0)
    return SpectralScalar(grid, Parity.COSINE, from_aligned(psi, Parity.COSINE).copy())


def leray_project(n: NonlinearTerms) -> NonlinearTerms:
    """
    Solenoidal part of the velocity forcing; u.grad theta passes through

    w' = w + g D(w) / |xi|^2 with D(w) = i xi1 w1 + i xi2 w2 + xi3 w3 and
    g = (i xi1, i xi2, -xi3). Nyquist rows and the top sine mode are zeroed.
    """
    grid = n.grid
    w = _aligned_terms(n)
    k2 = grid.k2_aligned
    k2_safe = np.where(k2 > 0, k2, 1.0)
    phi = np.where(k2 > 0, divergence_symbol(grid, w[0], w[1], w[2]) / k2_safe, 0.0)

    out = w.copy()
    out[0] = w[0] + 1j * grid.xi1 * phi
    out[1] = w[1] + 1j * grid.xi2 * phi
    out[2] = w[2] - grid.xi3_aligned * phi
    out[:3] *= _projectable_mask(grid)

    stack = unalign_stack(out)
    stack[3] = n.adv_theta.coeffs
    return NonlinearTerms.from_stack(grid, stack, n.truncation_residual)


def leray_project_literal(n: NonlinearTerms) -> NonlinearTerms:
    """Component formulas of the projector, written out term by term"""
    grid = n.grid
    w = _aligned_terms(n)
    xi1, xi2, xi3 = grid.xi1, grid.xi2, grid.xi3_aligned
    h2 = grid.h2
    k2 = grid.k2_aligned
    inv_k2 = np.where(k2 > 0, 1.0 / np.where(k2 > 0, k2, 1.0), 0.0)

    dot_h = xi1 * w[0] + xi2 * w[1]
    out = w.copy()
    out[0] = w[0] - xi1 * dot_h * inv_k2 + 1j * xi1 * xi3 * w[2] * inv_k2
    out[1] = w[1] - xi2 * dot_h * inv_k2 + 1j * xi2 * xi3 * w[2] * inv_k2
    out[2] = h2 * inv_k2 * w[2] - 1j * xi3 * dot_h * inv_k2
    out[:3] *= _projectable_mask(grid)

    stack = unalign_stack(out)
    stack[3] = n.adv_theta.coeffs
    return NonlinearTerms.from_stack(grid, stack, n.truncation_residual)


def project_solenoidal(state: MixedSpectralState) -> MixedSpectralState:
    """Leray-project the velocity of a state; theta is left untouched"""
    terms = leray_project(NonlinearTerms.from_stack(state.grid, state.stack()))
    return state.with_stack(terms.stack())


def nonlinear_forcing(state: MixedSpectralState, apply_dealias: bool = True) -> MixedSpectralState:
    """N(W) = (-P(u.grad u), -u.grad theta) restricted to represented modes"""
    terms = leray_project(advect(state, apply_dealias))
    return project_represented(state.with_stack(-terms.stack()))


@dataclass
class BoundaryTraceReport:
    """Maxima of the boundary quantities at x3 = 0"""

    u3: float
    theta: float
    d3_u1: float
    d3_u2: float
    d3d3_theta: float
    field_scale: float = 0.0

    @property
    def max_trace(self) -> float:
        return max(self.u3, self.theta, self.d3_u1, self.d3_u2, self.d3d3_theta)

    @property
    def relative(self) -> float:
        return self.max_trace / self.field_scale if self.field_scale > 0 else self.max_trace


def evaluate_at_height(s: SpectralScalar, x3: float) -> np.ndarray:
    """Sum the vertical series at height x3, returning the horizontal field"""
    xi3 = s.grid.xi3(s.parity)[0, 0, :]
    basis = np.cos(xi3 * x3) if s.parity is Parity.COSINE else np.sin(xi3 * x3)
    planes = np.tensordot(s.coeffs, basis, axes=([2], [0]))
    return (np.fft.ifft2(planes) * s.grid.N_h ** 2).real


def boundary_trace_check(state: MixedSpectralState) -> BoundaryTraceReport:
    """Evaluate the boundary conditions at x3 = 0 from the parity expansions"""
    def trace(s: SpectralScalar) -> float:
        return float(np.max(np.abs(evaluate_at_height(s, 0.0))))

    scale = max(float(np.max(np.abs(inverse_mixed(c)))) for c in state.components)
    return BoundaryTraceReport(
        u3=trace(state.u3),
        theta=trace(state.theta),
        d3_u1=trace(d_vertical(state.u1)),
        d3_u2=trace(d_vertical(state.u2)),
        d3d3_theta=trace(d_vertical(d_vertical(state.theta))),
        field_scale=scale,
    )


StepCallback = Callable[[int, float, MixedSpectralState], None]


class ExponentialStepper:
    """
    Integrating-factor Heun scheme on the exact linear propagator

        W*  = S(dt) (W + dt N(W))
        W+  = S(dt) W + dt/2 (S(dt) N(W) + N(W*))
    """

    def __init__(self, grid: GridSpec, config: StepperConfig, nu: float = 1.0, kappa: float = 1.0):
        self.grid = grid
        self.config = config
        self.cache = PropagatorCache(grid, nu, kappa)
        self._operators = {config.dt: self.cache.operator(config.dt)}
        logger.info(f"✅ ExponentialStepper initialized (dt={config.dt:g}, T={config.T:g}, "
                    f"dealias={config.dealias})")

    def forcing(self, state: MixedSpectralState) -> MixedSpectralState:
        return nonlinear_forcing(state, self.config.dealias)

    def propagate(self, state: MixedSpectralState, dt: Optional[float] = None) -> MixedSpectralState:
        dt = self.config.dt if dt is None else dt
        if dt not in self._operators:
            self._operators[dt] = self.cache.operator(dt)
        aligned = align_stack(state.stack())
        return state.with_stack(unalign_stack(self._operators[dt].apply(aligned)))

    def check_cfl(self, state: MixedSpectralState) -> bool:
        speed = max(float(np.max(np.abs(inverse_mixed(c)))) for c in (state.u1, state.u2, state.u3))
        limit = self.config.cfl_safety * self.grid.dx_min
        if speed * self.config.dt > limit:
            logger.warning(f"⚠️ CFL advisory: dt*max|u| = {speed * self.config.dt:.3e} exceeds {limit:.3e}")
            return False
        return True

    def step(self, state: MixedSpectralState, dt: Optional[float] = None) -> MixedSpectralState:
        dt = self.config.dt if dt is None else dt
        n0 = self.forcing(state)
        base = self.propagate(state, dt)
        shifted = self.propagate(state + dt * n0, dt)
        n1 = self.forcing(shifted)
        return 0.5 * (base + shifted) + (0.5 * dt) * n1

    def run(self, state: MixedSpectralState, callback: Optional[StepCallback] = None) -> MixedSpectralState:
        """
        Advance from t=0 to T, calling callback(step, t, state) every record_every steps

        The CFL advisory is re-evaluated at every recording point. When T is not
        a multiple of dt the last step is shortened so the run ends exactly at T.

        Args:
            state: initial state
            callback: recorder invoked at t=0, on the cadence, and at T

        Returns:
            State at T
        """
        cfg = self.config
        n_steps = cfg.n_steps
        self.check_cfl(state)
        if callback is not None:
            callback(0, 0.0, state)
        k = 0
        try:
            for k in range(1, n_steps + 1):
                state = self.step(state, cfg.final_dt if k == n_steps else cfg.dt)
                if k % cfg.record_every == 0 or k == n_steps:
                    self.check_cfl(state)
                    if callback is not None:
                        callback(k, cfg.time_at(k), state)
        except BlowUpError as e:
            logger.error(f"❌ Error in nonlinear run at step {k}: {str(e)}")
            raise
        return state


def step(state: MixedSpectralState, cfg: StepperConfig) -> MixedSpectralState:
    """Advance one time step of size cfg.dt"""
    return ExponentialStepper(state.grid, cfg, state.nu, state.kappa).step(state)


@dataclass
class DuhamelResult:
    state: MixedSpectralState
    iterations: int
    residual: float
    residual_history: List[float] = field(default_factory=list)


class DuhamelSolver:
    """
    Picard iteration on the Duhamel representation

    W(t_k) = S(t_k) v0 + int_0^{t_k} S(t_k - s) N(W(s)) ds on K uniform
    trapezoid nodes. Only K distinct lags occur, so S at each lag is
    precomputed once.
    """

    def __init__(self, grid: GridSpec, config: DuhamelConfig, nu: float = 1.0, kappa: float = 1.0):
        self.grid = grid
        self.config = config
        self.cache = PropagatorCache(grid, nu, kappa)
        self.times = np.linspace(0.0, config.T, config.K)
        self.h = self.times[1] - self.times[0]
        self.lag_operators = [self.cache.operator(tau) for tau in self.times]
        logger.info(f"✅ DuhamelSolver initialized (T={config.T:g}, K={config.K})")

    def _forcing_aligned(self, template: MixedSpectralState, aligned: np.ndarray) -> np.ndarray:
        state = template.with_stack(unalign_stack(aligned))
        return align_stack(nonlinear_forcing(state, self.config.dealias).stack())

    def solve(self, v0: MixedSpectralState) -> DuhamelResult:
        K = self.config.K
        start = align_stack(v0.stack())
        linear = np.stack([op.apply(start) for op in self.lag_operators])
        iterate = linear.copy()
        history: List[float] = []

        for m in range(1, self.config.picard_iters + 1):
            forcing = np.stack([self._forcing_aligned(v0, iterate[k]) for k in range(K)])
            updated = linear.copy()
            for k in range(1, K):
                integral = 0.5 * self.lag_operators[k].apply(forcing[0]) + 0.5 * forcing[k]
                for j in range(1, k):
                    integral += self.lag_operators[k - j].apply(forcing[j])
                updated[k] += self.h * integral

            scale = max(float(np.max(np.abs(updated))), np.finfo(float).tiny)
            residual = float(np.max(np.abs(updated - iterate))) / scale
            history.append(residual)
            iterate = updated
            logger.debug(f"Picard iteration {m}: residual {residual:.3e}")

            if residual < self.config.tol:
                break
            if len(history) > 1 and residual > history[-2] and residual > 1e3 * self.config.tol:
                logger.error(f"❌ Error in Duhamel solve: residual grew to {residual:.3e}")
                raise DuhamelContractionError(
                    f"Picard iteration is not contracting (residual {history[-2]:.3e} -> {residual:.3e}); "
                    f"reduce duhamel.T (currently {self.config.T:g})")
        else:
            logger.warning(f"⚠️ Picard iteration stopped at the cap with residual {history[-1]:.3e}")

        final = v0.with_stack(unalign_stack(iterate[-1]))
        return DuhamelResult(final, len(history), history[-1], history)


def duhamel_solve(v0: MixedSpectralState, cfg: DuhamelConfig) -> MixedSpectralState:
    """State at cfg.T from the Duhamel representation"""
    return DuhamelSolver(v0.grid, cfg, v0.nu, v0.kappa).solve(v0).state
