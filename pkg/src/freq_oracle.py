"""
Continuous-Frequency Oracle Module

Evaluates norms of the linear solution on the unbounded half-space by direct
quadrature over frequency space, free of any box truncation. Initial spectra
are radial in xi_h with amplitude |xi_h|^a exp(-|xi|^2 / k0^2).

The integrals are taken in polar coordinates rho = |xi|, phi with
sin(phi) = |xi_h| / |xi|, so the oscillation frequency of the (u3, theta)
block depends on phi alone. The rho integral then factors out as

    int_0^inf rho^p exp(-beta(phi) rho^2) d rho = R(p) / beta^((p + 1) / 2)

with beta = 2 (1/k0^2 + nu t sin^2 phi), and only a one-dimensional,
oscillatory phi integral remains.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from numpy.polynomial.legendre import leggauss

from decay_analysis import FitResult, fit_power_law
from errors import FitError, ProfileError, QuadratureError
from linear_propagator import stable_sinc

logger = logging.getLogger(__name__)

SEEDS = ('u_perp', 'u3', 'theta')
FIELDS = ('all', 'u', 'u_h', 'u3', 'theta')
WEIGHTS = ('one', 'grad_h', 'd3', 'lambda')

# Radial exponent q and angular exponent of each weight (weight = rho^q * angular)
_WEIGHT_RHO_POWER = {'one': 0.0, 'grad_h': 2.0, 'd3': 2.0}

MIN_ORACLE_TIMES = 12


@dataclass(frozen=True)
class RadialProfile:
    """Initial spectrum A = amplitude |xi_h|^a exp(-|xi|^2 / k0^2) on the seeded components"""

    a: float = 1.0
    k0: float = 1.0
    seeded: Tuple[str, ...] = SEEDS
    amplitude: float = 1.0
    nu: float = 1.0

    def __post_init__(self):
        unknown = [s for s in self.seeded if s not in SEEDS]
        if unknown:
            raise ProfileError(f"unknown seeded components {unknown}; choose from {list(SEEDS)}")
        if not self.k0 > 0:
            raise ProfileError(f"k0={self.k0} must be positive")
        if not self.nu > 0:
            raise ProfileError(f"nu={self.nu} must be positive")

    def flag(self, name: str) -> float:
        return 1.0 if name in self.seeded else 0.0

    def check_admissible(self, sigma: float) -> None:
        """a > sigma - 1, and a > sigma when u3 is seeded"""
        if not self.a > sigma - 1.0:
            raise ProfileError(f"a={self.a} must exceed sigma - 1 = {sigma - 1.0:g}")
        if 'u3' in self.seeded and not self.a > sigma:
            raise ProfileError(f"a={self.a} must exceed sigma = {sigma:g} when u3 is seeded")


@dataclass(frozen=True)
class QuadratureSpec:
    """Gauss-Legendre panel settings for the oracle integrals"""

    nodes: int = 8
    max_doublings: int = 5
    tol: float = 1e-10
    radial_levels: Optional[int] = None
    r_max: Optional[float] = None

    def __post_init__(self):
        if self.nodes < 2:
            raise ValueError("quadrature needs at least 2 nodes per panel")
        if not 0 < self.tol < 1:
            raise ValueError(f"quadrature tolerance {self.tol} must lie in (0, 1)")

    def radial_cutoff(self, p: float) -> float:
        """Scaled radius beyond which y^p exp(-y^2) is below 1e-16 of its integral"""
        if self.r_max is not None:
            return self.r_max
        return max(7.0, np.sqrt(max(p, 0.0)) + 6.0)


def _gl_on_panels(edges_lo: np.ndarray, edges_hi: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on every panel [lo_i, hi_i]"""
    x, w = leggauss(n)
    half = 0.5 * (edges_hi - edges_lo)
    mid = 0.5 * (edges_hi + edges_lo)
    nodes = mid[:, None] + half[:, None] * x[None, :]
    weights = half[:, None] * w[None, :]
    return nodes.ravel(), weights.ravel()


def _geometric_panels(top: float, levels: int) -> Tuple[np.ndarray, np.ndarray]:
    """Panels [top 2^-(j+1), top 2^-j], j = 0..levels-1, grading toward zero"""
    hi = top * 0.5 ** np.arange(levels)
    return hi * 0.5, hi


def _grading_levels(mu: float) -> int:
    """Levels so the skipped interval near zero of an x^mu integrand is below 2^-53"""
    # capped so the smallest node stays far from underflow
    return int(min(480, max(8, np.ceil(53.2 / (mu + 1.0)))))


def radial_moment(p: float, n: int, spec: QuadratureSpec) -> float:
    """R(p) = int_0^inf y^p exp(-y^2) dy by graded Gauss-Legendre"""
    if not p > -1:
        raise ProfileError(f"radial moment diverges for p={p}")
    levels = spec.radial_levels or _grading_levels(p)
    lo, hi = _geometric_panels(spec.radial_cutoff(p), levels)
    y, w = _gl_on_panels(lo, hi, n)
    return float(np.sum(w * y ** p * np.exp(-y * y)))


def _field_factor(profile: RadialProfile, s: np.ndarray, t: float, field_name: str) -> np.ndarray:
    """|FU|^2 / (A^2 E^2) for the selected field, as a function of s = sin(phi)"""
    phase = s * t
    cos_t = np.cos(phase)
    sin_t = t * stable_sinc(phase)
    a_perp, a3, a_theta = profile.flag('u_perp'), profile.flag('u3'), profile.flag('theta')

    u3 = cos_t * a3 + s * s * sin_t * a_theta
    theta = -sin_t * a3 + cos_t * a_theta
    if field_name == 'u3':
        return u3 ** 2
    if field_name == 'theta':
        return theta ** 2
    # divergence-free: the u_h component along xi_h is i cot(phi) u3
    u_parallel_sq = (u3 * np.sqrt(1.0 - s * s) / s) ** 2
    if field_name == 'u_h':
        return a_perp + u_parallel_sq
    velocity = a_perp + (u3 / s) ** 2
    if field_name == 'u':
        return velocity
    return velocity + theta ** 2


def _angular_exponent(profile: RadialProfile, field_name: str, weight: str, sigma: float) -> float:
    """Power of phi governing the phi -> 0 behaviour of the angular integrand"""
    mu = 1.0 + 2.0 * profile.a
    if weight == 'grad_h':
        mu += 2.0
    elif weight == 'lambda':
        mu -= 2.0 * sigma
    if field_name in ('all', 'u', 'u_h') and 'u3' in profile.seeded:
        mu -= 2.0
    return mu


def _angular_panels(t: float, levels: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Panels on [0, pi/2]: one per quarter period of cos(t sin phi), with the
    first one graded geometrically toward phi = 0
    """
    n_osc = max(1, int(np.ceil(2.0 * t / np.pi)))
    s_breaks = np.minimum(1.0, np.arange(n_osc + 1) * np.pi / (2.0 * t)) if t > 0 else np.array([0.0, 1.0])
    breaks = np.arcsin(s_breaks)
    breaks[-1] = 0.5 * np.pi
    breaks = np.unique(breaks)
    g_lo, g_hi = _geometric_panels(breaks[1], levels)
    lo = np.concatenate([g_lo[::-1], breaks[1:-1]])
    hi = np.concatenate([g_hi[::-1], breaks[2:]])
    return lo, hi


def _angular_weight(weight: str, s: np.ndarray, sigma: float) -> np.ndarray:
    if weight == 'one':
        return np.ones_like(s)
    if weight == 'grad_h':
        return s * s
    if weight == 'd3':
        return 1.0 - s * s
    return s ** (-2.0 * sigma)


def continuous_norm(profile: RadialProfile, t: float, field_name: str = 'all', weight: str = 'one',
                    sigma: Optional[float] = None, spec: Optional[QuadratureSpec] = None) -> float:
    """
    Norm of the linear solution on the unbounded half-space

    Args:
        profile: radial initial spectrum
        t: time, t >= 0
        field_name: 'all' (u, theta), 'u', 'u_h', 'u3' or 'theta'
        weight: 'one', 'grad_h' (|xi_h|^2), 'd3' (xi3^2) or 'lambda' (|xi_h|^(-2 sigma))
        sigma: negative-norm order; required for weight='lambda' and for the admissibility check
        spec: quadrature settings

    Returns:
        sqrt of 2 pi int int |FU(xi, t)|^2 weight(xi) |xi_h| d|xi_h| d xi3
    """
    if t < 0:
        raise ProfileError(f"negative time t={t}")
    if field_name not in FIELDS:
        raise ProfileError(f"unknown field '{field_name}'; choose from {list(FIELDS)}")
    if weight not in WEIGHTS:
        raise ProfileError(f"unknown weight '{weight}'; choose from {list(WEIGHTS)}")
    if weight == 'lambda' and sigma is None:
        raise ProfileError("the lambda weight needs sigma")
    if sigma is not None:
        profile.check_admissible(sigma)
    if profile.amplitude == 0 or not profile.seeded:
        return 0.0

    spec = spec or QuadratureSpec()
    sig = 0.0 if sigma is None else sigma
    q = -2.0 * sig if weight == 'lambda' else _WEIGHT_RHO_POWER[weight]
    p = 2.0 * profile.a + 2.0 + q

    mu = _angular_exponent(profile, field_name, weight, sig)
    if not mu > -1.0:
        raise ProfileError(f"frequency integral diverges at xi_h -> 0 (a={profile.a}, weight={weight})")
    levels = _grading_levels(mu)
    lo, hi = _angular_panels(t, levels)

    previous = None
    n = spec.nodes
    for _ in range(spec.max_doublings + 1):
        phi, w = _gl_on_panels(lo, hi, n)
        s = np.sin(phi)
        beta = 2.0 * (1.0 / profile.k0 ** 2 + profile.nu * t * s * s)
        integrand = (s * s ** (2.0 * profile.a) * _angular_weight(weight, s, sig)
                     * _field_factor(profile, s, t, field_name) * beta ** (-0.5 * (p + 1.0)))
        value = 2.0 * np.pi * profile.amplitude ** 2 * radial_moment(p, n, spec) * float(np.sum(w * integrand))
        if previous is not None:
            change = abs(value - previous)
            if change <= spec.tol * abs(value) or value == previous:
                return float(np.sqrt(max(value, 0.0)))
        previous = value
        n *= 2

    logger.error(f"❌ Error in continuous_norm: no convergence at t={t:g} ({field_name}, {weight})")
    raise QuadratureError(f"quadrature did not reach tol={spec.tol:g} at t={t:g} after "
                          f"{spec.max_doublings} doublings")


def heat_only_exponent(a: float, weight: str = 'one', sigma: float = 0.0) -> float:
    """Exact decay exponent of a u_perp-only spectrum (k0 = 1, nu = 1)"""
    q = {'one': 0.0, 'grad_h': 2.0, 'd3': 0.0, 'lambda': -2.0 * sigma}[weight]
    return -(2.0 * a + 2.0 + q) / 4.0


def guaranteed_exponent(weight: str, sigma: float) -> float:
    """Linear decay rate guaranteed for data with finite |xi_h|^-sigma norm"""
    if weight == 'grad_h':
        return -(sigma + 1.0) / 2.0
    if weight == 'lambda':
        return 0.0
    return -sigma / 2.0


@dataclass
class OracleFit:
    """Fitted tail exponent of an oracle norm against its guaranteed rate"""

    fit: FitResult
    guaranteed: float
    t_grid: np.ndarray
    values: np.ndarray
    tolerance: float = 0.05

    @property
    def holds(self) -> bool:
        return self.fit.exponent <= self.guaranteed + self.tolerance


def oracle_decay_fit(profile: RadialProfile, sigma: float, field_name: str = 'all', weight: str = 'one',
                     t_grid: Optional[Sequence[float]] = None,
                     spec: Optional[QuadratureSpec] = None) -> OracleFit:
    """
    Fit the decay exponent of continuous_norm over a geometric time grid

    Args:
        profile: admissible radial spectrum
        sigma: negative-norm order of the data
        field_name: field selector of continuous_norm
        weight: weight selector of continuous_norm
        t_grid: sample times (default: 25 geometric points on [10, 1e4])
        spec: quadrature settings

    Returns:
        OracleFit with the fit and the guaranteed exponent
    """
    t_grid = np.geomspace(10.0, 1e4, 25) if t_grid is None else np.asarray(t_grid, dtype=float)
    if t_grid.size < MIN_ORACLE_TIMES:
        raise FitError(f"oracle fit needs >= {MIN_ORACLE_TIMES} times, got {t_grid.size}")

    values = np.array([continuous_norm(profile, t, field_name, weight, sigma, spec) for t in t_grid])
    fit = fit_power_law(t_grid, values)
    result = OracleFit(fit, guaranteed_exponent(weight, sigma), t_grid, values)
    logger.info(f"Oracle fit {field_name}/{weight}: exponent {fit.exponent:.4f} "
                f"(guaranteed {result.guaranteed:.4f}, holds={result.holds})")
    return result


ORACLE_COLUMNS: Dict[str, Tuple[str, str]] = {
    'all': ('all', 'one'),
    'u': ('u', 'one'),
    'theta': ('theta', 'one'),
    'grad_h_all': ('all', 'grad_h'),
    'd3_all': ('all', 'd3'),
    'lambda_all': ('all', 'lambda'),
}


def oracle_table(profile: RadialProfile, sigma: float, t_grid: Sequence[float],
                 spec: Optional[QuadratureSpec] = None) -> pd.DataFrame:
    """Every ORACLE_COLUMNS norm at every time in t_grid"""
    rows: List[Dict[str, float]] = []
    for t in t_grid:
        row = {'t': float(t)}
        for column, (field_name, weight) in ORACLE_COLUMNS.items():
            row[column] = continuous_norm(profile, t, field_name, weight, sigma, spec)
        rows.append(row)
    return pd.DataFrame(rows, columns=['t'] + list(ORACLE_COLUMNS))
