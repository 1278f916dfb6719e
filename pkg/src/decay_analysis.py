"""
Decay Analysis Module

Norm time series of evolving states, the H^3 energy functional, the L2
energy budget, log-log decay-exponent fitting and the table of decay rates
guaranteed for small data.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy.integrate import cumulative_trapezoid
from scipy.stats import linregress
from sklearn.linear_model import LinearRegression
from sklearn.metrics import r2_score

from errors import FitError, RateParameterError, SeriesError
from spectral_core import (
    MixedSpectralState,
    SpectralScalar,
    lambda_h_pow,
    norm_l2,
    sobolev_multiplier,
    weighted_energy,
)

logger = logging.getLogger(__name__)

NORM_COLUMNS = [
    't', 'u', 'theta', 'grad_h_u', 'grad_h_theta', 'd3_u_h', 'd3_theta', 'd3_u3',
    'lambda_u', 'lambda_theta', 'h3_u', 'h3_theta', 'grad_h_u_h3', 'grad_h_theta_h3',
]

COLUMN_DESCRIPTIONS = {
    't': 'time',
    'u': 'L2 norm of the velocity',
    'theta': 'L2 norm of the temperature perturbation',
    'grad_h_u': 'L2 norm of the horizontal gradient of the velocity',
    'grad_h_theta': 'L2 norm of the horizontal gradient of theta',
    'd3_u_h': 'L2 norm of d3 of the horizontal velocity',
    'd3_theta': 'L2 norm of d3 theta',
    'd3_u3': 'L2 norm of d3 of the vertical velocity',
    'lambda_u': 'L2 norm of |xi_h|^-sigma applied to the velocity',
    'lambda_theta': 'L2 norm of |xi_h|^-sigma applied to theta',
    'h3_u': 'H3 norm of the velocity',
    'h3_theta': 'H3 norm of theta',
    'grad_h_u_h3': 'H3 norm of the horizontal gradient of the velocity',
    'grad_h_theta_h3': 'H3 norm of the horizontal gradient of theta',
}

# Fitting thresholds
MIN_FIT_SAMPLES = 8
POWER_LAW_R2 = 0.999


def _norm(components: Iterable[SpectralScalar], multiplier=None) -> float:
    """sqrt of the summed weighted energies; multiplier(scalar) returns the symbol"""
    total = 0.0
    for c in components:
        total += weighted_energy(c, 1.0 if multiplier is None else multiplier(c))
    return float(np.sqrt(total))


def record(state: MixedSpectralState, t: float, sigma: float) -> Dict[str, float]:
    """
    Compute one NormSeries row

    Args:
        state: current state (zero horizontal mean)
        t: time stamp
        sigma: order of the negative horizontal norm, in (0, 1)

    Returns:
        Dictionary keyed by NORM_COLUMNS
    """
    if not 0.0 < sigma < 1.0:
        raise RateParameterError(f"sigma={sigma} must lie in (0, 1)")

    grid = state.grid
    velocity = (state.u1, state.u2, state.u3)
    theta = (state.theta,)

    def h2(c):
        return grid.h2

    def xi3_sq(c):
        return grid.xi3(c.parity) ** 2

    def h3(c):
        return sobolev_multiplier(grid, c.parity, 3)

    def grad_h3(c):
        return grid.h2 * sobolev_multiplier(grid, c.parity, 3)

    return {
        't': float(t),
        'u': _norm(velocity),
        'theta': _norm(theta),
        'grad_h_u': _norm(velocity, h2),
        'grad_h_theta': _norm(theta, h2),
        'd3_u_h': _norm(velocity[:2], xi3_sq),
        'd3_theta': _norm(theta, xi3_sq),
        'd3_u3': _norm(velocity[2:], xi3_sq),
        'lambda_u': float(np.sqrt(sum(norm_l2(lambda_h_pow(c, -sigma)) ** 2 for c in velocity))),
        'lambda_theta': norm_l2(lambda_h_pow(state.theta, -sigma)),
        'h3_u': _norm(velocity, h3),
        'h3_theta': _norm(theta, h3),
        'grad_h_u_h3': _norm(velocity, grad_h3),
        'grad_h_theta_h3': _norm(theta, grad_h3),
    }


class NormSeries:
    """Time-stamped norm records backed by a pandas DataFrame"""

    def __init__(self, sigma: float, rows: Optional[List[Dict[str, float]]] = None):
        self.sigma = sigma
        self._rows: List[Dict[str, float]] = []
        for row in rows or []:
            self.append(row)

    def append(self, row: Dict[str, float]) -> None:
        missing = [c for c in NORM_COLUMNS if c not in row]
        if missing:
            raise SeriesError(f"norm row lacks columns {missing}")
        if self._rows and not row['t'] > self._rows[-1]['t']:
            raise SeriesError(f"time {row['t']} does not follow {self._rows[-1]['t']}")
        negative = [c for c in NORM_COLUMNS[1:] if row[c] < 0]
        if negative:
            raise SeriesError(f"negative norms in columns {negative}")
        self._rows.append({c: float(row[c]) for c in NORM_COLUMNS})

    def record(self, state: MixedSpectralState, t: float) -> Dict[str, float]:
        row = record(state, t, self.sigma)
        self.append(row)
        return row

    def __len__(self) -> int:
        return len(self._rows)

    @property
    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(self._rows, columns=NORM_COLUMNS)

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, sigma: float) -> "NormSeries":
        return cls(sigma, frame[NORM_COLUMNS].to_dict('records'))


SeriesLike = Union[NormSeries, pd.DataFrame]


def _as_frame(series: SeriesLike) -> pd.DataFrame:
    return series.frame if isinstance(series, NormSeries) else series


def energy_functional(series: SeriesLike) -> np.ndarray:
    """
    E(t) = max_{s<=t} (|u|_H3^2 + |theta|_H3^2) + 2 int_0^t (|grad_h u|_H3^2 + |grad_h theta|_H3^2)

    Args:
        series: norm records with the H3 and gradient-H3 columns

    Returns:
        E evaluated at every recorded time
    """
    frame = _as_frame(series)
    if len(frame) == 0:
        raise SeriesError("energy functional of an empty series")

    t = frame['t'].to_numpy()
    peak = np.maximum.accumulate(frame['h3_u'].to_numpy() ** 2 + frame['h3_theta'].to_numpy() ** 2)
    dissipation = frame['grad_h_u_h3'].to_numpy() ** 2 + frame['grad_h_theta_h3'].to_numpy() ** 2
    if len(t) == 1:
        return peak
    return peak + 2.0 * cumulative_trapezoid(dissipation, t, initial=0.0)


def energy_and_dissipation(state: MixedSpectralState, nu: float = 1.0, kappa: float = 1.0) -> Tuple[float, float]:
    """(|(u, theta)|^2 / 2, nu |grad_h u|^2 + kappa |grad_h theta|^2)"""
    grid = state.grid
    velocity = (state.u1, state.u2, state.u3)
    energy = 0.5 * (_norm(velocity) ** 2 + _norm((state.theta,)) ** 2)
    dissipation = (nu * _norm(velocity, lambda c: grid.h2) ** 2
                   + kappa * _norm((state.theta,), lambda c: grid.h2) ** 2)
    return energy, dissipation


class EnergyBudget:
    """
    L2 energy bookkeeping along a run

    Tracks E = |(u, theta)|^2 / 2 and the dissipation rate
    nu |grad_h u|^2 + kappa |grad_h theta|^2 so that E(t) + int D = E(0)
    can be checked step by step.

    With a propagator cache the energy dissipated between two records is
    taken from the exact linear evolution of the earlier record,
    E(v) - E(S(dt) v), instead of the trapezoid rule on D. The balance then
    isolates the energy error of the nonlinear part of the scheme.
    """

    def __init__(self, nu: float = 1.0, kappa: float = 1.0, cache=None):
        self.nu = nu
        self.kappa = kappa
        self.cache = cache
        self.times: List[float] = []
        self.energy: List[float] = []
        self.dissipation: List[float] = []
        self.linear_loss: List[float] = []
        self._previous: Optional[MixedSpectralState] = None
        logger.info("✅ EnergyBudget initialized")

    def record(self, state: MixedSpectralState, t: float) -> None:
        e, d = energy_and_dissipation(state, self.nu, self.kappa)
        if self.cache is not None:
            if self._previous is None:
                self.linear_loss.append(0.0)
            else:
                evolved = self.cache.apply(self._previous, float(t) - self.times[-1])
                self.linear_loss.append(self.energy[-1] - energy_and_dissipation(evolved)[0])
            self._previous = state
        self.times.append(float(t))
        self.energy.append(e)
        self.dissipation.append(d)

    def balance(self) -> np.ndarray:
        """E(t) + int_0^t D - E(0) at every recorded time"""
        if not self.times:
            raise SeriesError("energy budget is empty")
        e = np.asarray(self.energy)
        if len(e) == 1:
            return np.zeros(1)
        if self.cache is not None:
            dissipated = np.cumsum(self.linear_loss)
        else:
            dissipated = cumulative_trapezoid(np.asarray(self.dissipation), np.asarray(self.times), initial=0.0)
        return e + dissipated - e[0]

    def balance_residual(self) -> float:
        e0 = self.energy[0] if self.energy else 0.0
        worst = float(np.max(np.abs(self.balance())))
        return worst / e0 if e0 > 0 else worst

    def is_monotone(self, rtol: float = 1e-12) -> bool:
        e = np.asarray(self.energy)
        if len(e) < 2:
            return True
        return bool(np.all(np.diff(e) <= rtol * e[0]))

    @property
    def frame(self) -> pd.DataFrame:
        balance = self.balance() if self.times else np.zeros(0)
        return pd.DataFrame({'t': self.times, 'energy': self.energy,
                             'dissipation': self.dissipation, 'balance': balance})


@dataclass
class FitResult:
    """Least-squares decay exponent of value ~ (1 + t)^exponent"""

    exponent: float
    stderr: float
    window: Tuple[float, float]
    r_squared: float
    n_samples: int
    local_slope_spread: float

    @property
    def is_power_law(self) -> bool:
        return (self.r_squared >= POWER_LAW_R2
                and self.local_slope_spread <= 0.1 * abs(self.exponent) + 0.05)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'exponent': self.exponent,
            'stderr': self.stderr,
            't0': self.window[0],
            't1': self.window[1],
            'r_squared': self.r_squared,
            'n_samples': self.n_samples,
            'local_slope_spread': self.local_slope_spread,
            'is_power_law': self.is_power_law,
        }


def _slope(x: np.ndarray, y: np.ndarray) -> Tuple[float, np.ndarray]:
    model = LinearRegression().fit(x.reshape(-1, 1), y)
    return float(model.coef_[0]), model.predict(x.reshape(-1, 1))


def fit_power_law(t: np.ndarray, values: np.ndarray,
                  window: Optional[Tuple[float, float]] = None) -> FitResult:
    """
    Fit log(value) against log(1 + t)

    Args:
        t: sample times
        values: strictly positive samples
        window: inclusive [t0, t1]; the full range if omitted

    Returns:
        FitResult with slope, standard error, R^2 and the half-window slope spread
    """
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    if window is None:
        window = (float(t.min()), float(t.max())) if t.size else (0.0, 0.0)
    t0, t1 = window
    if not t0 < t1:
        raise FitError(f"fit window [{t0}, {t1}] is empty")

    inside = (t >= t0) & (t <= t1)
    t_w, v_w = t[inside], values[inside]
    n = int(t_w.size)
    if n < MIN_FIT_SAMPLES:
        raise FitError(f"fit window [{t0}, {t1}] holds {n} samples, need {MIN_FIT_SAMPLES}")
    if not np.all(np.isfinite(v_w)) or np.any(v_w <= 0):
        raise FitError("decay fit needs strictly positive finite values")

    x = np.log1p(t_w)
    y = np.log(v_w)
    if np.ptp(x) == 0:
        raise FitError("decay fit needs at least two distinct sample times")
    exponent, predicted = _slope(x, y)
    stderr = float(linregress(x, y).stderr)
    r_squared = float(r2_score(y, predicted))

    half = n // 2
    first, _ = _slope(x[:half], y[:half])
    second, _ = _slope(x[half:], y[half:])

    result = FitResult(exponent, stderr, (float(t0), float(t1)), r_squared, n, abs(first - second))
    if not result.is_power_law:
        logger.warning(f"⚠️ Poor power-law fit on [{t0:g}, {t1:g}]: R^2={r_squared:.5f}, "
                       f"local slopes {first:.3f} / {second:.3f}")
    return result


def fit_decay(series: SeriesLike, column: str, window: Tuple[float, float]) -> FitResult:
    """Decay exponent of one NormSeries column over a time window"""
    frame = _as_frame(series)
    if column not in frame.columns or column == 't':
        raise FitError(f"unknown norm column '{column}'")
    return fit_power_law(frame['t'].to_numpy(), frame[column].to_numpy(), window)


def check_rate_parameters(sigma: float, delta: float) -> None:
    """Raise unless 9/10 < sigma < 1 and 1/2 - sigma/2 <= delta < sigma/8 - 1/16"""
    if not 0.9 < sigma < 1.0:
        raise RateParameterError(f"sigma={sigma} outside (9/10, 1)")
    lower = 0.5 - sigma / 2.0
    upper = sigma / 8.0 - 1.0 / 16.0
    if not lower <= delta < upper:
        raise RateParameterError(f"delta={delta} outside [{lower:.6g}, {upper:.6g}) for sigma={sigma}")


def expected_rates(sigma: float, delta: float) -> pd.DataFrame:
    """
    Decay exponents guaranteed for small data

    Args:
        sigma: negative-order exponent of the initial data
        delta: loss parameter of the nonlinear rates

    Returns:
        DataFrame with columns quantity, exponent, regime
    """
    check_rate_parameters(sigma, delta)
    l2 = -sigma / 2.0 + delta
    vertical = -sigma / 2.0 + 3.0 * delta
    gradient = -(sigma + 1.0) / 2.0 + delta
    rows = [
        ('u', l2, 'nonlinear'),
        ('theta', l2, 'nonlinear'),
        ('d3_u_h', vertical, 'nonlinear'),
        ('d3_theta', vertical, 'nonlinear'),
        ('d3_u3', gradient, 'nonlinear'),
        ('grad_h_u', gradient, 'nonlinear'),
        ('grad_h_theta', gradient, 'nonlinear'),
        ('linear_l2', -sigma / 2.0, 'linear'),
        ('linear_grad_h', -(sigma + 1.0) / 2.0, 'linear'),
    ]
    return pd.DataFrame(rows, columns=['quantity', 'exponent', 'regime'])
