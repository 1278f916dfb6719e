"""
Experiment Runner Module

Runs configured experiments (nonlinear, linear-only, Duhamel, oracle), writes their
artifacts, and runs the acceptance check suites.

Artifacts of a run, all under the output directory:
    norms.csv        NormSeries rows (grid runs)
    diagnostics.csv  energy budget, divergence and boundary traces (grid runs)
    oracle.csv       continuous-frequency norms (oracle runs)
    picard.csv       Picard residual per iteration (Duhamel runs)
    summary.json     configuration, fits and headline diagnostics
    final_state.npz  final spectral state (grid and Duhamel runs)
    norms.svg        log-log plot, when output.plots is on
"""

import json
import logging
import os
import time
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import scipy.fft as sfft

from decay_analysis import (
    COLUMN_DESCRIPTIONS,
    EnergyBudget,
    NormSeries,
    energy_and_dissipation,
    expected_rates,
    fit_decay,
    fit_power_law,
)
from errors import ConfigError, FitError, RateParameterError
from freq_oracle import (
    ORACLE_COLUMNS,
    QuadratureSpec,
    RadialProfile,
    guaranteed_exponent,
    heat_only_exponent,
    oracle_table,
)
from initial_data import InitialDataSpec, generate_initial_data, random_spectrum
from linear_propagator import PropagatorCache, semigroup_closed_form, semigroup_oracle
from nonlinear import (
    DuhamelConfig,
    DuhamelSolver,
    ExponentialStepper,
    NonlinearTerms,
    StepperConfig,
    boundary_trace_check,
    leray_project,
    leray_project_literal,
)
from plotting import plot_norm_series, plot_oracle
from run_config import RunConfig
from spectral_core import (
    GridSpec,
    MixedSpectralState,
    Parity,
    build_grid,
    divergence_residual,
    forward_mixed,
    inverse_mixed,
    norm_l2,
    weighted_energy,
)
from validation import StateValidator

logger = logging.getLogger(__name__)

ARTIFACT_FORMAT_VERSION = 1

FIT_COLUMNS = ('u', 'theta', 'grad_h_u', 'grad_h_theta', 'd3_u_h', 'd3_theta', 'd3_u3')

DIAGNOSTIC_DESCRIPTIONS = {
    't': 'time',
    'energy': 'L2 energy |(u, theta)|^2 / 2',
    'dissipation': 'nu |grad_h u|^2 + kappa |grad_h theta|^2',
    'balance': 'E(t) + dissipated energy - E(0)',
    'divergence': 'relative divergence residual',
    'boundary_trace': 'largest relative boundary trace',
}

PICARD_DESCRIPTIONS = {
    'iteration': 'Picard iteration number',
    'residual': 'largest relative change of the iterate on the trapezoid nodes',
}

ORACLE_DESCRIPTIONS = {
    't': 'time',
    'all': 'L2 norm of the whole solution',
    'u': 'L2 norm of the velocity',
    'theta': 'L2 norm of theta',
    'grad_h_all': 'L2 norm of the horizontal gradient',
    'd3_all': 'L2 norm of the vertical derivative',
    'lambda_all': 'L2 norm of |xi_h|^-sigma applied to the solution',
}


def write_table(frame: pd.DataFrame, path: str, kind: str, descriptions: Dict[str, str]) -> str:
    """Write frame as CSV behind a versioned header and one schema comment per column"""
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write(f"# boussinesq-halfspace {kind} v{ARTIFACT_FORMAT_VERSION}\n")
        for column in frame.columns:
            f.write(f"# {column}: {descriptions.get(column, '')}\n")
        frame.to_csv(f, index=False, float_format='%.17g')
    return path


def read_table(path: str) -> pd.DataFrame:
    return pd.read_csv(path, comment='#')


def save_state(state: MixedSpectralState, path: str, t: float = 0.0) -> str:
    grid = state.grid
    np.savez(path, stack=state.stack(), t=t, nu=state.nu, kappa=state.kappa,
             L_h=grid.L_h, N_h=grid.N_h, L3=grid.L3, N3=grid.N3, dealias_fraction=grid.dealias_fraction)
    return path


def load_state(path: str) -> Tuple[MixedSpectralState, float]:
    with np.load(path) as data:
        grid = build_grid(float(data['L_h']), int(data['N_h']), float(data['L3']), int(data['N3']),
                          float(data['dealias_fraction']))
        state = MixedSpectralState.from_stack(grid, data['stack'], float(data['nu']), float(data['kappa']))
        return state, float(data['t'])


def _fit_columns(frame: pd.DataFrame, columns: Sequence[str],
                 window: Optional[Tuple[float, float]]) -> Dict[str, Dict[str, Any]]:
    """
    Fit every column; an explicit window makes fit failures fatal

    Identically zero columns (fields the data does not excite) are skipped.
    """
    fits: Dict[str, Dict[str, Any]] = {}
    for column in columns:
        if column not in frame.columns or not np.any(frame[column].to_numpy() > 0):
            continue
        try:
            fits[column] = fit_power_law(frame['t'].to_numpy(), frame[column].to_numpy(), window).to_dict()
        except FitError as e:
            if window is not None:
                logger.error(f"❌ Error in decay fit of '{column}': {str(e)}")
                raise
            logger.warning(f"⚠️ Skipping decay fit of '{column}': {str(e)}")
            fits[column] = {'error': str(e)}
    return fits


def _rate_table(sigma: float, delta: float) -> Dict[str, float]:
    try:
        table = expected_rates(sigma, delta)
    except RateParameterError as e:
        logger.warning(f"⚠️ Guaranteed rates unavailable: {str(e)}")
        return {}
    return {q: float(x) for q, x in zip(table['quantity'], table['exponent'])}


class ExperimentRunner:
    """Runs one configured experiment and writes its artifacts"""

    def __init__(self, config: RunConfig):
        self.config = config
        self.out_dir = config.output_dir
        self.state_validator = StateValidator()
        logger.info(f"✅ ExperimentRunner initialized (mode={config.mode}, out={self.out_dir})")

    def _path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def initial_state(self) -> MixedSpectralState:
        cfg = self.config
        state = generate_initial_data(cfg.data, cfg.grid, cfg.nu, cfg.kappa)
        report = self.state_validator.validate_state(state, label='initial data')
        for message in report['errors']:
            logger.warning(f"⚠️ {message}")
        return state

    def generate_data(self) -> Dict[str, Any]:
        """Write the configured initial state and its norms without evolving it"""
        os.makedirs(self.out_dir, exist_ok=True)
        state = self.initial_state()
        series = NormSeries(self.config.sigma)
        series.record(state, 0.0)
        save_state(state, self._path('initial_state.npz'))
        write_table(series.frame, self._path('initial_norms.csv'), 'norms', COLUMN_DESCRIPTIONS)
        summary = {
            'mode': 'gen-data',
            'seed': self.config.data.seed,
            'norms': series.frame.iloc[0].to_dict(),
            'divergence_residual': divergence_residual(state),
            'boundary_trace': boundary_trace_check(state).relative,
        }
        self._write_summary(summary)
        return summary

    def run(self) -> Dict[str, Any]:
        """
        Execute the configured run

        Returns:
            The summary dictionary also written to summary.json
        """
        os.makedirs(self.out_dir, exist_ok=True)
        started = time.perf_counter()
        with sfft.set_workers(self.config.workers):
            if self.config.mode == 'oracle':
                summary = self._run_oracle()
            elif self.config.mode in ('linear', 'nonlinear'):
                summary = self._run_grid(linear=self.config.mode == 'linear')
            elif self.config.mode == 'duhamel':
                summary = self._run_duhamel()
            else:
                raise ConfigError(f"unknown run mode '{self.config.mode}'", field='run.mode')
        summary['elapsed_seconds'] = time.perf_counter() - started
        self._write_summary(summary)
        logger.info(f"✅ Run finished in {summary['elapsed_seconds']:.2f} s")
        return summary

    def _record_times(self) -> np.ndarray:
        stepper = self.config.stepper
        steps = [k for k in range(stepper.n_steps + 1)
                 if k % stepper.record_every == 0 or k == stepper.n_steps]
        return np.array([stepper.time_at(k) for k in steps])

    def _run_grid(self, linear: bool) -> Dict[str, Any]:
        cfg = self.config
        state = self.initial_state()
        cache = PropagatorCache(cfg.grid, cfg.nu, cfg.kappa)
        series = NormSeries(cfg.sigma)
        # linear runs check the trapezoid budget; nonlinear runs isolate the nonlinear error
        budget = EnergyBudget(cfg.nu, cfg.kappa, cache=None if linear else cache)
        diagnostics: List[Dict[str, float]] = []

        def recorder(step: int, t: float, current: MixedSpectralState) -> None:
            series.record(current, t)
            budget.record(current, t)
            diagnostics.append({
                'divergence': divergence_residual(current),
                'boundary_trace': boundary_trace_check(current).relative,
            })

        if linear:
            final = state
            for t in self._record_times():
                final = cache.apply(state, float(t))
                recorder(0, float(t), final)
        else:
            final = ExponentialStepper(cfg.grid, cfg.stepper, cfg.nu, cfg.kappa).run(state, recorder)

        frame = series.frame
        diag = budget.frame.join(pd.DataFrame(diagnostics))
        write_table(frame, self._path('norms.csv'), 'norms', COLUMN_DESCRIPTIONS)
        write_table(diag, self._path('diagnostics.csv'), 'diagnostics', DIAGNOSTIC_DESCRIPTIONS)
        save_state(final, self._path('final_state.npz'), float(frame['t'].iloc[-1]))
        if cfg.plots:
            plot_norm_series(frame, self._path('norms.svg'), cfg.sigma, cfg.delta)

        return {
            'mode': cfg.mode,
            'preset': cfg.preset,
            'config': cfg.values,
            'samples': len(series),
            'fits': _fit_columns(frame, FIT_COLUMNS, cfg.fit_window),
            'expected_rates': _rate_table(cfg.sigma, cfg.delta),
            'energy_balance_residual': budget.balance_residual(),
            'energy_monotone': budget.is_monotone(),
            'max_divergence': float(diag['divergence'].max()),
            'max_boundary_trace': float(diag['boundary_trace'].max()),
        }

    def _run_oracle(self) -> Dict[str, Any]:
        cfg = self.config
        profile = cfg.profile
        profile.check_admissible(cfg.sigma)
        table = oracle_table(profile, cfg.sigma, cfg.oracle_times, cfg.quadrature)
        write_table(table, self._path('oracle.csv'), 'oracle', ORACLE_DESCRIPTIONS)
        if cfg.plots:
            plot_oracle(table, self._path('norms.svg'), cfg.sigma, cfg.delta)

        fits = _fit_columns(table, list(ORACLE_COLUMNS), cfg.fit_window)
        for column, fit in fits.items():
            if 'exponent' in fit:
                fit['guaranteed'] = guaranteed_exponent(ORACLE_COLUMNS[column][1], cfg.sigma)
                fit['holds'] = fit['exponent'] <= fit['guaranteed'] + 0.05

        summary = {
            'mode': 'oracle',
            'preset': cfg.preset,
            'config': cfg.values,
            'profile': {'a': profile.a, 'k0': profile.k0, 'seeded': list(profile.seeded)},
            'fits': fits,
        }
        if profile.seeded == ('u_perp',) and 'exponent' in fits.get('u', {}):
            expected = heat_only_exponent(profile.a)
            summary['heat_only'] = {
                'expected': expected,
                'fitted': fits['u']['exponent'],
                'within_tolerance': abs(fits['u']['exponent'] - expected) <= 0.03,
            }
        return summary

    def _run_duhamel(self) -> Dict[str, Any]:
        cfg = self.config
        state = self.initial_state()
        result = DuhamelSolver(cfg.grid, cfg.duhamel, cfg.nu, cfg.kappa).solve(state)
        reference = StepperConfig(dt=min(cfg.stepper.dt, cfg.duhamel.T), T=cfg.duhamel.T,
                                  dealias=cfg.duhamel.dealias, cfl_safety=cfg.stepper.cfl_safety)
        stepped = ExponentialStepper(cfg.grid, reference, cfg.nu, cfg.kappa).run(state)
        scale = max(norm_l2(stepped), np.finfo(float).tiny)
        difference = norm_l2(result.state - stepped) / scale

        picard = pd.DataFrame({'iteration': np.arange(1, result.iterations + 1),
                               'residual': result.residual_history})
        write_table(picard, self._path('picard.csv'), 'picard', PICARD_DESCRIPTIONS)
        save_state(result.state, self._path('final_state.npz'), cfg.duhamel.T)
        logger.info(f"✅ Duhamel solve at T={cfg.duhamel.T:g}: {result.iterations} Picard iterations, "
                    f"stepper difference {difference:.3e}")

        return {
            'mode': 'duhamel',
            'preset': cfg.preset,
            'config': cfg.values,
            'T': cfg.duhamel.T,
            'iterations': result.iterations,
            'picard_residual': result.residual,
            'step_difference': difference,
            'max_divergence': divergence_residual(result.state),
            'max_boundary_trace': boundary_trace_check(result.state).relative,
        }

    def _write_summary(self, summary: Dict[str, Any]) -> None:
        with open(self._path('summary.json'), 'w', encoding='utf-8') as f:
            json.dump(summary, f, indent=2, sort_keys=True, default=float)


def run_experiment(config: RunConfig) -> Dict[str, Any]:
    """Run config and write its artifacts; returns the run summary"""
    return ExperimentRunner(config).run()


def generate_data(config: RunConfig) -> Dict[str, Any]:
    return ExperimentRunner(config).generate_data()


# ---------------------------------------------------------------------------
# Acceptance check suites
# ---------------------------------------------------------------------------

CHECK_SUITES = ('fast', 'full')


@dataclass(frozen=True)
class SuiteSizes:
    """Problem sizes of one check suite"""

    transform_n: int
    semigroup_samples: int
    energy_n: int
    energy_panels: int
    oracle_times: int
    oracle_tol: float
    conservation_n: int
    conservation_T: float
    conservation_dt: float
    conservation_record_every: int
    duhamel_K: int
    ordering_n_h: int
    ordering_n3: int
    ordering_nonlinear: bool


SUITE_SIZES = {
    'fast': SuiteSizes(transform_n=16, semigroup_samples=200, energy_n=16, energy_panels=20,
                       oracle_times=12, oracle_tol=1e-8, conservation_n=16, conservation_T=0.5,
                       conservation_dt=1e-2, conservation_record_every=1, duhamel_K=33,
                       ordering_n_h=64, ordering_n3=16, ordering_nonlinear=False),
    'full': SuiteSizes(transform_n=64, semigroup_samples=1000, energy_n=32, energy_panels=50,
                       oracle_times=25, oracle_tol=1e-10, conservation_n=64, conservation_T=10.0,
                       conservation_dt=1e-3, conservation_record_every=10, duhamel_K=65,
                       ordering_n_h=128, ordering_n3=32, ordering_nonlinear=True),
}


@dataclass
class CheckResult:
    id: str
    measured: float
    target: str
    passed: bool
    seconds: float = 0.0

    def line(self) -> str:
        return f"{self.id}\t{self.measured:.6g}\t{self.target}\t{'PASS' if self.passed else 'FAIL'}"


def _box_grid(n: int, n3: Optional[int] = None) -> GridSpec:
    return build_grid(2.0 * np.pi, n, np.pi, n3 or n)


def check_transforms(sizes: SuiteSizes) -> List[CheckResult]:
    """Round trip and Parseval of the mixed transform on random real fields"""
    grid = _box_grid(sizes.transform_n)
    rng = np.random.default_rng(1)
    roundtrip = 0.0
    parseval = 0.0
    for parity in (Parity.COSINE, Parity.SINE):
        field = rng.standard_normal(grid.shape)
        s = forward_mixed(field, parity, grid)
        roundtrip = max(roundtrip, float(np.max(np.abs(inverse_mixed(s) - field)) / np.max(np.abs(field))))
        physical = grid.volume * float(np.mean(field ** 2))
        parseval = max(parseval, abs(weighted_energy(s) - physical) / physical)
    return [
        CheckResult('1-roundtrip', roundtrip, '<= 1e-12', roundtrip <= 1e-12),
        CheckResult('1-parseval', parseval, '<= 1e-12', parseval <= 1e-12),
    ]


def check_semigroup(sizes: SuiteSizes) -> List[CheckResult]:
    """Closed-form propagator against the matrix exponential, and S(t+s) = S(t)S(s)"""
    rng = np.random.default_rng(2)
    oracle_error = 0.0
    semigroup_error = 0.0
    for _ in range(sizes.semigroup_samples):
        xi = rng.standard_normal(3) * 3.0
        t, s = rng.uniform(0.0, 5.0, size=2)
        v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        closed = semigroup_closed_form(xi, t, v)
        oracle_error = max(oracle_error, float(np.max(np.abs(closed - semigroup_oracle(xi, t, v)))))
        composed = semigroup_closed_form(xi, t, semigroup_closed_form(xi, s, v))
        semigroup_error = max(semigroup_error,
                              float(np.max(np.abs(composed - semigroup_closed_form(xi, t + s, v)))))
    return [
        CheckResult('2-closed-form', oracle_error, '<= 1e-10', oracle_error <= 1e-10),
        CheckResult('2-semigroup', semigroup_error, '<= 1e-10', semigroup_error <= 1e-10),
    ]


def check_linear_energy(sizes: SuiteSizes, T: float = 5.0) -> List[CheckResult]:
    """|v(t)|^2/2 + int D = |v0|^2/2 with D integrated by panelled Gauss-Legendre"""
    grid = _box_grid(sizes.energy_n)
    state = random_spectrum(grid, a=1.0, k0=2.0, seed=3)
    cache = PropagatorCache(grid)
    nodes, weights = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(0.0, T, sizes.energy_panels + 1)
    e0 = energy_and_dissipation(state)[0]
    dissipated = 0.0
    worst = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        for x, w in zip(nodes, weights):
            dissipated += half * w * energy_and_dissipation(cache.apply(state, lo + half * (x + 1.0)))[1]
        residual = energy_and_dissipation(cache.apply(state, hi))[0] + dissipated - e0
        worst = max(worst, abs(residual) / e0)
    return [CheckResult('3-energy-identity', worst, '<= 1e-8', worst <= 1e-8)]


def check_leray(sizes: SuiteSizes) -> List[CheckResult]:
    """Projector against its written-out component form; idempotence"""
    grid = _box_grid(sizes.transform_n)
    rng = np.random.default_rng(4)
    stack = rng.standard_normal((4,) + grid.shape) + 1j * rng.standard_normal((4,) + grid.shape)
    terms = NonlinearTerms.from_stack(grid, stack)
    projected = leray_project(terms).stack()
    scale = float(np.max(np.abs(projected)))
    literal = float(np.max(np.abs(projected - leray_project_literal(terms).stack()))) / scale
    twice = leray_project(NonlinearTerms.from_stack(grid, projected)).stack()
    idempotence = float(np.max(np.abs(twice - projected))) / scale
    return [
        CheckResult('4-literal-form', literal, '<= 1e-13', literal <= 1e-13),
        CheckResult('4-idempotent', idempotence, '<= 1e-14', idempotence <= 1e-14),
    ]


def check_oracle_rates(sizes: SuiteSizes, sigma: float = 0.95) -> List[CheckResult]:
    """Fitted oracle exponents on [10, 1e4] against the guaranteed linear rates"""
    spec = QuadratureSpec(tol=sizes.oracle_tol)
    t_grid = np.geomspace(10.0, 1e4, sizes.oracle_times)
    full = RadialProfile(a=1.0, k0=1.0)
    table = oracle_table(full, sigma, t_grid, spec)
    l2 = fit_power_law(t_grid, table['all'].to_numpy()).exponent
    grad = fit_power_law(t_grid, table['grad_h_all'].to_numpy()).exponent
    heat = oracle_table(RadialProfile(a=1.0, k0=1.0, seeded=('u_perp',)), sigma, t_grid, spec)
    heat_exp = fit_power_law(t_grid, heat['u'].to_numpy()).exponent
    expected_heat = heat_only_exponent(1.0)
    l2_target = guaranteed_exponent('one', sigma) + 0.05
    grad_target = guaranteed_exponent('grad_h', sigma) + 0.05
    return [
        CheckResult('5-l2-rate', l2, f"<= {l2_target:.3f}", l2 <= l2_target),
        CheckResult('5-grad-h-rate', grad, f"<= {grad_target:.3f}", grad <= grad_target),
        CheckResult('5-heat-only', heat_exp, f"{expected_heat:.2f} +- 0.03",
                    abs(heat_exp - expected_heat) <= 0.03),
    ]


def check_conservation(sizes: SuiteSizes) -> List[CheckResult]:
    """Nonlinear run: energy balance, divergence, boundary traces, monotone energy"""
    n = sizes.conservation_n
    grid = _box_grid(n)
    state = generate_initial_data(InitialDataSpec(amplitude=1e-2, seed=5), grid)
    config = StepperConfig(dt=sizes.conservation_dt, T=sizes.conservation_T,
                           record_every=sizes.conservation_record_every)
    stepper = ExponentialStepper(grid, config)
    budget = EnergyBudget(cache=stepper.cache)
    divergence = [0.0]
    traces = [0.0]

    def recorder(step: int, t: float, current: MixedSpectralState) -> None:
        budget.record(current, t)
        divergence.append(divergence_residual(current))
        traces.append(boundary_trace_check(current).relative)

    stepper.run(state, recorder)
    balance = budget.balance_residual()
    increases = int(np.sum(np.diff(budget.energy) > 1e-12 * budget.energy[0]))
    return [
        CheckResult('6-energy-balance', balance, '<= 1e-4', balance <= 1e-4),
        CheckResult('6-divergence', max(divergence), '<= 1e-10', max(divergence) <= 1e-10),
        CheckResult('6-boundary-traces', max(traces), '<= 1e-9', max(traces) <= 1e-9),
        CheckResult('6-monotone', float(increases), '== 0 increases', increases == 0),
    ]


def check_integrators(sizes: SuiteSizes, T: float = 0.5) -> List[CheckResult]:
    """Duhamel solve against the stepper, and the stepper's convergence order"""
    grid = _box_grid(16)
    small = generate_initial_data(InitialDataSpec(amplitude=1e-2, seed=6), grid)
    duhamel = DuhamelSolver(grid, DuhamelConfig(T=T, K=sizes.duhamel_K)).solve(small).state
    stepped = ExponentialStepper(grid, StepperConfig(dt=T / 256, T=T)).run(small)
    difference = norm_l2(duhamel - stepped) / norm_l2(stepped)

    large = generate_initial_data(InitialDataSpec(amplitude=0.5, seed=6), grid)
    finals = [ExponentialStepper(grid, StepperConfig(dt=dt, T=T)).run(large) for dt in (0.02, 0.01, 0.005)]
    order = float(np.log2(norm_l2(finals[0] - finals[1]) / norm_l2(finals[1] - finals[2])))
    return [
        CheckResult('7-duhamel-vs-step', difference, '<= 1e-4', difference <= 1e-4),
        CheckResult('7-step-order', order, '2.0 +- 0.1', abs(order - 2.0) <= 0.1),
    ]


def check_rate_ordering(sizes: SuiteSizes, window: Tuple[float, float] = (5.0, 50.0)) -> List[CheckResult]:
    """grad_h u decays faster than u by about t^-1/2 on the pre-gap window"""
    grid = build_grid(16.0 * np.pi, sizes.ordering_n_h, 2.0 * np.pi, sizes.ordering_n3)
    state = generate_initial_data(InitialDataSpec(amplitude=1e-2, k0=2.0, seed=7), grid)
    series = NormSeries(0.95)
    if sizes.ordering_nonlinear:
        config = StepperConfig(dt=0.05, T=window[1], record_every=10)
        ExponentialStepper(grid, config).run(state, lambda step, t, current: series.record(current, t))
    else:
        cache = PropagatorCache(grid)
        for t in np.linspace(0.0, window[1], 101):
            series.record(cache.apply(state, float(t)), float(t))
    u_fit = fit_decay(series, 'u', window)
    grad_fit = fit_decay(series, 'grad_h_u', window)
    separation = u_fit.exponent - grad_fit.exponent
    r_squared = min(u_fit.r_squared, grad_fit.r_squared)
    return [
        CheckResult('8-rate-separation', separation, '0.5 +- 0.2', abs(separation - 0.5) <= 0.2),
        CheckResult('8-fit-r2', r_squared, 'reported', True),
    ]


def check_rate_gatekeeping(sizes: SuiteSizes) -> List[CheckResult]:
    """expected_rates accepts an admissible pair and rejects three boundary violations"""
    cases = [
        (0.95, 0.03, True),
        (0.9, 0.06, False),
        (0.95, 0.5 - 0.95 / 2.0 - 1e-3, False),
        (0.95, 0.95 / 8.0 - 1.0 / 16.0, False),
    ]
    correct = 0
    for sigma, delta, admissible in cases:
        try:
            expected_rates(sigma, delta)
            accepted = True
        except RateParameterError:
            accepted = False
        correct += accepted == admissible
    return [CheckResult('9-rate-gatekeeping', float(correct), f"== {len(cases)}", correct == len(cases))]


CHECKS: List[Callable[[SuiteSizes], List[CheckResult]]] = [
    check_transforms,
    check_semigroup,
    check_linear_energy,
    check_leray,
    check_oracle_rates,
    check_conservation,
    check_integrators,
    check_rate_ordering,
    check_rate_gatekeeping,
]


def run_checks(suite: str, out_dir: Optional[str] = None) -> pd.DataFrame:
    """
    Run every acceptance check at the sizes of suite

    Args:
        suite: 'fast' or 'full'
        out_dir: where to write check_report.csv, if given

    Returns:
        DataFrame with columns id, measured, target, pass, seconds
    """
    if suite not in SUITE_SIZES:
        raise ConfigError(f"unknown check suite '{suite}'; choose from {list(CHECK_SUITES)}", field='suite')
    sizes = SUITE_SIZES[suite]
    results: List[CheckResult] = []
    for check in CHECKS:
        started = time.perf_counter()
        try:
            batch = check(sizes)
        except ArithmeticError as e:
            logger.error(f"❌ Error in {check.__name__}: {str(e)}")
            batch = [CheckResult(check.__name__, float('nan'), 'completes', False)]
        elapsed = time.perf_counter() - started
        for result in batch:
            result.seconds = elapsed
            results.append(result)
            logger.info(result.line())

    report = pd.DataFrame([{'id': r.id, 'measured': r.measured, 'target': r.target,
                            'pass': r.passed, 'seconds': r.seconds} for r in results])
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        report.to_csv(os.path.join(out_dir, 'check_report.csv'), index=False, float_format='%.17g')
    return report
