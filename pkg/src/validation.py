"""
Validation Module for the Half-Space Boussinesq Simulator

Checks run configurations before anything is built and checks generated or
evolved states against the structural constraints of the state space.
"""

import logging
import math
from typing import Any, Dict, List, Optional, Tuple

from errors import BoussinesqError
from freq_oracle import SEEDS
from initial_data import ANALYTIC_PRESETS, DATA_MODES, SMALL_DATA_THRESHOLD
from nonlinear import boundary_trace_check
from run_config import DEFAULTS, RUN_MODES
from spectral_core import MixedSpectralState, divergence_residual, has_mean_content, hermitian_defect

logger = logging.getLogger(__name__)

# Tolerances for validate_state
DIVERGENCE_TOL = 1e-10
TRACE_TOL = 1e-9
HERMITIAN_TOL = 1e-10


class ConfigValidator:
    """Handles validation of run configuration values"""

    def __init__(self):
        """Initialize the validator with validation rules"""

        # Valid ranges for numerical fields: (min, max, min inclusive)
        self.numerical_ranges = {
            'run.T': (0.0, None, True),
            'run.dt': (0.0, None, False),
            'run.record_every': (1, None, True),
            'run.cfl_safety': (0.0, None, False),
            'run.workers': (1, None, True),
            'grid.L_h': (0.0, None, False),
            'grid.L3': (0.0, None, False),
            'grid.dealias_fraction': (0.0, 1.0, False),
            'physics.nu': (0.0, None, False),
            'physics.kappa': (0.0, None, False),
            'data.k0': (0.0, None, False),
            'data.amplitude': (0.0, None, True),
            'duhamel.T': (0.0, None, False),
            'duhamel.K': (3, None, True),
            'duhamel.picard_iters': (1, None, True),
            'duhamel.tol': (0.0, None, False),
            'oracle.k0': (0.0, None, False),
            'oracle.t_min': (0.0, None, False),
            'oracle.n_times': (12, None, True),
            'oracle.tol': (0.0, 1.0, False),
        }

        self.power_of_two_fields = ['grid.N_h', 'grid.N3']

        logger.info("✅ ConfigValidator initialized")

    def validate_config(self, values: Dict[str, Any]) -> Dict[str, Any]:
        """
        Validate merged configuration values

        Args:
            values: dotted key -> typed value

        Returns:
            Dictionary with validation results; 'fields' parallels 'errors'
        """
        errors: List[Tuple[str, str]] = []
        warnings: List[str] = []

        unknown = [k for k in values if k not in DEFAULTS]
        for key in unknown:
            errors.append((key, "unknown key"))

        for key, value in values.items():
            if key in DEFAULTS and type(value) is not type(DEFAULTS[key]):
                if not (isinstance(DEFAULTS[key], float) and isinstance(value, int) and not isinstance(value, bool)):
                    errors.append((key, f"expected {type(DEFAULTS[key]).__name__}, got {type(value).__name__}"))

        if not errors:
            errors.extend(self._validate_ranges(values))
            errors.extend(self._validate_choices(values))
            warnings.extend(self._collect_warnings(values))

        return {
            'valid': len(errors) == 0,
            'errors': [f"{key}: {message}" for key, message in errors],
            'fields': [key for key, _ in errors],
            'warnings': warnings,
        }

    def _validate_ranges(self, values: Dict[str, Any]) -> List[Tuple[str, str]]:
        errors = []
        for key, (low, high, inclusive) in self.numerical_ranges.items():
            value = values[key]
            if low is not None and (value < low or (value == low and not inclusive)):
                errors.append((key, f"value {value} must be {'>=' if inclusive else '>'} {low}"))
            if high is not None and value > high:
                errors.append((key, f"value {value} must be <= {high}"))

        for key in self.power_of_two_fields:
            n = values[key]
            if n < 8 or n & (n - 1):
                errors.append((key, f"value {n} must be a power of two >= 8"))

        if not 0.0 < values['physics.sigma'] < 1.0:
            errors.append(('physics.sigma', f"value {values['physics.sigma']} must lie in (0, 1)"))
        if values['oracle.t_max'] <= values['oracle.t_min']:
            errors.append(('oracle.t_max', "must exceed oracle.t_min"))
        if values['fit.t1'] > values['fit.t0'] and values['fit.t0'] < 0:
            errors.append(('fit.t0', "fit window must start at t >= 0"))
        return errors

    def _validate_choices(self, values: Dict[str, Any]) -> List[Tuple[str, str]]:
        errors = []
        if values['run.mode'] not in RUN_MODES:
            errors.append(('run.mode', f"'{values['run.mode']}' is not one of {list(RUN_MODES)}"))
        if values['data.mode'] not in DATA_MODES:
            errors.append(('data.mode', f"'{values['data.mode']}' is not one of {list(DATA_MODES)}"))
        if values['data.mode'] == 'analytic_preset' and values['data.preset'] not in ANALYTIC_PRESETS:
            errors.append(('data.preset', f"'{values['data.preset']}' is not one of {sorted(ANALYTIC_PRESETS)}"))
        seeded = [s.strip() for s in values['oracle.seeded'].split(',') if s.strip()]
        bad = [s for s in seeded if s not in SEEDS]
        if bad:
            errors.append(('oracle.seeded', f"unknown components {bad}; choose from {list(SEEDS)}"))
        elif not seeded:
            errors.append(('oracle.seeded', "at least one component must be seeded"))

        if values['run.mode'] == 'oracle':
            a, sigma = values['oracle.a'], values['physics.sigma']
            if not a > sigma - 1.0:
                errors.append(('oracle.a', f"value {a} must exceed sigma - 1 = {sigma - 1.0:g}"))
            elif 'u3' in seeded and not a > sigma:
                errors.append(('oracle.a', f"value {a} must exceed sigma = {sigma:g} when u3 is seeded"))
        return errors

    def _collect_warnings(self, values: Dict[str, Any]) -> List[str]:
        warnings = []
        if values['data.amplitude'] > SMALL_DATA_THRESHOLD:
            warnings.append(f"data.amplitude {values['data.amplitude']} exceeds the small-data threshold "
                            f"{SMALL_DATA_THRESHOLD}; decay guarantees assume small data")
        if values['run.T'] > 0 and values['run.dt'] > values['run.T']:
            warnings.append("run.dt exceeds run.T; the run takes at most one step")
        gap_time = (values["grid.L_h"] / (2.0 * math.pi)) ** 2
        if values['run.mode'] != 'oracle' and values['fit.t1'] > gap_time:
            warnings.append(f"fit.t1={values['fit.t1']} is beyond (L_h/2pi)^2={gap_time:.3g}; "
                            "the spectral gap makes late-time decay exponential")
        if values['physics.nu'] != values['physics.kappa']:
            warnings.append("nu != kappa: the linear propagator falls back to per-mode matrix exponentials")
        return warnings


class StateValidator:
    """Checks states against divergence, boundary, reality and mean-mode constraints"""

    def __init__(self, divergence_tol: float = DIVERGENCE_TOL, trace_tol: float = TRACE_TOL):
        self.divergence_tol = divergence_tol
        self.trace_tol = trace_tol
        logger.info("✅ StateValidator initialized")

    def validate_state(self, state: MixedSpectralState, label: Optional[str] = None) -> Dict[str, Any]:
        """
        Validate one state

        Args:
            state: state to check
            label: prefix for messages

        Returns:
            Dictionary with validation results and the measured quantities
        """
        prefix = f"{label}: " if label else ""
        errors = []
        warnings = []
        try:
            divergence = divergence_residual(state)
            traces = boundary_trace_check(state)
            hermitian = max(hermitian_defect(c.coeffs) for c in state.components)
            scale = max(float(abs(c.coeffs).max()) for c in state.components)
        except BoussinesqError as e:
            logger.error(f"❌ Error in validate_state: {str(e)}")
            return {'valid': False, 'errors': [f"{prefix}{str(e)}"], 'warnings': []}

        if divergence > self.divergence_tol:
            errors.append(f"{prefix}divergence residual {divergence:.3e} exceeds {self.divergence_tol:.1e}")
        if traces.relative > self.trace_tol:
            errors.append(f"{prefix}boundary trace {traces.relative:.3e} exceeds {self.trace_tol:.1e}")
        if scale > 0 and hermitian > HERMITIAN_TOL * scale:
            errors.append(f"{prefix}coefficients are not Hermitian (defect {hermitian:.3e})")
        if any(has_mean_content(c) for c in state.components):
            errors.append(f"{prefix}state carries horizontal-mean content")
        if scale == 0:
            warnings.append(f"{prefix}state is identically zero")

        return {
            'valid': len(errors) == 0,
            'errors': errors,
            'warnings': warnings,
            'divergence_residual': divergence,
            'boundary_trace': traces.relative,
            'hermitian_defect': hermitian,
        }
