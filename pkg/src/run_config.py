"""
Run Configuration Module

Constants, defaults, named experiment presets and the loader for the flat
dotted key=value run files:

    # comment
    grid.N_h=64
    physics.sigma=0.95

Precedence: CLI overrides > file values > preset values > DEFAULTS.
"""

import io
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
from dotenv.parser import parse_stream

from errors import ConfigError
from freq_oracle import QuadratureSpec, RadialProfile
from initial_data import InitialDataSpec
from nonlinear import DuhamelConfig, StepperConfig
from spectral_core import GridSpec, build_grid

logger = logging.getLogger(__name__)

CONFIG_FORMAT_VERSION = 1

RUN_MODES = ('nonlinear', 'linear', 'duhamel', 'oracle')

DEFAULTS: Dict[str, Any] = {
    'run.mode': 'nonlinear',
    'run.preset': '',
    'run.T': 1.0,
    'run.dt': 1e-2,
    'run.record_every': 10,
    'run.dealias': True,
    'run.cfl_safety': 0.5,
    'run.workers': 1,
    'grid.L_h': 2.0 * math.pi,
    'grid.N_h': 16,
    'grid.L3': math.pi,
    'grid.N3': 16,
    'grid.dealias_fraction': 2.0 / 3.0,
    'physics.nu': 1.0,
    'physics.kappa': 1.0,
    'physics.sigma': 0.95,
    'physics.delta': 0.03,
    'data.mode': 'random_spectrum',
    'data.preset': 'single-mode',
    'data.a': 1.0,
    'data.k0': 4.0,
    'data.amplitude': 1e-2,
    'data.seed': 0,
    'duhamel.T': 0.5,
    'duhamel.K': 65,
    'duhamel.picard_iters': 50,
    'duhamel.tol': 1e-12,
    'oracle.a': 1.0,
    'oracle.k0': 1.0,
    'oracle.seeded': 'u_perp,u3,theta',
    'oracle.t_min': 10.0,
    'oracle.t_max': 1e4,
    'oracle.n_times': 25,
    'oracle.tol': 1e-10,
    # t1 <= t0 selects the full recorded range
    'fit.t0': 0.0,
    'fit.t1': 0.0,
    'output.dir': 'results',
    'output.plots': True,
}

EXPERIMENT_PRESETS: Dict[str, Dict[str, Any]] = {
    'linear-heat-only': {
        'run.mode': 'oracle',
        'oracle.seeded': 'u_perp',
        'oracle.a': 1.0,
        'oracle.k0': 1.0,
    },
    'oracle-full-profile': {
        'run.mode': 'oracle',
        'oracle.seeded': 'u_perp,u3,theta',
        'oracle.a': 1.0,
        'oracle.k0': 1.0,
    },
    'nonlinear-smoke': {
        'run.mode': 'nonlinear',
        'grid.N_h': 16,
        'grid.N3': 16,
        'run.T': 1.0,
        'run.dt': 1e-2,
        'run.record_every': 5,
        'data.amplitude': 1e-2,
    },
    'linear-decay': {
        'run.mode': 'linear',
        'grid.L_h': 16.0 * math.pi,
        'grid.N_h': 64,
        'grid.L3': 2.0 * math.pi,
        'grid.N3': 16,
        'data.k0': 2.0,
        'run.T': 50.0,
        'run.dt': 0.5,
        'run.record_every': 1,
        'fit.t0': 5.0,
        'fit.t1': 50.0,
    },
}

_TRUE = {'1', 'true', 'yes', 'on'}
_FALSE = {'0', 'false', 'no', 'off'}


def coerce_value(key: str, raw: Any, line: Optional[int] = None) -> Any:
    """Convert a raw value to the type of DEFAULTS[key]"""
    if key not in DEFAULTS:
        raise ConfigError("unknown key", field=key, line=line)
    default = DEFAULTS[key]
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    try:
        if isinstance(default, bool):
            lowered = text.lower()
            if lowered in _TRUE:
                return True
            if lowered in _FALSE:
                return False
            raise ValueError(f"expected a boolean, got '{raw}'")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError as e:
        raise ConfigError(f"ill-typed value: {e}", field=key, line=line) from e
    return text


def parse_config_text(text: str) -> Tuple[Dict[str, Any], Dict[str, int]]:
    """
    Parse dotted key=value text

    Args:
        text: file contents

    Returns:
        (values, line numbers) keyed by dotted name
    """
    values: Dict[str, Any] = {}
    lines: Dict[str, int] = {}
    for binding in parse_stream(io.StringIO(text)):
        line = binding.original.line
        if binding.error:
            raise ConfigError(f"malformed line '{binding.original.string.strip()}'", line=line)
        if binding.key is None:
            continue
        if binding.value is None:
            raise ConfigError("missing value", field=binding.key, line=line)
        values[binding.key] = coerce_value(binding.key, binding.value, line)
        lines[binding.key] = line
    return values, lines


def load_config_values(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None
                       ) -> Tuple[Dict[str, Any], Dict[str, int]]:
    """
    Merge DEFAULTS, the selected preset, the file at path and overrides

    Returns:
        (merged values, line numbers of file-provided keys)
    """
    file_values: Dict[str, Any] = {}
    lines: Dict[str, int] = {}
    if path is not None:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        with open(path, 'r', encoding='utf-8') as f:
            file_values, lines = parse_config_text(f.read())
        logger.info(f"✅ Loaded {len(file_values)} config values from {path}")

    overrides = {k: coerce_value(k, v) for k, v in (overrides or {}).items()}
    preset = overrides.get('run.preset', file_values.get('run.preset', DEFAULTS['run.preset']))
    if preset and preset not in EXPERIMENT_PRESETS:
        raise ConfigError(f"unknown experiment preset '{preset}'; choose from {sorted(EXPERIMENT_PRESETS)}",
                          field='run.preset', line=lines.get('run.preset'))

    values = dict(DEFAULTS)
    values.update(EXPERIMENT_PRESETS.get(preset, {}))
    values.update(file_values)
    values.update(overrides)
    return values, lines


@dataclass
class RunConfig:
    """Everything one run needs, built from validated dotted values"""

    mode: str
    grid: GridSpec
    nu: float
    kappa: float
    sigma: float
    delta: float
    stepper: StepperConfig
    duhamel: DuhamelConfig
    data: InitialDataSpec
    profile: RadialProfile
    quadrature: QuadratureSpec
    oracle_times: np.ndarray
    fit_window: Optional[Tuple[float, float]]
    output_dir: str
    plots: bool = True
    workers: int = 1
    preset: str = ''
    values: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_values(cls, values: Dict[str, Any]) -> 'RunConfig':
        v = values
        grid = build_grid(v['grid.L_h'], v['grid.N_h'], v['grid.L3'], v['grid.N3'], v['grid.dealias_fraction'])
        stepper = StepperConfig(dt=v['run.dt'], T=v['run.T'], dealias=v['run.dealias'],
                                record_every=v['run.record_every'], cfl_safety=v['run.cfl_safety'])
        duhamel = DuhamelConfig(T=v['duhamel.T'], K=v['duhamel.K'], picard_iters=v['duhamel.picard_iters'],
                                tol=v['duhamel.tol'], dealias=v['run.dealias'])
        data = InitialDataSpec(mode=v['data.mode'], a=v['data.a'], k0=v['data.k0'],
                               amplitude=v['data.amplitude'], seed=v['data.seed'], preset=v['data.preset'])
        seeded = tuple(s.strip() for s in v['oracle.seeded'].split(',') if s.strip())
        profile = RadialProfile(a=v['oracle.a'], k0=v['oracle.k0'], seeded=seeded, nu=v['physics.nu'])
        times = np.geomspace(v['oracle.t_min'], v['oracle.t_max'], v['oracle.n_times'])
        window = (v['fit.t0'], v['fit.t1']) if v['fit.t1'] > v['fit.t0'] else None
        return cls(
            mode=v['run.mode'], grid=grid, nu=v['physics.nu'], kappa=v['physics.kappa'],
            sigma=v['physics.sigma'], delta=v['physics.delta'], stepper=stepper, duhamel=duhamel,
            data=data, profile=profile, quadrature=QuadratureSpec(tol=v['oracle.tol']),
            oracle_times=times, fit_window=window, output_dir=v['output.dir'], plots=v['output.plots'],
            workers=v['run.workers'], preset=v['run.preset'], values=dict(values),
        )
