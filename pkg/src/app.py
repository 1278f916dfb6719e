"""
Half-Space Boussinesq Simulator - Command Line Interface

Subcommands:
    simulate   nonlinear run with the exponential integrator
    linear     linear-only run with the exact semigroup
    duhamel    Duhamel-formula solve checked against the stepper
    oracle     continuous-frequency decay rates
    gen-data   write the configured initial state without evolving it
    check      acceptance check suites (fast or full)

Exit codes: 0 success, 1 numerical failure or I/O error, 2 usage or
configuration error.
"""

import argparse
import logging
import os
import sys
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from errors import BoussinesqError, ConfigError
from experiments import CHECK_SUITES, generate_data, run_checks, run_experiment
from run_config import RunConfig, load_config_values
from validation import ConfigValidator

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_USAGE = 2

COMMAND_MODES = {
    'simulate': 'nonlinear',
    'linear': 'linear',
    'duhamel': 'duhamel',
    'oracle': 'oracle',
    'gen-data': None,
}


def configure_logging() -> None:
    """Log level from LOG_LEVEL, optionally set in a .env file"""
    load_dotenv()
    level = os.getenv('LOG_LEVEL', 'INFO').upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='boussinesq-halfspace',
                                     description='Anisotropic Boussinesq perturbation simulator on the half-space')
    sub = parser.add_subparsers(dest='command', required=True)

    helps = {
        'simulate': 'Nonlinear run; writes norms, diagnostics and the final state',
        'linear': 'Linear-only run with the exact propagator',
        'duhamel': 'Picard solve of the Duhamel formula up to duhamel.T, cross-checked against the stepper',
        'oracle': 'Continuous-frequency norms and decay fits',
        'gen-data': 'Write the initial state and its norms',
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument('--config', help='Run file with dotted key=value lines')
        p.add_argument('--out', help='Output directory (overrides output.dir)')
        p.add_argument('--seed', type=int, help='Initial-data seed (overrides data.seed)')
        p.add_argument('--preset', help='Experiment preset (overrides run.preset)')
        p.add_argument('--set', dest='overrides', action='append', default=[], metavar='KEY=VALUE',
                       help='Override one configuration key; may be repeated')

    pc = sub.add_parser('check', help='Run the acceptance checks')
    pc.add_argument('--suite', default='fast', help=f"One of {', '.join(CHECK_SUITES)}")
    pc.add_argument('--out', help='Directory for check_report.csv')
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    for item in args.overrides:
        key, sep, value = item.partition('=')
        if not sep or not key.strip():
            raise ConfigError(f"override '{item}' is not KEY=VALUE")
        overrides[key.strip()] = value
    if args.preset is not None:
        overrides['run.preset'] = args.preset
    if args.seed is not None:
        overrides['data.seed'] = args.seed
    if args.out is not None:
        overrides['output.dir'] = args.out
    return overrides


def load_run_config(args: argparse.Namespace) -> RunConfig:
    """
    Merge defaults, preset, file and flags, validate, and build the RunConfig

    Args:
        args: parsed command line of a run subcommand

    Returns:
        RunConfig ready for run_experiment
    """
    values, lines = load_config_values(args.config, _overrides(args))
    mode = COMMAND_MODES[args.command]
    if mode is not None:
        values['run.mode'] = mode

    result = ConfigValidator().validate_config(values)
    for warning in result['warnings']:
        logger.warning(f"⚠️ {warning}")
    if not result['valid']:
        field = result['fields'][0]
        raise ConfigError('; '.join(result['errors']), line=lines.get(field))
    try:
        return RunConfig.from_values(values)
    except ValueError as e:
        raise ConfigError(str(e)) from e


def run_command(args: argparse.Namespace) -> int:
    if args.command == 'check':
        report = run_checks(args.suite, args.out)
        for row in report.to_dict('records'):
            print(f"{row['id']}\t{row['measured']:.6g}\t{row['target']}\t{'PASS' if row['pass'] else 'FAIL'}")
        return EXIT_OK if bool(report['pass'].all()) else EXIT_NUMERICAL

    config = load_run_config(args)
    if args.command == 'gen-data':
        generate_data(config)
    else:
        summary = run_experiment(config)
        logger.info(f"✅ Artifacts written to {config.output_dir} ({summary['mode']})")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Parse argv, run the command and map failures to exit codes"""
    configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        return run_command(args)
    except ConfigError as e:
        logger.error(f"❌ Configuration error: {str(e)}")
        return EXIT_USAGE
    except BoussinesqError as e:
        logger.error(f"❌ Numerical failure: {str(e)}")
        return EXIT_NUMERICAL
    except OSError as e:
        logger.error(f"❌ I/O error: {str(e)}")
        return EXIT_NUMERICAL


if __name__ == '__main__':
    sys.exit(main())
