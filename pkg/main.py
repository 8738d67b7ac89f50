import argparse
import sys
from typing import Dict, Any, List, Optional

from config import Config
from services.config_parser import COMMANDS, RunConfigParser
from services.runner import EXIT_CONFIG_ERROR, run
from utils.errors import ConfigError
from utils.logger import get_logger, set_level

logger = get_logger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='fieldq',
        description='Quantized fields in absorbing dielectrics: Langevin and Fano routes, '
                    'spectral densities and zero-point energy checks')
    parser.add_argument('command', nargs='?', choices=COMMANDS,
                        help='what to compute (default: the config file value, else verify-all)')
    parser.add_argument('--config', metavar='PATH', help='run configuration (.ini/.cfg/.yaml/.yml/.json)')
    parser.add_argument('--out', metavar='DIR', help=f'output directory (default {Config.OUTPUT_DIRECTORY})')
    parser.add_argument('--omega-min', type=float, help='lowest frequency of the output grid')
    parser.add_argument('--omega-max', type=float, help='highest frequency of the output grid')
    parser.add_argument('--points', type=int, help='number of grid points')
    parser.add_argument('--tail-cut', type=float, help='upper limit before the analytic tail')
    parser.add_argument('--no-shift', action='store_true', help='drop the cut-off frequency shift')
    parser.add_argument('--n-modes', type=int, help='reservoir modes for exact diagonalization')
    parser.add_argument('--omega-max-bath', type=float, help='upper edge of the discretized reservoir')
    parser.add_argument('--temperature', type=float, help='temperature for medium and oscillator')
    parser.add_argument('--verbose', '-v', action='store_true', help='debug logging')
    return parser


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Dict[str, Any]]:
    """Map command-line flags onto config sections; unset flags stay None and are ignored"""
    overrides = {
        'run': {'output_dir': args.out},
        'grid': {
            'omega_min': args.omega_min,
            'omega_max': args.omega_max,
            'points': args.points,
            'n_modes': args.n_modes,
            'omega_max_bath': args.omega_max_bath,
        },
        'quadrature': {'tail_cut': args.tail_cut},
        'medium': {'temperature': args.temperature},
        'oscillator': {'temperature': args.temperature},
    }
    if args.no_shift:
        overrides['oscillator']['include_shift'] = False
    return {section: values for section, values in overrides.items()
            if any(v is not None for v in values.values())}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    if args.verbose:
        set_level('DEBUG')

    try:
        config = RunConfigParser().load(args.config, overrides_from_args(args), command=args.command)
    except ConfigError as e:
        logger.error(f"Invalid configuration: {e}")
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    return run(config)


if __name__ == "__main__":
    sys.exit(main())
