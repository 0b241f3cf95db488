"""
Command-Line Application

Parser factory and the main() dispatcher with the exit-code contract:
0 success, 1 file or format error, 2 usage or parameter error, 3 failed check.
"""

import argparse
import logging
import sys
from typing import Optional

from .. import __version__
from ..config import config, known_keys, load_run_config, parse_coeff, parse_dims, parse_waves
from ..formats.raster import VERSION as RASTER_VERSION
from ..utils.errors import CheckFailed, ConvergenceError, FormatError, ParameterError, UsageError
from .commands import COMMANDS

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_IO = 1
EXIT_USAGE = 2
EXIT_CHECK = 3

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def _add_bank_options(p: argparse.ArgumentParser) -> None:
    p.add_argument('--directions', help="icosa6 or half_circle:K (default by dimension)")
    p.add_argument('--kind', choices=['quadrature', 'gabor'])
    p.add_argument('--rho0', type=float, help="centre frequency in radians/sample")
    p.add_argument('--bandwidth', type=float, help="radial bandwidth in octaves")
    p.add_argument('--exponent', type=int, help="angular cosine power p")
    p.add_argument('--response-mode', dest='response_mode', choices=['power', 'magnitude'])
    p.add_argument('--upsample', action=argparse.BooleanOptionalAction, default=None,
                   help="upsample 2x before any squaring step")


def _add_format_option(p: argparse.ArgumentParser) -> None:
    p.add_argument('--format', choices=['csv', 'markdown'], default='csv')


def create_parser() -> argparse.ArgumentParser:
    """Build the argument parser for every subcommand."""
    parser = argparse.ArgumentParser(
        prog='stf',
        description="Structure tensors from filter responses and gradients",
    )
    parser.add_argument('--version', action='version',
                        version=f"%(prog)s {__version__} (STF1 raster v{RASTER_VERSION}, PGM P5, PPM P6)")
    parser.add_argument('--config', help="key=value run configuration file")
    parser.add_argument('--threads', type=int, help="worker threads for the filter bank")
    parser.add_argument('--log-level', dest='log_level', help="DEBUG, INFO, WARNING or ERROR")
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('repro-example', help="T_GK vs T_BG on the indefiniteness counterexample")
    p.add_argument('--coeff', type=parse_coeff, help="alpha,beta (default 1.25,0.25)")
    _add_format_option(p)

    p = sub.add_parser('synth', help="write a synthetic image")
    p.add_argument('-o', '--output', required=True, help="raster path, or .pgm for a graymap")
    p.add_argument('--dims', type=parse_dims, help="e.g. 64x64")
    p.add_argument('--wave', dest='wave', action='append',
                   help="DIRECTION:FREQ[:PROFILE[:AMP[:PHASE]]], repeatable")
    p.add_argument('--periodic', action=argparse.BooleanOptionalAction, default=None)
    p.add_argument('--snap', action=argparse.BooleanOptionalAction, default=None,
                   help="move periodic waves to the nearest DFT bin")
    p.add_argument('--noise', type=float, help="noise standard deviation")
    p.add_argument('--seed', type=int)

    p = sub.add_parser('bank', help="filter an image with a directional bank")
    p.add_argument('input', help="raster or .pgm image")
    p.add_argument('-o', '--output', required=True, help="response raster")
    _add_bank_options(p)
    p.add_argument('--dump-transfer', dest='dump_transfer', help="write the transfer functions as a raster")
    p.add_argument('--dump-directions', dest='dump_directions', help="write the directions as CSV")

    p = sub.add_parser('tensor', help="build a tensor field")
    p.add_argument('input', help="response raster (gk, bg) or image (gradient, spectral)")
    p.add_argument('-o', '--output', required=True, help="tensor raster")
    p.add_argument('--construction', choices=['gk', 'bg', 'gradient', 'spectral'])
    p.add_argument('--directions', help="direction set of the responses")
    p.add_argument('--coeff', type=parse_coeff, help="alpha,beta frame coefficients for gk")
    p.add_argument('--inner-scale', dest='inner_scale', type=float)
    p.add_argument('--outer-scale', dest='outer_scale', type=float)
    p.add_argument('--boundary', choices=['periodic', 'reflect'])
    p.add_argument('--derivative', choices=['gaussian', 'spectral'])
    p.add_argument('--upsample', action=argparse.BooleanOptionalAction, default=None)

    p = sub.add_parser('analyze', help="orientation, certainty and rank of a tensor field")
    p.add_argument('input', help="tensor raster")
    p.add_argument('-o', '--output', help="orientation raster (angle, certainty)")
    p.add_argument('--ppm', help="colour-coded orientation image")
    p.add_argument('--rel-tol', dest='rel_tol', type=float)
    p.add_argument('--truth-angle', dest='truth_angle', type=float, help="known orientation in degrees")
    p.add_argument('--margin', type=int, help="pixels excluded at every edge for error statistics")
    p.add_argument('--max-error', dest='max_error', type=float, help="mean error bound in degrees for --check")
    p.add_argument('--check', action='store_true', help="exit 3 unless the mean error is below --max-error")
    _add_format_option(p)

    p = sub.add_parser('compare', help="indefiniteness of gk against bg on identical responses")
    p.add_argument('input', nargs='?', help="raster or .pgm image")
    p.add_argument('--counterexample', type=parse_dims, metavar='DIMS',
                   help="use uniform counterexample responses on a grid instead of an image")
    _add_bank_options(p)
    p.add_argument('--coeff', type=parse_coeff)
    p.add_argument('--min-eig-prefix', dest='min_eig_prefix', help="write PREFIX-gk.stf and PREFIX-bg.stf")
    p.add_argument('--report', help="indefiniteness report CSV with histograms")
    _add_format_option(p)

    return parser


def _overrides(args: argparse.Namespace) -> dict:
    values = {key: getattr(args, key) for key in known_keys() if hasattr(args, key)}
    if getattr(args, 'wave', None):
        values['waves'] = parse_waves(';'.join(args.wave))
    return values


def run(argv: Optional[list] = None) -> int:
    """Parse, configure logging, dispatch. Raises toolkit errors."""
    args = create_parser().parse_args(argv)

    level = (args.log_level or config.LOG_LEVEL).upper()
    if not isinstance(logging.getLevelName(level), int):
        raise UsageError(f"unknown log level {level!r}")
    logging.basicConfig(level=getattr(logging, level), format=LOG_FORMAT, stream=sys.stderr)

    run_config = load_run_config(args.config, _overrides(args))
    logger.debug(f"Running {args.command} with {run_config}")
    return COMMANDS[args.command](args, run_config)


def main(argv: Optional[list] = None) -> int:
    """Entry point returning the process exit code."""
    try:
        return run(argv)
    except SystemExit as e:
        # argparse exits 0 for --help/--version and 2 for bad flags
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    except (UsageError, ParameterError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except CheckFailed as e:
        print(f"check failed: {e}", file=sys.stderr)
        return EXIT_CHECK
    except ConvergenceError as e:
        logger.error(f"Eigensolver failed: {e}")
        return EXIT_IO
