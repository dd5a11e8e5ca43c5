import logging
import sys
from argparse import Action, ArgumentParser, Namespace
from pathlib import Path

from asa import __version__
from asa.exceptions import (
    AsaException,
    ExpressionSyntaxError,
    ParabolicityException,
    ProblemConfigException,
    UnknownIdentifierError,
)
from asa.helpers import dump_json, write_text
from asa.model import load_problem
from asa.objects.problem import ProblemSpec

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NON_HYPERBOLIC = 2
EXIT_INCONSISTENT = 3

CONFIG_ERRORS = (
    ProblemConfigException,
    ExpressionSyntaxError,
    UnknownIdentifierError,
    ParabolicityException,
)
"""Errors caused by the problem definition rather than by the numerics."""


def format_help(choices: dict[str, str], opt_help: str) -> str:
    """Generate help text for argparse choices.

    :param choices: Dictionary of choices {choice: help}
    :param opt_help: Help text for the option:
    :return: Help text for argparse choices.
    """
    h = f"{opt_help} (default: %(default)s)\nchoices:\n"

    for fmt, key in choices.items():
        h += f"  {fmt}: {key}\n"

    return h


_log_levels = {
    0: logging.WARNING,
    1: logging.INFO,
    2: logging.DEBUG,
}


class CountAction(Action):
    """Modified version of argparse._CountAction to output better help."""

    def __init__(
        self,
        option_strings,
        dest,
        default=None,
        required=False,
        help=None,
        max_count=None,
    ):
        super().__init__(
            option_strings=option_strings,
            dest=dest,
            nargs=0,
            default=default,
            required=required,
            help=help,
        )
        self.max_count = max_count

    def __call__(self, parser, namespace, values, option_string=None):
        count = getattr(namespace, self.dest, None)
        if count is None:
            count = 0
        if self.max_count:
            count = min(count, self.max_count)
        setattr(namespace, self.dest, count + 1)

    def format_usage(self):
        option_str = self.option_strings[0]
        if self.max_count is None:
            return option_str
        letter = self.option_strings[0][1]
        usages = [f"-{letter * i}" for i in range(1, self.max_count + 1)]
        return "/".join(usages)


def setup_logging(verbosity: int, log_path: str | None) -> None:
    log_level = _log_levels.get(verbosity, logging.DEBUG)
    if log_path is not None:
        logging.basicConfig(level=log_level, filename=log_path)
    else:
        logging.basicConfig(level=log_level)


def add_common_arguments(parser: ArgumentParser, default_out: str) -> None:
    """Arguments shared by every command: problem, overrides, output, threads and logging."""
    parser.add_argument(
        "-c", "--config", type=str, required=True, help="problem config file (INI)"
    )
    parser.add_argument(
        "-o",
        "--out",
        type=str,
        default=default_out,
        help="output directory (default: %(default)s)",
    )
    parser.add_argument(
        "-t",
        "--threads",
        type=int,
        default=1,
        help="worker threads for parallel maps (default: %(default)s)",
    )
    parser.add_argument(
        "-s",
        "--seed",
        type=int,
        default=None,
        help="random seed overriding [numerics] seed",
    )
    parser.add_argument(
        "--lambda",
        type=float,
        default=None,
        dest="lmbda",
        metavar="X",
        help="value of lambda overriding [problem] lambda",
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action=CountAction,
        help="increase output verbosity (-v=INFO, -vv=DEBUG)",
        dest="verbosity",
        default=0,
        max_count=2,
    )
    parser.add_argument(
        "-l",
        "--log-file",
        type=str,
        help="write log to this file and suppress console output",
    )


def fail(code: int, message: str):
    """Print an error message to stderr and exit with ``code``."""
    sys.stderr.write(f"asa: error: {message}\n")
    exit(code)


def load_spec(args: Namespace) -> ProblemSpec:
    """
    Load the problem and apply the ``--lambda`` and ``--seed`` overrides.

    Exits with code 1 on configuration errors.
    """
    if args.threads < 1:
        fail(EXIT_CONFIG, f"--threads must be at least 1, got {args.threads}")
    try:
        spec = load_problem(args.config)
        if args.lmbda is not None:
            spec = spec.with_lambda(args.lmbda)
        if args.seed is not None:
            spec = spec.with_numerics(seed=args.seed)
    except CONFIG_ERRORS as ex:
        fail(EXIT_CONFIG, str(ex))
    except AsaException as ex:
        fail(EXIT_CONFIG, f"{ex.__class__.__name__}: {ex}")
    log.info(f"Problem {spec!r}, hash {spec.spec_hash()}")
    return spec


def write_manifest(
    out: Path, command: str, spec: ProblemSpec, dt: float | None = None
) -> Path:
    """Run manifest with the problem hash, seed, grid size and time step."""
    manifest = {
        "command": command,
        "version": __version__,
        "spec_hash": spec.spec_hash(),
        "seed": spec.numerics.seed,
        "grid_n": spec.numerics.grid_n,
        "dt": dt,
    }
    return write_text(out / "manifest.json", dump_json(manifest))
