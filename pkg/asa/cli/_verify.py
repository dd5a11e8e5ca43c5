import argparse
import math
import sys
import time
from pathlib import Path

from asa.checks import ALIASES, VerificationContext, resolve_suites, run_suites
from asa.cli._util import (
    EXIT_CONFIG,
    EXIT_INCONSISTENT,
    EXIT_OK,
    add_common_arguments,
    fail,
    format_help,
    load_spec,
    setup_logging,
    write_manifest,
)
from asa.executor import executor_for_threads
from asa.helpers import write_text
from asa.model import check_dissipativity
from asa.objects.report import RunReport

SUITE_HELP = {
    "monotonicity": "shooting angles and radii are monotone (odd reactions, lambda > 0)",
    "symmetry": "reflection and time reversal symmetries of curves and spectra",
    "dropping": "zero numbers of differences and of u_t never increase",
    "lyapunov": "energy decreases at the rate of the dissipation identity",
    "wolfrum": "adjacency agrees with cascade adjacency (alias: wolfrum-equivalence)",
    "heteroclinics": "unstable directions of every equilibrium reach predicted targets",
    "morse": "angle, eigenvalue and permutation Morse indices agree",
    "zero-range": "zero numbers along every edge lie between the Morse indices",
    "laplacian": "second order convergence of the discrete Laplacian",
}


def register(subparsers):
    verify_parser = subparsers.add_parser(
        "verify",
        help="Run property suites on a problem",
        description="check the invariants of the attractor by shooting and simulation",
        formatter_class=argparse.RawTextHelpFormatter,
    )
    add_common_arguments(verify_parser, default_out="asa-verify")
    verify_parser.add_argument(
        "--suite",
        action="append",
        default=[],
        metavar="NAME",
        help=format_help(SUITE_HELP, "suite to run, repeatable; every suite if omitted"),
    )
    verify_parser.add_argument(
        "--ensemble",
        type=int,
        default=None,
        help="ensemble size overriding the default of the random suites",
    )

    verify_parser.set_defaults(func=verify)


def verify(args):
    setup_logging(args.verbosity, args.log_file)
    spec = load_spec(args)
    try:
        suites = resolve_suites(args.suite)
    except KeyError as ex:
        known = ", ".join([*SUITE_HELP, *ALIASES])
        fail(EXIT_CONFIG, f"unknown suite {ex}, choose from {known}")
    if args.ensemble is not None and args.ensemble < 1:
        fail(EXIT_CONFIG, f"--ensemble must be at least 1, got {args.ensemble}")
    executor = executor_for_threads(args.threads)
    out = Path(args.out)

    report = RunReport()
    report.set("problem", spec.to_dict())
    report.set("spec_hash", spec.spec_hash())
    report.set("dissipativity", check_dissipativity(spec).to_dict())
    report.set("seed", spec.numerics.seed)
    report.set("suites", suites)

    context = VerificationContext(spec, executor, ensemble=args.ensemble)
    for suite in suites:
        start = time.perf_counter()
        check = run_suites([suite], context)[0]
        report.add_timing(suite, time.perf_counter() - start)
        report.add_check(check)
        sys.stdout.write(f"{check.name}: {check.status} ({check.message})\n")

    write_text(out / "checks.json", report.to_json())
    write_manifest(out, "verify", spec, dt=math.pi / spec.numerics.grid_n)
    exit(EXIT_OK if report.passed else EXIT_INCONSISTENT)
