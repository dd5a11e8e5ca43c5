import argparse
import logging
import sys
import time
from pathlib import Path

from asa.attractor import Attractor, attractor_for_problem
from asa.checks import VerificationContext, run_suites
from asa.cli._util import (
    CONFIG_ERRORS,
    EXIT_CONFIG,
    EXIT_INCONSISTENT,
    EXIT_NON_HYPERBOLIC,
    EXIT_OK,
    add_common_arguments,
    fail,
    load_spec,
    setup_logging,
    write_manifest,
)
from asa.connections import to_dot, to_json
from asa.exceptions import AsaException
from asa.executor import executor_for_threads
from asa.helpers import write_csv, write_text
from asa.model import check_dissipativity
from asa.objects.report import CheckResult, CheckStatus, RunReport

log = logging.getLogger(__name__)

CONSISTENCY_SUITES = ["morse", "zero-range", "wolfrum"]
"""Internal consistency checks run after every successful analysis."""


def register(subparsers):
    analyze_parser = subparsers.add_parser(
        "analyze",
        help="Compute the attractor of a problem",
        description=(
            "shoot the stable and unstable manifolds, find the equilibria and derive\n"
            "the Sturm permutation, Morse indices, zero numbers and connection graph"
        ),
        formatter_class=argparse.RawTextHelpFormatter,
    )
    add_common_arguments(analyze_parser, default_out="asa-analyze")
    analyze_parser.add_argument(
        "--no-checks",
        action="store_true",
        help="skip the internal consistency checks",
    )
    analyze_parser.set_defaults(no_checks=False)

    analyze_parser.set_defaults(func=analyze)


def _write_artifacts(out: Path, attractor: Attractor) -> None:
    for record in attractor.records:
        write_csv(
            out / "equilibria" / f"eq_{record.label}.csv",
            ["theta", "u"],
            record.profile.csv_rows(),
        )
    for name, curve in (("unstable", attractor.curve_u), ("stable", attractor.curve_s)):
        write_csv(
            out / "curves" / f"{name}.csv", ["param", "u", "p", "diverged"], curve.csv_rows()
        )
    if attractor.graph is not None:
        write_text(out / "attractor.dot", to_dot(attractor.graph))
        write_text(out / "attractor.json", to_json(attractor.graph))


def _summary(attractor: Attractor) -> str:
    lines = [f"equilibria: {len(attractor.records)}"]
    if attractor.non_hyperbolic:
        lines.append(f"non-hyperbolic: {attractor.non_hyperbolic}")
    if attractor.permutation is not None:
        lines.append(f"sigma: {attractor.permutation.sigma}")
        lines.append(f"morse indices: {attractor.morse_indices}")
    if attractor.graph is not None:
        lines.append(f"edges: {len(attractor.graph.edges)}")
    return "\n".join(lines) + "\n"


def analyze(args):
    setup_logging(args.verbosity, args.log_file)
    spec = load_spec(args)
    executor = executor_for_threads(args.threads)
    out = Path(args.out)

    report = RunReport()
    report.set("problem", spec.to_dict())
    report.set("spec_hash", spec.spec_hash())
    report.set("dissipativity", check_dissipativity(spec).to_dict())

    start = time.perf_counter()
    try:
        attractor = attractor_for_problem(spec, executor)
    except CONFIG_ERRORS as ex:
        fail(EXIT_CONFIG, str(ex))
    except AsaException as ex:
        log.error(f"Analysis failed with {ex.__class__.__name__}: {ex}")
        report.add_check(
            CheckResult("pipeline", CheckStatus.FAILED, f"{ex.__class__.__name__}: {ex}")
        )
        write_text(out / "report.json", report.to_json())
        write_manifest(out, "analyze", spec)
        fail(EXIT_INCONSISTENT, f"{ex.__class__.__name__}: {ex}")
    report.add_timing("attractor", time.perf_counter() - start)

    for key, value in attractor.to_dict().items():
        report.set(key, value)
    _write_artifacts(out, attractor)

    if not attractor.hyperbolic:
        code = EXIT_NON_HYPERBOLIC
    elif args.no_checks:
        code = EXIT_OK
    else:
        start = time.perf_counter()
        context = VerificationContext(spec, executor, attractor=attractor)
        for check in run_suites(CONSISTENCY_SUITES, context):
            report.add_check(check)
        report.add_timing("checks", time.perf_counter() - start)
        code = EXIT_OK if report.passed else EXIT_INCONSISTENT

    write_text(out / "report.json", report.to_json())
    write_manifest(out, "analyze", spec)
    sys.stdout.write(_summary(attractor))
    exit(code)
