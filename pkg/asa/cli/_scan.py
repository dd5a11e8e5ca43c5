import argparse
import sys
import time
from pathlib import Path

from asa.cli._util import (
    EXIT_CONFIG,
    EXIT_OK,
    add_common_arguments,
    fail,
    load_spec,
    setup_logging,
    write_manifest,
)
from asa.executor import executor_for_threads
from asa.helpers import dump_json, write_text
from asa.scan import BISECTION_TOL, scan_lambda


def register(subparsers):
    scan_parser = subparsers.add_parser(
        "scan",
        help="Count equilibria along a range of lambda",
        description=(
            "count equilibria at equidistant lambda values and locate the\n"
            "bifurcations where the count changes"
        ),
        formatter_class=argparse.RawTextHelpFormatter,
    )
    add_common_arguments(scan_parser, default_out="asa-scan")
    scan_parser.add_argument(
        "--lambda-min", type=float, required=True, metavar="X", help="start of the range"
    )
    scan_parser.add_argument(
        "--lambda-max", type=float, required=True, metavar="X", help="end of the range"
    )
    scan_parser.add_argument(
        "--steps",
        type=int,
        default=50,
        help="number of equidistant samples (default: %(default)s)",
    )
    scan_parser.add_argument(
        "--tol",
        type=float,
        default=BISECTION_TOL,
        help="width of the bisection interval of a bifurcation (default: %(default)s)",
    )

    scan_parser.set_defaults(func=scan)


def _table(result: dict) -> str:
    lines = ["lambda\tcount\tsigma"]
    for sample in result["samples"]:
        count = "flagged" if sample["count"] is None else sample["count"]
        lines.append(f"{sample['lambda']:.6g}\t{count}\t{sample['sigma']}")
    for change in result["bifurcations"]:
        low, high = change["interval"]
        lines.append(
            f"bifurcation at lambda={change['lambda']:.6f} in [{low:.6f}, {high:.6f}]: "
            f"{change['from_count']} -> {change['to_count']}"
        )
    return "\n".join(lines) + "\n"


def scan(args):
    setup_logging(args.verbosity, args.log_file)
    spec = load_spec(args)
    if not args.lambda_min < args.lambda_max:
        fail(EXIT_CONFIG, f"empty lambda range [{args.lambda_min}, {args.lambda_max}]")
    if args.steps < 2:
        fail(EXIT_CONFIG, f"--steps must be at least 2, got {args.steps}")
    executor = executor_for_threads(args.threads)
    out = Path(args.out)

    start = time.perf_counter()
    result = scan_lambda(
        spec, args.lambda_min, args.lambda_max, args.steps, executor, args.tol
    )
    elapsed = round(time.perf_counter() - start, 3)

    document = {
        "problem": spec.to_dict(),
        "spec_hash": spec.spec_hash(),
        "lambda_min": args.lambda_min,
        "lambda_max": args.lambda_max,
        "steps": args.steps,
        "samples": result["samples"],
        "bifurcations": result["bifurcations"],
        "timings": {"scan": elapsed},
    }
    write_text(out / "scan.json", dump_json(document))
    write_manifest(out, "scan", spec)
    sys.stdout.write(_table(result))
    exit(EXIT_OK)
