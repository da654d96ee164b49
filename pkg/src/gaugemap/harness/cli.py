"""Command-line interface.

Exit codes: 0 all checks pass, 1 a verification check failed, 2 the
configuration (or the command line) is invalid.
"""

import argparse
import json
import sys

from ..errors import ConfigError, GaugeMapError
from .config import SCHEMA, load_config
from .report import write_json
from .runner import run_experiment, run_trajectory
from .suites import SUITES, WORKERS_ENV, verify_suite

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gaugemap",
        description="Gauge maps of driven many-body Hamiltonians, verified against direct propagation.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one configured experiment")
    run.add_argument("--config", required=True, help="experiment JSON file")
    run.add_argument("--out", help="output directory (default: config output.dir or .)")
    run.add_argument("--format", choices=("csv", "json"), help="time-series format")
    run.add_argument("--overwrite", action="store_true", help="replace existing output files")

    ver = sub.add_parser("verify", help="run a predefined verification suite")
    ver.add_argument("--suite", required=True, help=f"one of: {', '.join(SUITES)}")
    ver.add_argument("--workers", type=int, default=None,
                     help=f"parallel scenarios (default: ${WORKERS_ENV} or 1)")
    ver.add_argument("--report", help="also write the JSON report here")
    ver.add_argument("--inject-fault", action="store_true",
                     help="negative control: flip one sign per scenario; the suite must fail")

    traj = sub.add_parser("trajectory", help="integrate and export the gauge trajectory only")
    traj.add_argument("--config", required=True)
    traj.add_argument("--out")
    traj.add_argument("--overwrite", action="store_true")

    sub.add_parser("schema", help="print the experiment config JSON schema")
    return parser


def _run(args):
    cfg = load_config(args.config)
    report, _, paths = run_experiment(cfg, args.out, args.format, args.overwrite)
    for line in report.lines():
        print(line)
    for kind, path in paths.items():
        print(f"wrote {kind}: {path}")
    return EXIT_PASS if report.passed else EXIT_FAIL


def _verify(args):
    report = verify_suite(args.suite, args.workers, args.inject_fault)
    for line in report.lines():
        print(line)
    if args.report:
        write_json(args.report, report.to_dict())
    return EXIT_PASS if report.passed else EXIT_FAIL


def _trajectory(args):
    cfg = load_config(args.config)
    columns, rows, paths = run_trajectory(cfg, args.out, args.overwrite)
    print(f"{len(rows)} samples, columns: {', '.join(columns)}")
    for path in paths.values():
        print(f"wrote {path}")
    return EXIT_PASS


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_PASS
    try:
        if args.command == "run":
            return _run(args)
        if args.command == "verify":
            return _verify(args)
        if args.command == "trajectory":
            return _trajectory(args)
        print(json.dumps(SCHEMA, indent=2))
        return EXIT_PASS
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GaugeMapError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
