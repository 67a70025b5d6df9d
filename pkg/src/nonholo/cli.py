"""Command line entry point: ``nonholo simulate|verify|transform``.

Exit codes: 0 success, 2 configuration error, 3 chart breakdown,
4 numerical failure, 5 verification failure.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import verify as verify_mod
from .chained import chart
from .config import load_config
from .errors import ChartError, ConfigError, DimensionTooSmall, InvalidStart, NonholoError
from .output import format_float, write_csv, write_plots, write_summary
from .sim import Status, diagnostics, run_closed_loop

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CHART = 3
EXIT_NUMERICAL = 4
EXIT_VERIFY = 5

_STATUS_EXIT = {
    Status.COMPLETED: EXIT_OK,
    Status.CONVERGED: EXIT_OK,
    Status.CHART_BREAKDOWN: EXIT_CHART,
    Status.NUMERICAL_FAILURE: EXIT_NUMERICAL,
}


def _err(msg):
    print(f"nonholo: {msg}", file=sys.stderr)


def cmd_simulate(args):
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    out_dir = args.out if args.out is not None else cfg.out_dir
    duration = cfg.simulation.duration if args.duration is None else args.duration
    dt = cfg.simulation.dt if args.dt is None else args.dt
    if not dt > 0 or not duration >= 0:
        _err("config error: --dt must be positive and --duration non-negative")
        return EXIT_CONFIG
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "trajectory.csv"

    if duration == 0:
        # nothing to integrate: the table is just its header
        write_csv(csv_path, None)
        print(f"status: {Status.COMPLETED}\nwrote {csv_path}")
        return EXIT_OK

    try:
        sim_cfg = cfg.simulation.to_sim_config(dt=dt, duration=duration)
        cs = cfg.build_system()
    except (ValueError, ImportError, AttributeError) as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    try:
        rec = run_closed_loop(cs, cfg.controller, sim_cfg)
    except InvalidStart as exc:
        _err(f"chart error: {exc}")
        return EXIT_CHART
    except ChartError as exc:
        _err(f"{Status.CHART_BREAKDOWN}: {exc}")
        return EXIT_CHART
    except NonholoError as exc:
        _err(f"{Status.NUMERICAL_FAILURE}: {exc}")
        return EXIT_NUMERICAL

    diag = diagnostics(rec)
    written = []
    if "csv" in cfg.formats:
        write_csv(csv_path, rec, exact=args.exact_floats)
        written.append(csv_path)
    summary = diag.text() + (f"message: {rec.message}\n" if rec.message else "")
    if "summary" in cfg.formats:
        written.append(out_dir / "summary.txt")
        write_summary(written[-1], diag, rec.message)
    if "svg" in cfg.formats and not args.no_plots and cfg.model == "car":
        written.extend(write_plots(out_dir, rec, cfg.car.l))
    sys.stdout.write(summary)
    for path in written:
        print(f"wrote {path}")
    code = _STATUS_EXIT[rec.status]
    if code != EXIT_OK:
        _err(f"{rec.status}: {rec.message}")
    return code


def cmd_verify(args):
    try:
        results = verify_mod.run_checks(args.subset)
    except ValueError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    print(verify_mod.format_table(results))
    failed = [r.name for r in results if not r.passed]
    if failed:
        _err(f"verification failed: {', '.join(failed)}")
        return EXIT_VERIFY
    return EXIT_OK


def _parse_vector(text):
    try:
        return np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def cmd_transform(args):
    try:
        c = chart(args.n)
    except (DimensionTooSmall, ValueError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    vec = args.forward if args.forward is not None else args.inverse
    if vec.size != args.n:
        _err(f"expected {args.n} components, got {vec.size}")
        return EXIT_CONFIG
    try:
        out = c.forward(vec) if args.forward is not None else c.inverse(vec)
    except ChartError as exc:
        _err(f"chart error: {exc}")
        return EXIT_CHART
    print(",".join(format_float(x) for x in out))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nonholo",
        description="Energy-shaping control of nonholonomic port-Hamiltonian systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a closed-loop simulation from a config file")
    p.add_argument("--config", required=True, help="TOML or JSON run configuration")
    p.add_argument("--out", type=Path, default=None, help="output directory (overrides the config)")
    p.add_argument("--dt", type=float, default=None, help="integration step in seconds")
    p.add_argument("--duration", type=float, default=None, help="horizon in seconds; 0 writes only the CSV header")
    p.add_argument("--no-plots", action="store_true", help="skip the SVG plots")
    p.add_argument("--exact-floats", action="store_true", help="print 17 significant digits in the CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run the built-in property checks")
    p.add_argument("--subset", choices=verify_mod.SUBSETS, default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("transform", help="evaluate the discontinuous chart or its inverse")
    p.add_argument("--n", type=int, required=True, help="state dimension")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--forward", type=_parse_vector, metavar="Z", help="z -> w, comma separated")
    group.add_argument("--inverse", type=_parse_vector, metavar="W", help="w -> z, comma separated")
    p.set_defaults(func=cmd_transform)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors, which is also our config code
        return exc.code
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
