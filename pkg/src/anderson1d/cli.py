"""Command-line entry point: run, validate, schema, list-experiments, plot.

Exit codes: 0 ok, 2 config error, 3 numeric error, 4 I/O error.
Environment: ANDERSON1D_OUT overrides the output directory,
ANDERSON1D_WORKERS the worker count.
"""

from __future__ import annotations

import argparse
import os
import sys

from anderson1d.config import EXPERIMENTS, SCHEMA_TEXT, ConfigError, load_config
from anderson1d.operator import NumericError
from anderson1d.reporting import ReportIOError, emit_report, parse_report

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


def _build_parser():
    p = argparse.ArgumentParser(
        prog="anderson1d",
        description="numerical laboratory for the 1d random Schrodinger operator",
    )
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment from a config file")
    run.add_argument("config", help="path to a JSON experiment config")
    run.add_argument("--out", help="output directory (overrides config/env)")
    run.add_argument("--workers", type=int, help="worker count (overrides config/env)")
    run.add_argument(
        "--figures", action="store_true",
        help="also render figures next to the CSV output",
    )

    val = sub.add_parser("validate", help="validate a config without running it")
    val.add_argument("config")

    sub.add_parser("schema", help="print the config schema")
    sub.add_parser("list-experiments", help="list experiment names")

    plot = sub.add_parser("plot", help="render figures from an emitted report")
    plot.add_argument("report", help="path to a <prefix>.report.json file")
    return p


def _resolve_out(cfg, args):
    out = cfg["output"]["dir"]
    env = os.environ.get("ANDERSON1D_OUT")
    if env:
        out = env
    if getattr(args, "out", None):
        out = args.out
    return out


def _resolve_workers(cfg, args):
    w = cfg["workers"]
    env = os.environ.get("ANDERSON1D_WORKERS")
    if env:
        try:
            w = max(1, int(env))
        except ValueError:
            print(
                f"warning: ignoring non-integer ANDERSON1D_WORKERS={env!r}",
                file=sys.stderr,
            )
    if getattr(args, "workers", None):
        w = max(1, args.workers)
    return w


def _cmd_run(args) -> int:
    from anderson1d.experiments import run_experiment

    cfg = load_config(args.config)
    cfg["workers"] = _resolve_workers(cfg, args)
    outdir = _resolve_out(cfg, args)
    try:
        report = run_experiment(cfg)
    except NumericError as e:
        print(
            f"numeric error: {e} (master_seed={cfg['master_seed']})",
            file=sys.stderr,
        )
        return EXIT_NUMERIC
    paths = emit_report(report, outdir, cfg["output"]["prefix"])
    if args.figures:
        from anderson1d.figures import render_figures

        for fp in render_figures(report, outdir, cfg["output"]["prefix"]):
            print(f"figure: {fp}")
    for line in report.summary_lines():
        print(line)
    print(f"report: {paths['report']}")
    print(f"wall time: {report.wall_time_s:.2f}s", file=sys.stderr)
    return EXIT_OK


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    print(f"ok: {cfg['experiment']} config is valid")
    return EXIT_OK


def _cmd_plot(args) -> int:
    from anderson1d.figures import render_figures

    try:
        report = parse_report(args.report)
    except OSError as e:
        print(f"io error: {e}", file=sys.stderr)
        return EXIT_IO
    outdir = os.path.dirname(os.path.abspath(args.report))
    prefix = os.path.basename(args.report)
    if prefix.endswith(".report.json"):
        prefix = prefix[: -len(".report.json")]
    for fp in render_figures(report, outdir, prefix):
        print(f"figure: {fp}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "schema":
            print(SCHEMA_TEXT, end="")
            return EXIT_OK
        if args.command == "list-experiments":
            for name in sorted(EXPERIMENTS):
                print(f"{name:14s} {EXPERIMENTS[name]}")
            return EXIT_OK
        if args.command == "plot":
            return _cmd_plot(args)
        return EXIT_CONFIG
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as e:
        # precondition violations surfacing from the modules are config-level
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ReportIOError as e:
        print(f"io error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
