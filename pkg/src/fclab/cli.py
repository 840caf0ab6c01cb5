"""Command-line entry point.

    fclab --config plan.json [--out DIR] [--seed U64] [--workers N] [--k N] [--no-plot]
    fclab --figure N [same overrides]
    fclab plot results.csv --kind curve|contour|snapshots [--out FILE]
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import engine
from .experiments import ConfigError, load_plan, preset, run_plan, write_results
from .numerics import AccuracyError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("fclab")


def _run_parser():
    ap = argparse.ArgumentParser(prog="fclab", description=__doc__.split("\n")[0],
                                 epilog="Use 'fclab plot -h' for the plotting subcommand.")
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", type=Path, help="JSON experiment plan")
    src.add_argument("--figure", type=int, choices=range(2, 10), metavar="N",
                     help="run the preset for figure N (2-9)")
    ap.add_argument("--out", type=Path, help="output directory (overrides the plan)")
    ap.add_argument("--seed", type=int, help="master seed, 64-bit unsigned")
    ap.add_argument("--workers", type=int, help="worker processes (default: $FCL_WORKERS or 1)")
    ap.add_argument("--k", type=int, help="override the replicate count")
    ap.add_argument("--no-plot", action="store_true", help="skip SVG rendering")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _plot_parser():
    ap = argparse.ArgumentParser(prog="fclab plot", description="Render a results CSV as SVG")
    ap.add_argument("csv", type=Path)
    ap.add_argument("--kind", required=True, choices=["curve", "contour", "snapshots"])
    ap.add_argument("--out", type=Path)
    return ap


def plot_main(argv) -> int:
    from .plotting import SchemaError, plot

    args = _plot_parser().parse_args(argv)
    try:
        out = plot(args.csv, args.kind, args.out)
    except (SchemaError, FileNotFoundError) as exc:
        print(f"fclab plot: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(out)
    return EXIT_OK


def _plot_kind(plan) -> str:
    return {"curve": "curve", "solve": "curve", "contour": "contour",
            "snapshots": "snapshots"}[plan.kind]


def run_main(argv) -> int:
    args = _run_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        plan = load_plan(args.config) if args.config else preset(args.figure)
        updates = {}
        if args.seed is not None:
            updates["seed"] = args.seed
        if args.k is not None:
            updates["k"] = args.k
        if args.out is not None:
            updates["output_dir"] = str(args.out)
        if updates:
            plan = type(plan).model_validate({**plan.model_dump(), **updates})
        workers = engine.resolve_workers(args.workers)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"fclab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        tables, flagged = run_plan(plan, workers)
    except engine.ReplicateError as exc:
        print(f"fclab: numerical failure in model {exc.model} at replicate {exc.replicate}: "
              f"{exc.cause}", file=sys.stderr)
        return EXIT_NUMERIC
    except (AccuracyError, ArithmeticError) as exc:
        print(f"fclab: numerical failure in model {plan.model}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    out_dir = Path(plan.output_dir)
    written = write_results(plan, tables, out_dir, flagged)
    if flagged:
        log.warning("%d replicate radii hit their search bracket", flagged)
    if not args.no_plot:
        from .plotting import plot

        stem = f"figure{plan.figure}" if plan.figure else "results"
        written.append(plot(out_dir / "results.csv", _plot_kind(plan), out_dir / f"{stem}.svg"))
        if "snapshots.csv" in tables:
            written.append(plot(out_dir / "snapshots.csv", "snapshots",
                                out_dir / f"{stem}_snapshots.svg"))
    for path in written:
        print(path)
    return EXIT_OK


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "plot":
        return plot_main(argv[1:])
    return run_main(argv)


if __name__ == "__main__":
    sys.exit(main())
