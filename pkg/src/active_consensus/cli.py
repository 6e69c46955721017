"""Command-line front end: ``gen``, ``run``, ``sweep`` and ``report``.

Exit codes: 0 success, 2 bad arguments, spec or results file, 3 topology
problems, 4 a run that did not reach consensus (reported after all output
files are written).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import results
from .sim import ConfigError, SweepPoint, expand_grid, sweep
from .specfile import SpecError, load_spec, parse_grid
from .topology import FAMILIES, TopologyError, format_edge_list, generate

EXIT_OK, EXIT_PARSE, EXIT_TOPOLOGY, EXIT_NONCONVERGENCE = 0, 2, 3, 4
LOG_ENV = "ACTIVE_CONSENSUS_LOG"
LOG_LEVELS = {"off": None, "info": logging.INFO, "debug": logging.DEBUG}

log = logging.getLogger("active_consensus")


def _u64(text):
    value = int(text, 10)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def _positive(text):
    value = int(text, 10)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="active-consensus",
        description="Energy-constrained average consensus with selective link activation.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a topology as an edge list")
    gen.add_argument("family", choices=FAMILIES)
    gen.add_argument("--n", type=int, help="number of nodes (uniform, star, chain)")
    gen.add_argument("--d", type=int, help="degree (uniform)")
    gen.add_argument("--seed", type=_u64, default=0)
    gen.add_argument("--out", help="output path; standard output when omitted")

    for name, text in (("run", "run every replicate of one spec"),
                       ("sweep", "run a spec over a parameter grid")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--spec", required=True, help="experiment spec (key = value lines)")
        p.add_argument("--out", required=True, help="per-replicate results CSV")
        p.add_argument("--seed", type=_u64, help="override the spec's master seed")
        p.add_argument("--trace-dir", help="write one trace CSV per replicate here")
        if name == "sweep":
            p.add_argument("--grid", action="append", default=[], metavar="KEY=V1,V2,...",
                           help="grid axis; repeat for a Cartesian product")
            p.add_argument("--jobs", type=_positive, default=1, help="worker processes")

    report = sub.add_parser("report", help="summarize a results or aggregate CSV")
    report.add_argument("path")
    return parser


def configure_logging(env=None) -> None:
    value = (os.environ if env is None else env).get(LOG_ENV, "off").strip().lower() or "off"
    if value not in LOG_LEVELS:
        raise SpecError(f"{LOG_ENV} must be one of {', '.join(LOG_LEVELS)}, got {value!r}")
    level = LOG_LEVELS[value]
    if level is None:
        log.setLevel(logging.CRITICAL + 1)
        return
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(level)


def cmd_gen(args) -> int:
    g = generate(args.family, args.n, args.d, args.seed)
    text = format_edge_list(g)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _trace_name(index: int, point: SweepPoint, replicate: int) -> str:
    return f"point{index:03d}_{point.config.scheme}_rep{replicate:03d}.csv"


def _execute(args, grid: dict) -> int:
    base = load_spec(args.spec)
    if args.seed is not None:
        base = replace(base, seed=args.seed)
    points = sweep(expand_grid(grid), base, jobs=getattr(args, "jobs", 1))
    rows = [row for point in points for row in point.rows]
    results.write_results(rows, args.out)
    results.write_aggregates(points, results.aggregate_path(args.out))
    if args.trace_dir:
        trace_dir = Path(args.trace_dir)
        trace_dir.mkdir(parents=True, exist_ok=True)
        for k, point in enumerate(points):
            for row in point.rows:
                results.write_trace(row.run, trace_dir / _trace_name(k, point, row.replicate))
    failed = [row for row in rows if not row.ok]
    if failed:
        print(f"error: {len(failed)} of {len(rows)} runs did not reach consensus", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    return EXIT_OK


def cmd_run(args) -> int:
    return _execute(args, {})


def cmd_sweep(args) -> int:
    return _execute(args, parse_grid(args.grid))


def cmd_report(args) -> int:
    header, records = results.read_table(args.path)
    sys.stdout.write(results.format_report(results.summarize(header, records)))
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "run": cmd_run, "sweep": cmd_sweep, "report": cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        configure_logging()
        return COMMANDS[args.command](args)
    except TopologyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOPOLOGY
    except (SpecError, ConfigError, results.ResultsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
