"""CSV formats for per-replicate results, aggregates and traces, and the summary report."""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Iterable, Sequence

from .sim import ReplicateRow, RunResult, SweepPoint

RESULT_COLUMNS = ("scheme", "alpha", "p_fail", "n", "d", "replicate", "iterations",
                  "total_cost_attempted", "total_cost_survived", "converged", "cost_ratio", "time_ratio")
TRACE_COLUMNS = ("t", "disagreement", "spread", "links_selected", "links_survived")
KEY_COLUMNS = ("scheme", "alpha", "p_fail", "n", "d")
METRICS = ("iterations", "total_cost_attempted", "total_cost_survived", "converged", "cost_ratio", "time_ratio")
AGGREGATE_COLUMNS = KEY_COLUMNS + ("replicates",) + tuple(
    f"{metric}_{stat}" for metric in METRICS for stat in ("mean", "sd"))
REPORT_COLUMNS = ("scheme", "alpha", "p_fail", "n", "d", "reps", "cost_ratio", "time_ratio", "converged")


class ResultsError(ValueError):
    """A results file that cannot be read."""


def fmt(value) -> str:
    """Integers verbatim, reals at 9 significant digits."""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    return format(float(value), ".9g")


def _degree(row_config, mean_degree):
    # configured target for the uniform family, realized mean degree otherwise
    return row_config.d if row_config.topology == "uniform" and row_config.d is not None else mean_degree


def result_record(row: ReplicateRow) -> list[str]:
    cfg, run = row.config, row.run
    values = (cfg.scheme, cfg.alpha, cfg.p_fail, row.n, _degree(cfg, row.mean_degree), row.replicate,
              run.iterations, run.total_cost, run.total_cost_survived, row.ok, row.cost_ratio, row.time_ratio)
    return [v if isinstance(v, str) else fmt(v) for v in values]


def aggregate_record(point: SweepPoint) -> list[str]:
    first = point.rows[0]
    cfg = point.config
    key = (cfg.scheme, fmt(cfg.alpha), fmt(cfg.p_fail), fmt(first.n), fmt(_degree(cfg, first.mean_degree)))
    stats = point.stats()
    values = [fmt(x) for metric in METRICS for x in stats[metric]]
    return [*key, fmt(len(point.rows)), *values]


def _write(path, header, records) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(records)
    Path(path).write_text(buf.getvalue())


def write_results(rows: Iterable[ReplicateRow], path) -> None:
    _write(path, RESULT_COLUMNS, (result_record(r) for r in rows))


def write_aggregates(points: Iterable[SweepPoint], path) -> None:
    _write(path, AGGREGATE_COLUMNS, (aggregate_record(p) for p in points))


def write_trace(run: RunResult, path) -> None:
    _write(path, TRACE_COLUMNS, ([fmt(v) for v in rec] for rec in run.trace))


def aggregate_path(results_path) -> Path:
    """``out.csv`` -> ``out_aggregate.csv``, next to the per-replicate file."""
    p = Path(results_path)
    return p.with_name(f"{p.stem}_aggregate{p.suffix or '.csv'}")


def read_table(path) -> tuple[list[str], list[dict]]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ResultsError(f"cannot read {path}: {exc}") from None
    if not text.strip():
        return [], []
    reader = csv.DictReader(io.StringIO(text))
    header = list(reader.fieldnames or [])
    records = list(reader)
    if any(None in rec or None in rec.values() for rec in records):
        raise ResultsError(f"{path}: rows do not match the header")
    return header, records


def _number(rec, key):
    try:
        return float(rec[key])
    except (KeyError, ValueError):
        raise ResultsError(f"bad or missing value for {key!r}") from None


def _mean_sd(values: Sequence[float]) -> tuple[float, float]:
    n = len(values)
    mean = math.fsum(values) / n
    sd = math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (n - 1)) if n > 1 else 0.0
    return mean, sd


def summarize(header: Sequence[str], records: Sequence[dict]) -> list[dict]:
    """One summary per grid point, from either a results or an aggregate table.

    Sorted by p_fail, alpha, n, d and scheme.
    """
    if not header:
        return []
    if "cost_ratio_mean" in header:
        missing = set(AGGREGATE_COLUMNS) - set(header)
        if missing:
            raise ResultsError(f"aggregate table lacks columns {sorted(missing)}")
        points = [{
            "scheme": rec["scheme"], **{k: _number(rec, k) for k in KEY_COLUMNS[1:]},
            "reps": int(_number(rec, "replicates")),
            "cost_ratio": (_number(rec, "cost_ratio_mean"), _number(rec, "cost_ratio_sd")),
            "time_ratio": (_number(rec, "time_ratio_mean"), _number(rec, "time_ratio_sd")),
            "converged": _number(rec, "converged_mean"),
        } for rec in records]
    else:
        missing = set(RESULT_COLUMNS) - set(header)
        if missing:
            raise ResultsError(f"results table lacks columns {sorted(missing)}")
        groups: dict[tuple, list[dict]] = {}
        for rec in records:
            key = (rec["scheme"],) + tuple(_number(rec, k) for k in KEY_COLUMNS[1:])
            groups.setdefault(key, []).append(rec)
        points = []
        for key, recs in groups.items():
            points.append({
                "scheme": key[0], **dict(zip(KEY_COLUMNS[1:], key[1:])), "reps": len(recs),
                "cost_ratio": _mean_sd([_number(r, "cost_ratio") for r in recs]),
                "time_ratio": _mean_sd([_number(r, "time_ratio") for r in recs]),
                "converged": math.fsum(_number(r, "converged") for r in recs) / len(recs),
            })
    points.sort(key=lambda p: (p["p_fail"], p["alpha"], p["n"], p["d"], p["scheme"]))
    return points


def format_report(points: Sequence[dict]) -> str:
    rows = [list(REPORT_COLUMNS)]
    for p in points:
        rows.append([
            p["scheme"], f"{p['alpha']:g}", f"{p['p_fail']:g}", f"{p['n']:g}", f"{p['d']:.4g}", str(p["reps"]),
            "{:.3f} ± {:.3f}".format(*p["cost_ratio"]), "{:.3f} ± {:.3f}".format(*p["time_ratio"]),
            f"{p['converged']:.2f}",
        ])
    widths = [max(len(r[i]) for r in rows) for i in range(len(REPORT_COLUMNS))]
    lines = ("  ".join([r[0].ljust(widths[0])] + [cell.rjust(w) for cell, w in zip(r[1:], widths[1:])])
             for r in rows)
    return "\n".join(line.rstrip() for line in lines) + "\n"
