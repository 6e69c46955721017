import csv
import math

import pytest

from active_consensus import results
from active_consensus.results import (
    AGGREGATE_COLUMNS, RESULT_COLUMNS, TRACE_COLUMNS, ResultsError, aggregate_path, fmt, format_report,
    read_table, summarize,
)
from active_consensus.sim import SimConfig, sweep


@pytest.fixture(scope="module")
def points():
    base = SimConfig(topology="uniform", n=16, d=4, alpha=0.4, seed=2, replicates=2)
    return sweep([{"scheme": "global"}, {"scheme": "local", "p_fail": 0.2}], base)


def test_fmt():
    assert fmt(3) == "3"
    assert fmt(True) == "1"
    assert fmt(0.1 + 0.2) == "0.3"
    assert fmt(1 / 3) == "0.333333333"
    assert fmt(1.5e-12) == "1.5e-12"
    assert fmt(math.nan) == "nan"


def test_aggregate_path():
    assert aggregate_path("out/run.csv").as_posix() == "out/run_aggregate.csv"
    assert aggregate_path("res").name == "res_aggregate.csv"


def test_results_file(tmp_path, points):
    path = tmp_path / "r.csv"
    rows = [r for p in points for r in p.rows]
    results.write_results(rows, path)
    with open(path) as fh:
        records = list(csv.reader(fh))
    assert tuple(records[0]) == RESULT_COLUMNS
    assert len(records) == 5
    first = dict(zip(RESULT_COLUMNS, records[1]))
    assert first["scheme"] == "global" and first["d"] == "4" and first["converged"] == "1"
    assert float(first["cost_ratio"]) == pytest.approx(rows[0].cost_ratio, rel=1e-8)
    assert int(first["iterations"]) == rows[0].run.iterations


def test_aggregate_file(tmp_path, points):
    path = tmp_path / "a.csv"
    results.write_aggregates(points, path)
    header, records = read_table(path)
    assert tuple(header) == AGGREGATE_COLUMNS
    assert len(records) == 2
    mean, sd = points[1].stats()["time_ratio"]
    assert float(records[1]["time_ratio_mean"]) == pytest.approx(mean, rel=1e-8)
    assert float(records[1]["time_ratio_sd"]) == pytest.approx(sd, rel=1e-8)
    assert records[1]["p_fail"] == "0.2" and records[1]["replicates"] == "2"


def test_trace_file(tmp_path, points):
    path = tmp_path / "t.csv"
    run = points[0].rows[0].run
    results.write_trace(run, path)
    header, records = read_table(path)
    assert tuple(header) == TRACE_COLUMNS
    assert len(records) == run.iterations
    assert [int(r["t"]) for r in records] == list(range(1, run.iterations + 1))


def test_summaries_agree_across_formats(tmp_path, points):
    rpath, apath = tmp_path / "r.csv", tmp_path / "a.csv"
    results.write_results([r for p in points for r in p.rows], rpath)
    results.write_aggregates(points, apath)
    a = summarize(*read_table(rpath))
    b = summarize(*read_table(apath))
    assert len(a) == len(b) == 2
    for x, y in zip(a, b):
        assert x["scheme"] == y["scheme"] and x["reps"] == y["reps"]
        assert x["cost_ratio"] == pytest.approx(y["cost_ratio"], rel=1e-7)
    assert format_report(a) == format_report(b)


def test_report_sorted_by_p_fail():
    header = list(RESULT_COLUMNS)
    recs = []
    for p_fail, alpha in ((0.9, 0.3), (0.1, 0.5), (0.1, 0.3), (0.5, 0.3)):
        recs.append(dict(zip(header, ["global", str(alpha), str(p_fail), "100", "10", "0", "10", "5", "5", "1",
                                      "0.5", "1.2"])))
    pts = summarize(header, recs)
    assert [(p["p_fail"], p["alpha"]) for p in pts] == [(0.1, 0.3), (0.1, 0.5), (0.5, 0.3), (0.9, 0.3)]
    lines = format_report(pts).splitlines()
    assert len(lines) == 5 and lines[0].split()[0] == "scheme"


def test_empty_and_single(tmp_path):
    empty = tmp_path / "e.csv"
    empty.write_text("")
    assert format_report(summarize(*read_table(empty))).count("\n") == 1
    header_only = tmp_path / "h.csv"
    header_only.write_text(",".join(RESULT_COLUMNS) + "\n")
    assert summarize(*read_table(header_only)) == []


def test_malformed(tmp_path):
    bad = tmp_path / "b.csv"
    bad.write_text("scheme,alpha\nglobal,0.3\n")
    with pytest.raises(ResultsError):
        summarize(*read_table(bad))
    ragged = tmp_path / "r.csv"
    ragged.write_text(",".join(RESULT_COLUMNS) + "\nglobal,0.3\n")
    with pytest.raises(ResultsError):
        read_table(ragged)
    with pytest.raises(ResultsError):
        read_table(tmp_path / "missing.csv")
    nonnum = tmp_path / "n.csv"
    nonnum.write_text(",".join(RESULT_COLUMNS) + "\n" + ",".join(["global", "x"] + ["1"] * 10) + "\n")
    with pytest.raises(ResultsError):
        summarize(*read_table(nonnum))
