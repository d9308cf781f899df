import csv

import numpy as np
import pytest
from scipy import stats

from ksumindex import preprocess
from ksumindex.bench import (CSV_COLUMNS, InsufficientPointsError, fit_slope, make_instance,
                             query_cap, query_sample, read_csv, run_scaling)
from ksumindex.sumfn import enumerate_sumset

GRID = [4, 8, 16, 32]


@pytest.fixture(scope="module")
def report():
    return run_scaling(3, 0.75, "general", GRID, [0, 1], queries=40)


def test_fit_recovers_exact_power_law():
    ns = [64, 128, 256, 512, 1024]
    assert fit_slope(ns, [3 * n ** 1.75 for n in ns]) == pytest.approx(1.75, abs=1e-12)


def test_fit_needs_four_points():
    with pytest.raises(InsufficientPointsError):
        fit_slope([2, 4, 8, 8], [1, 2, 3, 4])


def test_three_point_grid_rejected():
    with pytest.raises(InsufficientPointsError):
        run_scaling(3, 0.75, "general", [4, 8, 16], [0])


def test_rows_sorted_and_complete(report):
    assert [(r.n, r.seed) for r in report.rows] == [(n, s) for n in GRID for s in (0, 1)]
    assert not report.failures
    for row in report.rows:
        assert row.max_query_steps <= query_cap(row)
        assert row.mean_query_steps <= row.max_query_steps


def test_rows_deterministic(report):
    again = run_scaling(3, 0.75, "general", GRID, [0, 1], queries=40)
    strip = lambda rows: [r.__dict__ | {"build_seconds": 0} for r in rows]  # noqa: E731
    assert strip(again.rows) == strip(report.rows)


def test_stored_words_is_exact_space(report):
    row = report.rows[-1]
    idx = preprocess(make_instance(row.n, row.k, row.seed), row.delta, row.mode, seed=row.seed)
    assert row.stored_words == idx.space_words() == len(idx.serialize()) // 8
    assert row.L == idx.L and row.retries == idx.stats.retries


def test_csv_column_order_and_independent_refit(report, tmp_path):
    path = tmp_path / "out.csv"
    report.write_csv(path)
    with open(path, newline="") as fh:
        header = next(csv.reader(fh))
    assert tuple(header) == CSV_COLUMNS == (
        "n", "k", "delta", "mode", "seed", "stored_words", "mean_query_steps",
        "max_query_steps", "build_seconds", "retries", "L")
    assert read_csv(path) == report.rows
    with open(path, newline="") as fh:
        recs = list(csv.DictReader(fh))
    x = np.log2([float(r["n"]) for r in recs])
    for column, slope in (("stored_words", report.fitted_space_slope),
                          ("mean_query_steps", report.fitted_steps_slope)):
        y = np.log2([float(r[column]) for r in recs])
        assert abs(stats.linregress(x, y).slope - slope) < 1e-9


def test_query_sample_is_half_members():
    idx = preprocess(make_instance(8, 3, 0), 0.75)
    cs = query_sample(idx, 101, np.random.default_rng(0))
    inside = enumerate_sumset(idx.instance).contains(cs)
    assert len(cs) == 101
    assert inside[:50].all() and not inside[50:].any()


def test_summary_fields(report):
    summary = report.summary()
    assert set(summary) == {"rows", "failures", "fitted_space_slope", "fitted_steps_slope"}
    assert summary["rows"] == len(GRID) * 2
