"""
Tests for the runtime benchmark suite
"""
import json

import pandas as pd
import pytest

from benchmark import BUDGETS_MS, BenchmarkType, OptomechBenchmark

NAMES = ["solve_cubic", "fig1_sweep", "variances_closed_form", "variances_by_quadrature", "integrate"]


@pytest.fixture(scope="module")
def suite(reference):
    bench = OptomechBenchmark(reference, iterations=2)
    bench.run_all()
    return bench


def test_every_operation_timed(suite):
    assert [r.name for r in suite.results] == NAMES
    for result in suite.results:
        assert result.iterations >= 1
        assert result.min_value <= result.median <= result.max_value
        assert result.budget_ms == BUDGETS_MS[result.benchmark_type]


def test_reports_written(suite, tmp_path):
    out = suite.generate_performance_report(tmp_path / "bench")
    frame = pd.read_csv(out / "benchmark_results.csv")
    assert frame["Benchmark"].tolist() == NAMES
    report = json.loads((out / "benchmark_results.json").read_text())
    assert report["benchmark_config"]["iterations"] == 2
    assert report["system_info"]["cpu_count"] >= 1
    assert len(report["results"]) == len(NAMES)


def test_summary_table(suite):
    table = suite.summary_table()
    for name in NAMES:
        assert name in table


def test_statistics(reference):
    bench = OptomechBenchmark(reference, iterations=1)
    result = bench._create_benchmark_result("probe", BenchmarkType.VARIANCE, [0.5, 1.5, 1.0])
    assert result.mean == pytest.approx(1.0)
    assert result.median == 1.0
    assert result.std_dev == pytest.approx(0.5)
    assert result.within_budget
    assert bench.summary_table() == "No benchmark results to display"
