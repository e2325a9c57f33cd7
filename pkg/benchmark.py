"""
Performance Benchmarking
Timing of the steady-state solver, figure sweeps, variance paths and time-domain integration
against their runtime budgets
"""

import gc
import json
import logging
import multiprocessing
import statistics
import sys
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Union

import numpy as np
import pandas as pd
import psutil
from tabulate import tabulate

from errors import OptomechError
from mechvar import variances_by_quadrature, variances_closed_form
from params import PhysicalParams, derive_scalars
from steadystate import solve_cubic
from sweep import Sideband, figure_spec, resolve_operating_point, run_sweep
from timedomain import fixed_point_state, integrate

logger = logging.getLogger(__name__)


class BenchmarkType(Enum):
    """Operations with a runtime budget"""
    STEADY_STATE = "steady_state"
    SWEEP = "sweep"
    VARIANCE = "variance"
    QUADRATURE = "quadrature"
    TIME_DOMAIN = "time_domain"


# Median wall time allowed per call, ms
BUDGETS_MS: Dict[BenchmarkType, float] = {
    BenchmarkType.STEADY_STATE: 1.0,
    BenchmarkType.SWEEP: 1000.0,
    BenchmarkType.VARIANCE: 1.0,
    BenchmarkType.QUADRATURE: 10_000.0,
    BenchmarkType.TIME_DOMAIN: 10_000.0,
}


@dataclass
class BenchmarkResult:
    """Timing statistics of one operation, in milliseconds"""
    name: str
    benchmark_type: BenchmarkType
    iterations: int
    measurements: List[float]
    mean: float
    median: float
    std_dev: float
    min_value: float
    max_value: float
    percentile_95: float
    budget_ms: float
    within_budget: bool
    metadata: Dict[str, Any] = field(default_factory=dict)


@dataclass
class SystemInfo:
    cpu_count: int
    cpu_freq: float
    memory_total: float  # GB
    python_version: str
    platform: str
    timestamp: datetime


class PerformanceMonitor:
    """Samples CPU and resident memory of this process while a benchmark runs"""

    def __init__(self, interval: float = 0.05):
        self.interval = interval
        self.monitoring = False
        self.cpu_readings: List[float] = []
        self.memory_readings: List[float] = []
        self.monitor_thread: Optional[threading.Thread] = None

    def start_monitoring(self):
        """Sample CPU and RSS on a daemon thread"""
        self.monitoring = True
        self.cpu_readings.clear()
        self.memory_readings.clear()
        self.monitor_thread = threading.Thread(target=self._monitor_loop, daemon=True)
        self.monitor_thread.start()

    def stop_monitoring(self) -> Dict[str, float]:
        """Join the sampler and return peak and mean readings"""
        self.monitoring = False
        if self.monitor_thread:
            self.monitor_thread.join(timeout=1.0)
        if self.cpu_readings and self.memory_readings:
            return {
                "avg_cpu_percent": statistics.mean(self.cpu_readings),
                "max_cpu_percent": max(self.cpu_readings),
                "avg_memory_mb": statistics.mean(self.memory_readings),
                "max_memory_mb": max(self.memory_readings),
            }
        return {}

    def _monitor_loop(self):
        """Poll psutil until stop_monitoring is called"""
        process = psutil.Process()
        while self.monitoring:
            try:
                self.cpu_readings.append(process.cpu_percent())
                self.memory_readings.append(process.memory_info().rss / 1024 / 1024)
            except psutil.Error:
                break
            time.sleep(self.interval)


class OptomechBenchmark:
    """Runtime benchmark suite for the simulator's hot paths"""

    def __init__(self, params: PhysicalParams, iterations: int = 20):
        self.params = params
        self.iterations = iterations
        self.monitor = PerformanceMonitor()
        self.system_info = self._get_system_info()
        self.results: List[BenchmarkResult] = []
        logger.info(f"Benchmark initialized with {iterations} iterations per test on "
                    f"{self.system_info.cpu_count} CPUs, {self.system_info.memory_total:.1f} GB RAM")

    def _get_system_info(self) -> SystemInfo:
        freq = psutil.cpu_freq()
        return SystemInfo(
            cpu_count=multiprocessing.cpu_count(),
            cpu_freq=freq.current if freq else 0.0,
            memory_total=psutil.virtual_memory().total / (1024 ** 3),
            python_version=sys.version,
            platform=sys.platform,
            timestamp=datetime.now(),
        )

    def _measure_operation(self, operation: Callable[[], Any], iterations: int) -> List[float]:
        operation()  # warm up
        gc.collect()
        measurements = []
        for _ in range(iterations):
            start = time.perf_counter()
            operation()
            measurements.append((time.perf_counter() - start) * 1000.0)
        return measurements

    def _create_benchmark_result(self, name: str, benchmark_type: BenchmarkType,
                                 measurements: List[float],
                                 metadata: Optional[Dict[str, Any]] = None) -> BenchmarkResult:
        budget = BUDGETS_MS[benchmark_type]
        median = statistics.median(measurements)
        return BenchmarkResult(
            name=name,
            benchmark_type=benchmark_type,
            iterations=len(measurements),
            measurements=measurements,
            mean=statistics.mean(measurements),
            median=median,
            std_dev=statistics.stdev(measurements) if len(measurements) > 1 else 0.0,
            min_value=min(measurements),
            max_value=max(measurements),
            percentile_95=float(np.percentile(measurements, 95)),
            budget_ms=budget,
            within_budget=median <= budget,
            metadata=metadata or {},
        )

    def _run(self, name: str, benchmark_type: BenchmarkType, operation: Callable[[], Any],
             iterations: int) -> Optional[BenchmarkResult]:
        self.monitor.start_monitoring()
        try:
            measurements = self._measure_operation(operation, iterations)
        except OptomechError as e:
            logger.error(f"Benchmark {name} failed: {e}")
            return None
        finally:
            usage = self.monitor.stop_monitoring()
        result = self._create_benchmark_result(name, benchmark_type, measurements, usage)
        status = "within" if result.within_budget else "OVER"
        logger.info(f"{name}: median {result.median:.3f} ms ({status} budget {result.budget_ms:g} ms)")
        self.results.append(result)
        return result

    def run_all(self) -> List[BenchmarkResult]:
        p = self.params
        d = derive_scalars(p)
        # variances run on the cooling sideband, as the figure presets do
        ep = resolve_operating_point(p, {}, sideband=Sideband.COOLING).model
        omega_max = 20.0 * max(p.omega_m, p.kappa)
        start = fixed_point_state(p, d, p.detuning)
        few = max(1, self.iterations // 10)

        self.results = []
        self._run("solve_cubic", BenchmarkType.STEADY_STATE,
                  lambda: solve_cubic(p, d, p.detuning), self.iterations)
        self._run("fig1_sweep", BenchmarkType.SWEEP,
                  lambda: run_sweep(p, figure_spec("fig1")), few)
        self._run("variances_closed_form", BenchmarkType.VARIANCE,
                  lambda: variances_closed_form(p, ep), self.iterations)
        self._run("variances_by_quadrature", BenchmarkType.QUADRATURE,
                  lambda: variances_by_quadrature(p, ep, omega_max, 1e-6), few)
        self._run("integrate", BenchmarkType.TIME_DOMAIN,
                  lambda: integrate(p, d, p.detuning, start, 200.0 / p.omega_m), few)
        return self.results

    def summary_frame(self) -> pd.DataFrame:
        return pd.DataFrame([{
            "Benchmark": r.name,
            "Type": r.benchmark_type.value,
            "Mean": r.mean,
            "Median": r.median,
            "StdDev": r.std_dev,
            "Min": r.min_value,
            "Max": r.max_value,
            "P95": r.percentile_95,
            "BudgetMs": r.budget_ms,
            "WithinBudget": r.within_budget,
            "Iterations": r.iterations,
        } for r in self.results])

    def generate_performance_report(self, output_dir: Union[str, Path] = "benchmark_results") -> Path:
        output_dir = Path(output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        df = self.summary_frame()

        csv_file = output_dir / "benchmark_results.csv"
        df.to_csv(csv_file, index=False)
        logger.info(f"CSV report saved: {csv_file}")

        json_file = output_dir / "benchmark_results.json"
        json_data = {
            "system_info": {
                "cpu_count": self.system_info.cpu_count,
                "cpu_freq": self.system_info.cpu_freq,
                "memory_total": self.system_info.memory_total,
                "python_version": self.system_info.python_version,
                "platform": self.system_info.platform,
                "timestamp": self.system_info.timestamp.isoformat(),
            },
            "benchmark_config": {"iterations": self.iterations},
            "results": df.to_dict(orient="records"),
            "usage": {r.name: r.metadata for r in self.results},
        }
        with open(json_file, "w", encoding="utf-8") as f:
            json.dump(json_data, f, indent=2)
        logger.info(f"JSON report saved: {json_file}")
        return output_dir

    def summary_table(self) -> str:
        if not self.results:
            return "No benchmark results to display"
        rows = [(r.name, f"{r.median:.3f}", f"{r.percentile_95:.3f}", f"{r.budget_ms:g}",
                 "yes" if r.within_budget else "NO") for r in self.results]
        return tabulate(rows, headers=["benchmark", "median ms", "p95 ms", "budget ms", "ok"],
                        tablefmt="github")
