"""Benchmark harness: planner runs against the exact 2-D oracle."""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import Unreachable
from .oracle import visibility_graph_oracle
from .planner import PlannerParams, plan
from .scenario import load_scenario

MEAN_GAP_LIMIT = 1.0  # percent
MAX_GAP_LIMIT = 3.0
ITERATION_LIMIT = 20
ORACLE_SLACK = 1e-9

BENCH_HEADER = ("scenario", "seed", "status", "cost", "oracle_cost", "gap_pct", "iterations", "wall_time_s")


@dataclass
class BenchRow:
    scenario: str
    seed: int
    status: str
    cost: float
    oracle_cost: float | None
    iterations: int
    wall_time: float
    monotone: bool

    @property
    def gap_pct(self) -> float | None:
        if self.oracle_cost is None or not math.isfinite(self.cost):
            return None
        return 100.0 * (self.cost - self.oracle_cost) / self.oracle_cost


@dataclass
class BenchSummary:
    rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def scenarios(self) -> list[str]:
        return list(dict.fromkeys(r.scenario for r in self.rows))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(BENCH_HEADER)
        for r in self.rows:
            gap = r.gap_pct
            w.writerow([
                r.scenario, r.seed, r.status, repr(r.cost),
                "n/a" if r.oracle_cost is None else repr(r.oracle_cost),
                "n/a" if gap is None else f"{gap:.6f}",
                r.iterations, f"{r.wall_time:.3f}",
            ])
        return buf.getvalue()

    def table(self) -> str:
        """Per-scenario mean/min/max of cost, gap, iterations and time."""
        head = f"{'scenario':<16}{'runs':>5}{'cost mean':>12}{'min':>10}{'max':>10}{'gap% mean':>11}{'max':>8}{'iters':>7}{'time s':>8}"
        lines = [head, "-" * len(head)]
        for name in self.scenarios():
            rs = [r for r in self.rows if r.scenario == name]
            costs = [r.cost for r in rs if math.isfinite(r.cost)]
            gaps = [r.gap_pct for r in rs if r.gap_pct is not None]

            def f(v, width, prec):
                return f"{v:>{width}.{prec}f}" if v is not None else f"{'n/a':>{width}}"

            lines.append(
                f"{name:<16}{len(rs):>5}"
                f"{f(sum(costs) / len(costs) if costs else None, 12, 4)}"
                f"{f(min(costs) if costs else None, 10, 4)}{f(max(costs) if costs else None, 10, 4)}"
                f"{f(sum(gaps) / len(gaps) if gaps else None, 11, 3)}{f(max(gaps) if gaps else None, 8, 3)}"
                f"{max(r.iterations for r in rs):>7}{sum(r.wall_time for r in rs) / len(rs):>8.2f}"
            )
        if self.failures:
            lines.append("")
            lines.extend(f"FAIL: {msg}" for msg in self.failures)
        return "\n".join(lines)


def _monotone(result) -> bool:
    best = [r.best_cost for r in sorted(result.rows, key=lambda r: (r.iteration, r.path_id))]
    return all(b <= a for a, b in zip(best, best[1:]))


def run_benchmark(scenario_dir, params: PlannerParams | None = None, seeds=(0,)) -> BenchSummary:
    """Plan every ``*.json`` scenario in ``scenario_dir`` once per seed.

    Thresholds checked per scenario: oracle cost never above a planner cost,
    mean gap <= 1 %, max gap <= 3 %, at most 20 iterations, a non-increasing
    best-cost trace and a solution on every run.
    """
    params = params or PlannerParams()
    summary = BenchSummary()
    for path in sorted(Path(scenario_dir).glob("*.json")):
        sc = load_scenario(path)
        name = sc.name or path.stem
        oracle = None
        if sc.dimension == 2 and sc.obstacles is not None:
            try:
                oracle = visibility_graph_oracle(sc)
            except Unreachable:
                oracle = math.inf
        rows = []
        for seed in seeds:
            t0 = time.perf_counter()
            res = plan(sc, replace(params, seed=int(seed)))
            rows.append(BenchRow(name, int(seed), res.status, res.best_cost, oracle, res.iterations,
                                 time.perf_counter() - t0, _monotone(res)))
        summary.rows.extend(rows)
        for r in rows:
            if not r.monotone:
                summary.failures.append(f"{name} seed {r.seed}: best cost increased")
            if r.iterations > ITERATION_LIMIT:
                summary.failures.append(f"{name} seed {r.seed}: {r.iterations} iterations")
            if oracle == math.inf:
                if r.status == "solved":
                    summary.failures.append(f"{name} seed {r.seed}: solved a scene the oracle calls unreachable")
                continue
            if r.status != "solved":
                summary.failures.append(f"{name} seed {r.seed}: no path found")
            elif oracle is not None and oracle > r.cost + ORACLE_SLACK:
                summary.failures.append(f"{name} seed {r.seed}: cost {r.cost} below oracle {oracle}")
        gaps = [r.gap_pct for r in rows if r.gap_pct is not None]
        if gaps and math.isfinite(oracle):
            if sum(gaps) / len(gaps) > MEAN_GAP_LIMIT:
                summary.failures.append(f"{name}: mean gap {sum(gaps) / len(gaps):.3f}% > {MEAN_GAP_LIMIT}%")
            if max(gaps) > MAX_GAP_LIMIT:
                summary.failures.append(f"{name}: max gap {max(gaps):.3f}% > {MAX_GAP_LIMIT}%")
    return summary
