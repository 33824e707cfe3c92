"""Run records and the per-iteration trace CSV."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from .planner import PlannerParams, PlanResult

TRACE_HEADER = ("iteration", "path_id", "cost", "best_cost", "inactive_leaves")


@dataclass
class RunRecord:
    scenario: object  # Scenario
    params: PlannerParams
    result: PlanResult

    @property
    def name(self) -> str:
        return self.scenario.name

    @property
    def rows(self) -> list:
        return sorted(self.result.rows, key=lambda r: (r.iteration, r.path_id))


def _fmt(x: float) -> str:
    # repr gives the shortest round-tripping form, identical on every run
    return repr(float(x))


def trace_csv(record: RunRecord) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for r in record.rows:
        w.writerow([r.iteration, r.path_id, _fmt(r.cost), _fmt(r.best_cost), r.inactive_leaves])
    return buf.getvalue()


def write_trace(record: RunRecord, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(trace_csv(record))


def read_trace(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))
