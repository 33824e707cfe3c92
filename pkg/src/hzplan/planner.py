"""The informed hybrid-zonotope planning loop."""
from __future__ import annotations

import logging
import math
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from .adjacency import CandidatePath, LeafGraph, build_leaf_graph, enumerate_paths
from .construct import (
    ENUMERATION_CAP,
    VRepDecomposition,
    build_hz_from_vrep,
    decompose_free_space_2d,
    enumerate_leaves,
    find_containing_leaf,
)
from .errors import ContractViolation
from .informed import InformedSet, LeafLabel, classify_leaf, prune_graph, update_reachable_set
from .parallel import parallel_map
from .sampling import FacePolytope, SamplerKind, sample_face
from .scenario import Scenario

log = logging.getLogger(__name__)

IMPROVEMENT_TOL = 1e-12


@dataclass(frozen=True)
class PlannerParams:
    n_max: int = 20
    n_samples: int = 100
    seed: int = 0
    sampler: SamplerKind = field(default_factory=SamplerKind)
    max_paths: int = 64
    max_len: int | None = None
    convergence_window: int = 3
    convergence_rel_tol: float = 1e-4
    workers: int | None = None
    enumeration_cap: int = ENUMERATION_CAP

    def __post_init__(self):
        if self.n_max < 1 or self.n_samples < 1:
            raise ContractViolation("n_max and n_samples must be >= 1")
        if self.convergence_rel_tol < 0 or self.convergence_window < 1:
            raise ContractViolation("convergence settings out of range")


@dataclass(frozen=True, eq=False)
class WaypointPath:
    waypoints: np.ndarray  # (k, n): one point per leaf transition
    leaf_sequence: CandidatePath
    cost: float

    def polyline(self, xs, xg) -> np.ndarray:
        return np.vstack([np.asarray(xs, float)[None], self.waypoints, np.asarray(xg, float)[None]])


def path_cost(waypoints, xs, xg) -> float:
    """Length of the polyline start -> waypoints -> goal."""
    pts = np.vstack([np.asarray(xs, float)[None], np.asarray(waypoints, float).reshape(-1, len(xs)), np.asarray(xg, float)[None]])
    return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())


def optimize_waypoints(path: CandidatePath, samples, xs, xg) -> WaypointPath:
    """Exact minimum-cost choice of one sample per face (layered-graph DP).

    ``samples[j]`` holds the candidate points on the ``j``-th transition face.
    Among equal-cost choices the lexicographically smallest sample indices win.
    """
    xs, xg = np.asarray(xs, float), np.asarray(xg, float)
    if len(path) == 0:
        return WaypointPath(np.zeros((0, xs.size)), path, float(np.linalg.norm(xg - xs)))
    stages = [np.asarray(S, float).reshape(-1, xs.size) for S in samples]
    if len(stages) != len(path) or any(len(S) == 0 for S in stages):
        raise ContractViolation("every face needs at least one sample")
    # cost-to-go, computed backwards
    ctg = [None] * len(stages)
    ctg[-1] = np.linalg.norm(stages[-1] - xg, axis=1)
    for j in range(len(stages) - 2, -1, -1):
        D = np.linalg.norm(stages[j][:, None, :] - stages[j + 1][None, :, :], axis=2)
        ctg[j] = (D + ctg[j + 1][None, :]).min(axis=1)
    total = np.linalg.norm(stages[0] - xs, axis=1) + ctg[0]
    idx = [int(np.argmin(total))]
    for j in range(1, len(stages)):
        prev = stages[j - 1][idx[-1]]
        idx.append(int(np.argmin(np.linalg.norm(stages[j] - prev, axis=1) + ctg[j])))
    wps = np.array([stages[j][i] for j, i in enumerate(idx)])
    return WaypointPath(wps, path, path_cost(wps, xs, xg))


class BestTracker:
    """Global best path; updates are serialized and strictly improving."""

    def __init__(self):
        self._lock = threading.Lock()
        self.path: WaypointPath | None = None

    @property
    def cost(self) -> float:
        return math.inf if self.path is None else self.path.cost

    def update(self, candidate: WaypointPath) -> bool:
        if not math.isfinite(candidate.cost):
            raise ContractViolation("candidate cost must be finite")
        with self._lock:
            if candidate.cost < self.cost - IMPROVEMENT_TOL:
                self.path = candidate
                return True
            return False


def update_global_best(tracker: BestTracker, candidate: WaypointPath) -> bool:
    return tracker.update(candidate)


@dataclass
class TraceRow:
    iteration: int
    path_id: int
    cost: float
    best_cost: float
    inactive_leaves: int


@dataclass
class PlanResult:
    status: str  # "solved" or "unreachable"
    best_path: WaypointPath | None
    cost_trace: list = field(default_factory=list)  # (iteration, {path_id: cost}, best_cost)
    prune_stats: list = field(default_factory=list)
    wall_times: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    regions: list = field(default_factory=list)
    graph: LeafGraph | None = None  # leaf graph before any pruning
    pruned_graph: LeafGraph | None = None
    start_leaf: int | None = None
    goal_leaf: int | None = None
    informed: InformedSet | None = None
    path_ids: dict = field(default_factory=dict)
    iterations: int = 0

    @property
    def best_cost(self) -> float:
        return math.inf if self.best_path is None else self.best_path.cost

    @property
    def solved(self) -> bool:
        return self.best_path is not None


def free_regions(scenario: Scenario):
    if scenario.obstacles is not None:
        return decompose_free_space_2d(scenario.workspace, scenario.obstacles)
    return list(scenario.free_regions)


def plan(scenario: Scenario, params: PlannerParams | None = None) -> PlanResult:
    """Run the planner on a scenario.

    Raises
    ------
    StateInObstacle
        If start or goal lies outside every leaf.
    EnumerationBudgetExceeded
        If the hybrid zonotope has too many unstructured binaries.
    """
    params = params or PlannerParams()
    xs, xg = scenario.start, scenario.goal
    times = {}
    t0 = time.perf_counter()
    regions = free_regions(scenario)
    hz = build_hz_from_vrep(VRepDecomposition.from_regions(regions))
    leaves = enumerate_leaves(hz, params.enumeration_cap)
    times["decomposition"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    graph = build_leaf_graph(hz, leaves, params.workers)
    i_start = find_containing_leaf(xs, leaves)
    i_goal = find_containing_leaf(xg, leaves)
    paths = enumerate_paths(graph.adjacency, i_start, i_goal, params.max_paths, params.max_len)
    times["adjacency"] = time.perf_counter() - t0

    result = PlanResult(
        "unreachable", None, regions=regions, graph=graph, pruned_graph=graph, start_leaf=i_start, goal_leaf=i_goal
    )
    if not paths:
        result.wall_times = times
        return result

    polys: dict = {}
    poly_lock = threading.Lock()

    def face_polytope(a, b):
        key = (a, b)
        with poly_lock:
            fp = polys.get(key)
        if fp is None:
            fp = FacePolytope(result.graph.face(a, b))
            with poly_lock:
                fp = polys.setdefault(key, fp)
        return fp

    path_ids: dict = {}
    best = BestTracker()
    informed: InformedSet | None = None
    straight = float(np.linalg.norm(xg - xs))
    history = []
    inactive_count = 0
    t_sample = t_prune = 0.0

    iteration = 0
    while iteration < params.n_max:
        iteration += 1
        for p in paths:
            path_ids.setdefault(p.leaves, len(path_ids))
        live = [p for p in paths if not p.pruned]
        E = informed

        def evaluate(p: CandidatePath):
            pid = path_ids[p.leaves]
            ss = np.random.SeedSequence([params.seed, iteration, pid])
            children = ss.spawn(max(1, len(p)))
            accept = E.contains if E is not None else None
            stages = []
            for (a, b), child in zip(p.transitions, children):
                S = sample_face(face_polytope(a, b), params.n_samples, params.sampler, child, accept=accept)
                if len(S) == 0:
                    return pid, None
                stages.append(S)
            return pid, optimize_waypoints(p, stages, xs, xg)

        t1 = time.perf_counter()
        evaluated = parallel_map(evaluate, live, params.workers)
        t_sample += time.perf_counter() - t1

        per_path = {}
        improved = False
        for pid, wp in sorted(evaluated, key=lambda r: r[0]):
            cost = math.inf if wp is None else wp.cost
            per_path[pid] = cost
            if wp is not None and best.update(wp):
                improved = True
            result.rows.append(TraceRow(iteration, pid, cost, best.cost, inactive_count))
        result.cost_trace.append((iteration, per_path, best.cost))

        labels = None
        t1 = time.perf_counter()
        at_lower_bound = best.path is not None and best.cost <= straight * (1 + 1e-12)
        if improved:
            informed = update_reachable_set(xs, xg, max(best.cost, straight))
        if improved and not at_lower_bound:
            labels = parallel_map(lambda lf: classify_leaf(informed, lf), graph.leaves, params.workers)
            pr = prune_graph(graph, informed, labels, i_start, i_goal, paths, params.max_paths, params.max_len)
            graph, paths = pr.graph, pr.paths
            inactive_count = sum(1 for lab in labels if lab is LeafLabel.INACTIVE)
        t_prune += time.perf_counter() - t1
        stats = {
            "iteration": iteration,
            "surviving_paths": sum(1 for p in paths if not p.pruned),
            "inactive": inactive_count,
        }
        if labels is not None:
            stats["c_best"] = informed.c_best
            stats["inactive_ids"] = [i for i, lab in enumerate(labels) if lab is LeafLabel.INACTIVE]
            stats["partial"] = sum(1 for lab in labels if lab is LeafLabel.PARTIAL)
            stats["active"] = sum(1 for lab in labels if lab is LeafLabel.ACTIVE)
        result.prune_stats.append(stats)

        history.append(best.cost)
        if at_lower_bound:
            break
        w = params.convergence_window
        if len(history) > w and math.isfinite(history[-1 - w]):
            old, new = history[-1 - w], history[-1]
            if (old - new) <= params.convergence_rel_tol * old:
                log.info("converged after %d iterations", iteration)
                break

    times["sampling"] = t_sample
    times["pruning"] = t_prune
    result.status = "solved" if best.path is not None else "unreachable"
    result.best_path = best.path
    result.wall_times = times
    result.pruned_graph = graph
    result.informed = informed
    result.path_ids = path_ids
    result.iterations = iteration
    return result
