"""Informed ellipsoid from the best cost, leaf labelling and graph pruning."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize_scalar

from .adjacency import LeafGraph, enumerate_paths
from .errors import ContractViolation, DegenerateInformedSet
from .numeric import as_vec, orthonormal_completion
from .sets import Ellipsoid, Ellipsotope, informed_contains

FW_MAX_ITER = 200
FW_GAP_TOL = 1e-6


class LeafLabel(enum.Enum):
    INACTIVE = "inactive"
    PARTIAL = "partial"
    ACTIVE = "active"


@dataclass(frozen=True, eq=False)
class InformedSet:
    """States that could shorten a start/goal path below ``c_best``.

    ``ellipsoid`` is None when ``c_best`` equals the start/goal distance and
    the set collapses to the segment.
    """

    xs: np.ndarray
    xg: np.ndarray
    c_best: float
    center: np.ndarray
    direction: np.ndarray
    a: float
    b: float
    ellipsoid: Ellipsoid | None
    ellipsotope: Ellipsotope

    def contains(self, x) -> bool:
        return informed_contains(self.xs, self.xg, self.c_best, x)

    def distance_sum(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.linalg.norm(x - self.xs) + np.linalg.norm(x - self.xg))


def update_reachable_set(xs, xg, c_best: float) -> InformedSet:
    """Build the informed ellipsoid for the current best cost."""
    xs, xg = as_vec(xs, "xs"), as_vec(xg, "xg")
    d = xg - xs
    dist = float(np.sqrt(d @ d))
    if dist == 0.0:
        raise ContractViolation("start and goal coincide")
    if not math.isfinite(c_best):
        raise ContractViolation("the informed set needs a finite best cost")
    if c_best < dist - 1e-12 * max(1.0, dist):
        raise DegenerateInformedSet(f"c_best={c_best} below straight-line distance {dist}")
    d_hat = d / dist
    center = 0.5 * (xs + xg)
    a = 0.5 * c_best
    b = math.sqrt(max(0.0, a * a - (dist / 2) ** 2))
    U = orthonormal_completion(d_hat)
    G = np.hstack([a * d_hat[:, None], b * U])
    ellipsotope = Ellipsotope(center, G, p=2.0)
    ellipsoid = None
    if b > 0.0:
        P = np.outer(d_hat, d_hat)
        Q = P / a**2 + (np.eye(d.size) - P) / b**2
        ellipsoid = Ellipsoid(center, 0.5 * (Q + Q.T))
    return InformedSet(xs, xg, float(c_best), center, d_hat, a, b, ellipsoid, ellipsotope)


def _box_inside(E: InformedSet, box) -> bool:
    if E.ellipsoid is None:
        return False
    if box.dim <= 12:
        # a convex quadratic peaks at a box corner
        return bool(np.all(E.ellipsoid.quadratic(box.corners()) <= 1.0))
    # interval bound on (x-c)^T Q (x-c) for high dimensions
    lo, hi = box.lower - E.center, box.upper - E.center
    m = np.maximum(np.abs(lo), np.abs(hi))
    return float(m @ np.abs(E.ellipsoid.Q) @ m) <= 1.0


def min_distance_sum(E: InformedSet, leaf, max_iter: int = FW_MAX_ITER, gap_tol: float = FW_GAP_TOL, stop_below=None, stop_above=None):
    """Frank-Wolfe on ``f(x) = |x - xs| + |x - xg|`` over a leaf.

    Returns ``(f_best, lower_bound, iterations)``. The lower bound is the
    Frank-Wolfe certificate ``f(x) - gap`` (valid because ``f`` is convex).
    Iteration stops early once ``f`` drops to ``stop_below`` or the bound
    exceeds ``stop_above``.
    """
    Z = leaf.set
    xi0 = Z.feasible_factors()
    x = Z.point(xi0)
    lower = -math.inf
    fx = E.distance_sum(x)
    for it in range(1, max_iter + 1):
        u, v = x - E.xs, x - E.xg
        nu, nv = np.linalg.norm(u), np.linalg.norm(v)
        if nu == 0.0 or nv == 0.0:
            return fx, fx, it  # x is an endpoint of the segment, a global minimizer
        g = u / nu + v / nv
        _, xi_s = Z.support(-g)
        s = Z.point(xi_s)
        gap = float(g @ (x - s))
        lower = max(lower, fx - gap)
        if gap <= gap_tol:
            return fx, lower, it
        if stop_below is not None and fx <= stop_below:
            return fx, lower, it
        if stop_above is not None and lower > stop_above:
            return fx, lower, it
        res = minimize_scalar(
            lambda t: E.distance_sum(x + t * (s - x)), bounds=(0.0, 1.0), method="bounded",
            options={"xatol": 1e-10},
        )
        t = float(res.x)
        if E.distance_sum(s) < min(res.fun, fx):
            t = 1.0
        xn = x + t * (s - x)
        fn = E.distance_sum(xn)
        if fn < fx:
            x, fx = xn, fn
    return fx, lower, max_iter


def classify_leaf(E: InformedSet, leaf, max_iter: int = FW_MAX_ITER, gap_tol: float = FW_GAP_TOL) -> LeafLabel:
    """Label a leaf against the informed set.

    Active when the leaf's bounding box lies inside the ellipsoid; Inactive
    only when the Frank-Wolfe lower bound on the distance sum certifiably
    exceeds ``c_best``; Partial otherwise (including budget exhaustion).
    """
    if _box_inside(E, leaf.box):
        return LeafLabel.ACTIVE
    fx, lower, _ = min_distance_sum(E, leaf, max_iter, gap_tol, stop_below=E.c_best, stop_above=E.c_best)
    if fx > E.c_best and lower > E.c_best:
        return LeafLabel.INACTIVE
    return LeafLabel.PARTIAL


@dataclass(frozen=True, eq=False)
class PruneResult:
    graph: LeafGraph
    paths: list
    inactive: frozenset
    reenumerated: bool = False

    @property
    def surviving(self) -> list:
        return [p for p in self.paths if not p.pruned]


def prune_graph(graph: LeafGraph, E: InformedSet | None, labels, start: int, goal: int, paths,
                max_paths: int = 64, max_len: int | None = None) -> PruneResult:
    """Drop Inactive leaves from the graph and mark the paths crossing them.

    The path list is only re-enumerated when no candidate survives.
    """
    if E is None:
        return PruneResult(graph, list(paths), frozenset())
    inactive = frozenset(
        i for i, lab in enumerate(labels) if lab is LeafLabel.INACTIVE and i not in (start, goal)
    )
    if not inactive:
        return PruneResult(graph, list(paths), inactive)
    pruned_graph = graph.without(inactive)
    new_paths = [
        p if p.pruned or not inactive.intersection(p.leaves) else replace(p, pruned=True) for p in paths
    ]
    reenum = False
    if not any(not p.pruned for p in new_paths):
        new_paths = enumerate_paths(pruned_graph.adjacency, start, goal, max_paths, max_len)
        reenum = True
    return PruneResult(pruned_graph, new_paths, inactive, reenum)
