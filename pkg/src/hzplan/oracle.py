"""Exact 2-D shortest paths for a point robot (visibility graph + Dijkstra)."""
from __future__ import annotations

import itertools

import networkx as nx
import numpy as np

from .construct import _clip_to_box
from .errors import ContractViolation, StateInObstacle, Unreachable

INTERIOR_TOL = 1e-9


def _halfspaces(poly: np.ndarray):
    """Outward normals ``N`` and offsets ``h`` with ``N x <= h`` inside (CCW input)."""
    e = np.roll(poly, -1, axis=0) - poly
    N = np.column_stack([e[:, 1], -e[:, 0]])
    N /= np.linalg.norm(N, axis=1, keepdims=True)
    return N, np.einsum("ij,ij->i", N, poly)


def _closed_interval(p, d, N, h, tol):
    """Parameter range ``[t0, t1]`` of ``p + t d`` (t in [0, 1]) inside ``N x <= h + tol``."""
    num = h + tol - N @ p
    den = N @ d
    t0, t1 = 0.0, 1.0
    for nk, dk in zip(num, den):
        if abs(dk) < 1e-15:
            if nk < 0.0:
                return None
            continue
        t = nk / dk
        if dk > 0:
            t1 = min(t1, t)
        else:
            t0 = max(t0, t)
        if t0 > t1:
            return None
    return t0, t1


def segment_blocked(p, q, hs, tol: float = INTERIOR_TOL, workspace=None) -> bool:
    """Whether ``p -> q`` passes through the interior of the obstacle union.

    The segment is cut where it enters or leaves each (closed) obstacle; a
    piece is blocked when its midpoint lies strictly inside an obstacle, or
    on a boundary with obstacles on both sides (a seam between touching
    obstacles). With ``workspace`` given, the outside of the workspace counts
    as an obstacle for the seam test, so an obstacle flush with the border
    leaves no zero-width passage. Grazing a vertex or sliding along an outer
    edge is allowed.
    """
    d = q - p
    length = float(np.linalg.norm(d))
    if length == 0.0:
        return False
    cuts = {0.0, 1.0}
    for N, h in hs:
        iv = _closed_interval(p, d, N, h, tol)
        if iv is not None:
            cuts.update(iv)
    cuts = sorted(cuts)
    side = np.array([-d[1], d[0]]) / length * (100.0 * tol)

    def inside(x, strict):
        if not strict and workspace is not None and not workspace.contains(x, tol=tol):
            return True
        return any(np.all(N @ x < h - tol) if strict else np.all(N @ x <= h + tol) for N, h in hs)

    for a, b in zip(cuts[:-1], cuts[1:]):
        if (b - a) * length <= tol:
            continue
        m = p + 0.5 * (a + b) * d
        if inside(m, strict=True):
            return True
        if inside(m, strict=False) and inside(m + side, strict=False) and inside(m - side, strict=False):
            return True
    return False


def visibility_graph(scenario):
    """Nodes (start, goal, obstacle corners) and the mutually visible pairs."""
    if scenario.dimension != 2 or scenario.obstacles is None:
        raise ContractViolation("the oracle needs a 2-D scenario with obstacles")
    scale = max(1.0, float(np.abs(scenario.workspace.upper).max()), float(np.abs(scenario.workspace.lower).max()))
    tol = INTERIOR_TOL * scale
    polys = []
    for ob in scenario.obstacles:
        P = _clip_to_box(np.asarray(ob.vertices, float), scenario.workspace)
        if len(P):
            P = P[np.linalg.norm(P - np.roll(P, 1, axis=0), axis=1) > tol]
        if len(P) >= 3:
            polys.append(P)
    hs = [_halfspaces(P) for P in polys]
    for name, x in (("start", scenario.start), ("goal", scenario.goal)):
        if any(np.all(N @ x < h - tol) for N, h in hs):
            raise StateInObstacle(f"{name} {x.tolist()} lies inside an obstacle")
    nodes = [scenario.start, scenario.goal] + [v for P in polys for v in P]
    nodes = np.array(nodes, dtype=float)
    G = nx.Graph()
    G.add_nodes_from(range(len(nodes)))
    for i, j in itertools.combinations(range(len(nodes)), 2):
        p, q = nodes[i], nodes[j]
        if not segment_blocked(p, q, hs, tol, scenario.workspace):
            G.add_edge(i, j, weight=float(np.linalg.norm(q - p)))
    return nodes, G


def shortest_path(scenario) -> tuple[float, np.ndarray]:
    """Optimal cost and polyline from start (node 0) to goal (node 1).

    Raises
    ------
    Unreachable
        If no obstacle-free polyline connects start and goal.
    """
    nodes, G = visibility_graph(scenario)
    try:
        cost, idx = nx.single_source_dijkstra(G, 0, 1, weight="weight")
    except nx.NetworkXNoPath:
        raise Unreachable("start and goal are not connected") from None
    return float(cost), nodes[idx]


def visibility_graph_oracle(scenario) -> float:
    return shortest_path(scenario)[0]
