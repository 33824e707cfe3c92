"""Leaf intersection tests, contact classification, shared faces and leaf paths."""
from __future__ import annotations

import enum
import itertools
import logging
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .construct import Leaf
from .errors import ContractViolation, HzPlanError
from .numeric import CONSISTENCY_TOL, FEAS_TOL, LinearProgram, least_squares_residual, solve_lp
from .parallel import parallel_map
from .sets import ConstrainedZonotope, HybridZonotope

log = logging.getLogger(__name__)

CONTACT_TOL = 1e-7
MAX_PATHS = 64


class ContactKind(enum.Enum):
    DISJOINT = "disjoint"
    TANGENT = "tangent"
    OVERLAP = "overlap"


@dataclass(frozen=True)
class ContactReport:
    kind: ContactKind
    delta_star: float = float("nan")
    witness: tuple | None = None  # (xi_c, delta_xi_c) of the intersection system


def consistency_check(hz: HybridZonotope, delta_xi_b, tol: float = CONSISTENCY_TOL) -> bool:
    """Whether ``N delta_xi_b`` lies in the range of ``M = [Gc; Ac]``."""
    y = hz.N @ np.asarray(delta_xi_b, dtype=float)
    _, res = least_squares_residual(hz.M, y)
    return res <= tol * (1.0 + float(np.linalg.norm(y)))


def _pair_system(hz: HybridZonotope, li: Leaf, lj: Leaf):
    """Equality rows over the stacked factors ``(xi_i, xi_j)``.

    ``M (xi_j - xi_i) = -N (xi_b_j - xi_b_i)`` expresses that both factor
    vectors map to the same point and satisfy the constraints of their own
    leaf once ``A_c xi_i = r_i`` pins leaf ``i``.
    """
    M, N = hz.M, hz.N
    ng = hz.n_gen
    dxb = lj.binary - li.binary
    rows = np.vstack([np.hstack([-M, M]), np.hstack([hz.Ac, np.zeros((hz.n_con, ng))])])
    rhs = np.concatenate([-N @ dxb, hz.b - hz.Ab @ li.binary])
    return rows, rhs


def intersection_witness(hz: HybridZonotope, li: Leaf, lj: Leaf, *, shortcut: bool = True, lp_calls=None):
    """Feasible ``(xi_c, delta_xi_c)`` of the pairwise intersection system, or None.

    With ``shortcut`` the LP is skipped when the linear consistency check
    already rules the pair out. ``lp_calls`` (a list) records each LP solve.
    """
    if li.id == lj.id:
        raise ContractViolation("intersection test needs two distinct leaves")
    if shortcut and not consistency_check(hz, lj.binary - li.binary):
        return None
    rows, rhs = _pair_system(hz, li, lj)
    ng = hz.n_gen
    if lp_calls is not None:
        lp_calls.append((li.id, lj.id))
    out = solve_lp(LinearProgram(np.zeros(2 * ng), rows, rhs, -np.ones(2 * ng), np.ones(2 * ng)))
    if not out.optimal:
        return None
    xi_i, xi_j = out.point[:ng], out.point[ng:]
    return xi_i, xi_j - xi_i


def leaf_intersect_feasible(hz: HybridZonotope, li: Leaf, lj: Leaf, **kw) -> bool:
    return intersection_witness(hz, li, lj, **kw) is not None


def contact_type(hz: HybridZonotope, li: Leaf, lj: Leaf, tol: float = CONTACT_TOL) -> ContactReport:
    """Classify two intersecting leaves by the largest uniform box tightening ``delta``."""
    witness = intersection_witness(hz, li, lj)
    if witness is None:
        return ContactReport(ContactKind.DISJOINT)
    rows, rhs = _pair_system(hz, li, lj)
    ng = hz.n_gen
    nx_ = 2 * ng
    # variables: xi (2 ng), delta, slacks for +xi + delta <= 1 and -xi + delta <= 1
    nvar = nx_ + 1 + 2 * nx_
    A = np.zeros((rows.shape[0] + 2 * nx_, nvar))
    A[: rows.shape[0], :nx_] = rows
    r0 = rows.shape[0]
    eye = np.eye(nx_)
    A[r0 : r0 + nx_, :nx_] = eye
    A[r0 + nx_ :, :nx_] = -eye
    A[r0:, nx_] = 1.0
    A[r0:, nx_ + 1 :] = np.eye(2 * nx_)
    b = np.concatenate([rhs, np.ones(2 * nx_)])
    lo = np.concatenate([-np.ones(nx_), [0.0], np.zeros(2 * nx_)])
    hi = np.concatenate([np.ones(nx_), [1.0], np.full(2 * nx_, np.inf)])
    obj = np.zeros(nvar)
    obj[nx_] = 1.0
    out = solve_lp(LinearProgram(obj, A, b, lo, hi))
    if not out.optimal:
        raise HzPlanError("tightened contact LP infeasible although the leaves intersect")
    delta = max(0.0, out.value)
    xi_i, xi_j = out.point[:ng], out.point[ng:nx_]
    kind = ContactKind.OVERLAP if delta > tol else ContactKind.TANGENT
    return ContactReport(kind, delta, (xi_i, xi_j - xi_i))


def shared_face(hz: HybridZonotope, li: Leaf, lj: Leaf, adjacency=None) -> ConstrainedZonotope:
    """Intersection of two adjacent leaves as a generalized intersection.

    The result is parameterized by the stacked factors ``(xi_i, xi_j)`` with
    generators ``[Gc 0]`` anchored at leaf ``i``.
    """
    if adjacency is not None and not adjacency[li.id, lj.id]:
        raise ContractViolation(f"leaves {li.id} and {lj.id} are not adjacent")
    return li.set.intersect_generalized(lj.set)


def _boxes_disjoint(li: Leaf, lj: Leaf) -> bool:
    scale = max(1.0, float(np.abs(li.box.upper).max()), float(np.abs(lj.box.upper).max()))
    gap = 1e-7 * scale
    return bool(np.any(li.box.lower > lj.box.upper + gap) or np.any(lj.box.lower > li.box.upper + gap))


def adjacency_matrix(hz: HybridZonotope, leaves, workers: int | None = None) -> np.ndarray:
    """Symmetric 0/1 matrix of intersecting leaf pairs (zero diagonal)."""
    n = len(leaves)
    pairs = [(a, b) for a, b in itertools.combinations(range(n), 2) if not _boxes_disjoint(leaves[a], leaves[b])]
    hits = parallel_map(lambda p: leaf_intersect_feasible(hz, leaves[p[0]], leaves[p[1]]), pairs, workers)
    adj = np.zeros((n, n), dtype=int)
    for (a, b), hit in zip(pairs, hits):
        if hit:
            adj[a, b] = adj[b, a] = 1
    return adj


@dataclass(frozen=True)
class CandidatePath:
    leaves: tuple[int, ...]
    pruned: bool = False

    def __len__(self):
        return max(0, len(self.leaves) - 1)

    @property
    def transitions(self) -> list[tuple[int, int]]:
        return list(zip(self.leaves[:-1], self.leaves[1:]))


@dataclass(frozen=True, eq=False)
class LeafGraph:
    leaves: list
    adjacency: np.ndarray
    faces: dict = field(default_factory=dict)

    def face(self, i: int, j: int) -> ConstrainedZonotope:
        return self.faces[(i, j)]

    def without(self, removed) -> LeafGraph:
        """Copy with every edge touching ``removed`` leaves dropped."""
        removed = sorted(set(removed))
        adj = self.adjacency.copy()
        adj[removed, :] = 0
        adj[:, removed] = 0
        faces = {k: v for k, v in self.faces.items() if adj[k]}
        return LeafGraph(self.leaves, adj, faces)


def build_leaf_graph(hz: HybridZonotope, leaves, workers: int | None = None) -> LeafGraph:
    adj = adjacency_matrix(hz, leaves, workers)
    faces = {}
    for a, b in zip(*np.nonzero(adj)):
        a, b = int(a), int(b)
        if a < b:
            F = shared_face(hz, leaves[a], leaves[b])
            faces[(a, b)] = F
            # the reversed face is the same set anchored at the other leaf
            faces[(b, a)] = shared_face(hz, leaves[b], leaves[a])
    return LeafGraph(list(leaves), adj, faces)


def enumerate_paths(adjacency, start: int, goal: int, max_paths: int = MAX_PATHS, max_len: int | None = None):
    """Simple leaf paths from ``start`` to ``goal``, shortest first, ties lexicographic.

    ``max_len`` counts transitions and defaults to the number of leaves.
    """
    adjacency = np.asarray(adjacency)
    n = adjacency.shape[0]
    if not (0 <= start < n and 0 <= goal < n):
        raise ContractViolation("start/goal leaf id out of range")
    if max_len is None:
        max_len = n
    if start == goal:
        return [CandidatePath((start,))]
    G = nx.Graph()
    G.add_nodes_from(range(n))
    G.add_edges_from((int(a), int(b)) for a, b in zip(*np.nonzero(adjacency)) if a < b)
    if not nx.has_path(G, start, goal):
        return []
    found = []
    cutoff_len = None
    for p in nx.shortest_simple_paths(G, start, goal):
        L = len(p) - 1
        if L > max_len or (cutoff_len is not None and L > cutoff_len):
            break
        found.append(tuple(p))
        if len(found) == max_paths and cutoff_len is None:
            cutoff_len = L
    found.sort(key=lambda p: (len(p), p))
    if len(found) > max_paths:
        log.info("path enumeration capped at %d paths", max_paths)
    return [CandidatePath(p) for p in found[:max_paths]]
