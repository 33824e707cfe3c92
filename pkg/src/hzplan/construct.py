"""Free-space decomposition, V-rep to hybrid zonotope conversion and leaf extraction."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import (
    ContractViolation,
    DegenerateRegion,
    EmptyFreeSpace,
    EnumerationBudgetExceeded,
    StateInObstacle,
)
from .numeric import FEAS_TOL, LinearProgram, as_mat, as_vec, solve_lp
from .sets import Box, ConstrainedZonotope, HybridZonotope

log = logging.getLogger(__name__)

SNAP_TOL = 1e-9
ENUMERATION_CAP = 20


@dataclass(frozen=True, eq=False)
class ConvexRegion:
    """Convex polytope given by its vertices (one per row).

    In 2-D the vertices are stored counterclockwise with interior collinear
    points removed.
    """

    vertices: np.ndarray
    degenerate: bool = False
    _hull: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        V = as_mat(self.vertices, name="vertices")
        n = V.shape[1]
        hull = None
        if not self.degenerate:
            if V.shape[0] < n + 1:
                raise DegenerateRegion(f"region needs at least {n + 1} vertices, got {V.shape[0]}")
            try:
                hull = ConvexHull(V)
            except QhullError as exc:
                raise DegenerateRegion(f"region vertices are not affinely independent: {exc}") from None
            if n == 2:
                V = V[hull.vertices]  # qhull returns 2-D hulls counterclockwise
            else:
                V = V[np.sort(hull.vertices)]
        V.setflags(write=False)
        object.__setattr__(self, "vertices", V)
        object.__setattr__(self, "_hull", hull)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def volume(self) -> float:
        return 0.0 if self._hull is None else float(self._hull.volume)

    @property
    def centroid(self) -> np.ndarray:
        """Vertex average; interior for a full-dimensional region."""
        return self.vertices.mean(axis=0)

    def box(self) -> Box:
        return Box(self.vertices.min(axis=0), self.vertices.max(axis=0))

    def contains(self, x, tol: float = 1e-9) -> bool | np.ndarray:
        """Halfspace membership; accepts one point or a stack of points."""
        if self._hull is None:
            raise ContractViolation("membership is undefined for degenerate regions")
        eq = self._hull.equations
        X = np.atleast_2d(np.asarray(x, dtype=float))
        scale = max(1.0, float(np.abs(self.vertices).max()))
        inside = np.all(X @ eq[:, :-1].T + eq[:, -1] <= tol * scale, axis=1)
        return bool(inside[0]) if np.ndim(x) == 1 else inside

    def interior_contains(self, x, tol: float = 1e-9) -> bool | np.ndarray:
        eq = self._hull.equations
        X = np.atleast_2d(np.asarray(x, dtype=float))
        scale = max(1.0, float(np.abs(self.vertices).max()))
        inside = np.all(X @ eq[:, :-1].T + eq[:, -1] < -tol * scale, axis=1)
        return bool(inside[0]) if np.ndim(x) == 1 else inside


# ---------------------------------------------------------------------------
# 2-D vertical decomposition
# ---------------------------------------------------------------------------


def _snap(points: np.ndarray, reps: list) -> np.ndarray:
    out = points.copy()
    for k, p in enumerate(points):
        for r in reps:
            if np.max(np.abs(p - r)) <= SNAP_TOL:
                out[k] = r
                break
        else:
            reps.append(p.copy())
    return out


def _clip_to_box(poly: np.ndarray, box: Box) -> np.ndarray:
    """Sutherland-Hodgman clip of a convex polygon to an axis-aligned box."""
    pts = list(poly)
    for axis in (0, 1):
        for bound, sign in ((box.lower[axis], 1.0), (box.upper[axis], -1.0)):
            if not pts:
                return np.zeros((0, 2))
            res = []
            for k in range(len(pts)):
                p, q = pts[k], pts[(k + 1) % len(pts)]
                fp, fq = sign * (p[axis] - bound), sign * (q[axis] - bound)
                if fp >= 0:
                    res.append(p)
                if fp * fq < 0:
                    t = fp / (fp - fq)
                    res.append(p + t * (q - p))
            pts = res
    return np.array(pts) if pts else np.zeros((0, 2))


def _cross_section(poly: np.ndarray, x: float) -> tuple[float, float]:
    """y-interval where the vertical line through ``x`` meets a convex polygon."""
    ys = []
    k = len(poly)
    for i in range(k):
        p, q = poly[i], poly[(i + 1) % k]
        lo, hi = min(p[0], q[0]), max(p[0], q[0])
        if x < lo - SNAP_TOL or x > hi + SNAP_TOL:
            continue
        if hi - lo <= SNAP_TOL:
            ys.extend([p[1], q[1]])
        else:
            t = (x - p[0]) / (q[0] - p[0])
            ys.append(p[1] + t * (q[1] - p[1]))
    return min(ys), max(ys)


def _dedupe(points) -> np.ndarray:
    out = []
    for p in points:
        if not any(np.max(np.abs(p - q)) <= SNAP_TOL for q in out):
            out.append(p)
    return np.array(out)


def _area(pts: np.ndarray) -> float:
    try:
        return float(ConvexHull(pts).volume)
    except QhullError:
        return 0.0


def decompose_free_space_2d(workspace: Box, obstacles) -> list[ConvexRegion]:
    """Split ``workspace`` minus the obstacle interiors into convex cells.

    A vertical sweep cuts the free space into trapezoids at every obstacle
    vertex abscissa; horizontally adjacent trapezoids that share a complete
    vertical edge are merged whenever their union stays convex. Cells are
    numbered in sweep order (left to right, bottom to top).
    """
    if workspace.dim != 2:
        raise ContractViolation("decompose_free_space_2d works on planar workspaces")
    reps: list = []
    polys = []
    for ob in obstacles:
        V = ob.vertices if isinstance(ob, ConvexRegion) else as_mat(ob)
        V = _snap(np.asarray(V, dtype=float), reps)
        P = _clip_to_box(V, workspace)
        if len(P) >= 3 and _area(P) > 0:
            polys.append(ConvexRegion(_dedupe(P)).vertices)

    xl, xh = workspace.lower[0], workspace.upper[0]
    yl, yh = workspace.lower[1], workspace.upper[1]
    xs = sorted({xl, xh} | {float(p[0]) for P in polys for p in P})
    cuts = [xs[0]]
    for x in xs[1:]:
        if x - cuts[-1] > SNAP_TOL:
            cuts.append(x)

    cells = []  # per slab: list of (left_lo, left_hi, right_lo, right_hi)
    for a, b in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (a + b)
        spans = []
        for P in polys:
            if P[:, 0].min() < mid < P[:, 0].max():
                la, ha = _cross_section(P, a)
                lb, hb = _cross_section(P, b)
                lm, _ = _cross_section(P, mid)
                spans.append((lm, la, ha, lb, hb))
        spans.sort()
        slab = []
        floor_a, floor_b = yl, yl
        for _, la, ha, lb, hb in spans:
            slab.append((floor_a, la, floor_b, lb))
            floor_a, floor_b = ha, hb
        slab.append((floor_a, yh, floor_b, yh))
        slab = [
            s for s in slab if (s[1] - s[0]) + (s[3] - s[2]) > 2 * SNAP_TOL
        ]
        cells.append([(a, b, s) for s in slab])

    regions: list[np.ndarray] = []
    open_regions: list[tuple[int, tuple[float, float]]] = []  # (region index, right edge)
    for slab in cells:
        next_open = []
        for a, b, (l0, h0, l1, h1) in slab:
            pts = _dedupe(np.array([[a, l0], [b, l1], [b, h1], [a, h0]]))
            merged = False
            for ridx, (rlo, rhi) in open_regions:
                if abs(rlo - l0) <= SNAP_TOL and abs(rhi - h0) <= SNAP_TOL:
                    union = np.vstack([regions[ridx], pts])
                    if abs(_area(union) - _area(regions[ridx]) - _area(pts)) <= 1e-9 * max(1.0, _area(union)):
                        regions[ridx] = union
                        next_open.append((ridx, (l1, h1)))
                        merged = True
                    break
            if not merged:
                regions.append(pts)
                next_open.append((len(regions) - 1, (l1, h1)))
        open_regions = next_open

    out = [ConvexRegion(_dedupe(R)) for R in regions if _area(R) > SNAP_TOL]
    if not out:
        raise EmptyFreeSpace("obstacles cover the whole workspace")
    return out


# ---------------------------------------------------------------------------
# V-representation and hybrid zonotope construction
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class VRepDecomposition:
    """Shared vertex matrix ``V`` (n x n_v) and 0/1 incidence matrix ``M`` (n_v x n_F)."""

    V: np.ndarray
    M: np.ndarray

    def __post_init__(self):
        V = as_mat(self.V, name="V")
        M = as_mat(self.M, rows=V.shape[1], name="M")
        if not np.all((M == 0) | (M == 1)):
            raise ContractViolation("incidence matrix must be 0/1")
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "M", M)

    @property
    def region_count(self) -> int:
        return self.M.shape[1]

    @classmethod
    def from_regions(cls, regions) -> VRepDecomposition:
        verts: list[np.ndarray] = []
        cols = []
        for R in regions:
            V = R.vertices if isinstance(R, ConvexRegion) else as_mat(R)
            idx = []
            for p in V:
                for k, q in enumerate(verts):
                    if np.max(np.abs(p - q)) <= SNAP_TOL:
                        idx.append(k)
                        break
                else:
                    verts.append(np.asarray(p, dtype=float))
                    idx.append(len(verts) - 1)
            cols.append(idx)
        M = np.zeros((len(verts), len(cols)))
        for j, idx in enumerate(cols):
            M[idx, j] = 1.0
        return cls(np.array(verts).T, M)

    def region_vertices(self, k: int) -> np.ndarray:
        return self.V[:, self.M[:, k] == 1].T


def build_hz_from_vrep(d: VRepDecomposition) -> HybridZonotope:
    """Union of V-rep polytopes as one hybrid zonotope.

    Convex weights ``lam`` and slacks ``s`` (both in [0, 1], one per vertex)
    become the continuous factors, a one-hot region selector ``delta`` the
    binary factors, with ``sum(lam) = 1``, ``sum(delta) = 1`` and
    ``lam + s = M delta``. Factors map to [-1, 1] via ``2 t - 1``.
    """
    V, M = d.V, d.M
    n, nv = V.shape
    nF = M.shape[1]
    counts = M.sum(axis=0)
    for k in range(nF):
        if counts[k] < n + 1:
            raise DegenerateRegion(f"region {k} has {int(counts[k])} vertices, needs {n + 1}")
        if np.linalg.matrix_rank(d.region_vertices(k)[1:] - d.region_vertices(k)[0]) < n:
            raise DegenerateRegion(f"region {k} is not full-dimensional")

    Gc = np.hstack([0.5 * V, np.zeros((n, nv))])
    Gb = np.zeros((n, nF))
    c = 0.5 * V.sum(axis=1)
    Ac = np.zeros((nv + 2, 2 * nv))
    Ab = np.zeros((nv + 2, nF))
    b = np.zeros(nv + 2)
    Ac[0, :nv] = 0.5
    b[0] = 1.0 - 0.5 * nv
    Ab[1, :] = 0.5
    b[1] = 1.0 - 0.5 * nF
    Ac[2:, :nv] = 0.5 * np.eye(nv)
    Ac[2:, nv:] = 0.5 * np.eye(nv)
    Ab[2:, :] = -0.5 * M
    b[2:] = -1.0 + 0.5 * M.sum(axis=1)
    return HybridZonotope(Gc, Gb, c, Ac, Ab, b)


# ---------------------------------------------------------------------------
# Leaves
# ---------------------------------------------------------------------------


def interval_hull(Z: ConstrainedZonotope) -> Box:
    """Tightest axis-aligned box around a nonempty constrained zonotope (2n LPs)."""
    lo, hi = np.empty(Z.dim), np.empty(Z.dim)
    for k in range(Z.dim):
        e = np.zeros(Z.dim)
        e[k] = 1.0
        hi[k], _ = Z.support(e)
        lo[k] = -Z.support(-e)[0]
    return Box(lo, np.maximum(lo, hi))


@dataclass(frozen=True, eq=False)
class Leaf:
    """Nonempty constrained zonotope selected by one binary assignment."""

    id: int
    binary: np.ndarray
    set: ConstrainedZonotope
    box: Box

    def contains(self, x, tol: float = FEAS_TOL) -> bool:
        if not self.box.contains(x, tol=1e-7 * max(1.0, float(np.abs(self.box.upper).max()))):
            return False
        return self.set.contains(x, tol)


def _relaxation_feasible(hz: HybridZonotope, fixed: np.ndarray, nfix: int) -> bool:
    ng, nb = hz.n_gen, hz.n_bin
    free = nb - nfix
    A = np.hstack([hz.Ac, hz.Ab[:, nfix:]])
    rhs = hz.b - hz.Ab[:, :nfix] @ fixed[:nfix]
    if A.shape[0] == 0:
        return True
    lp = LinearProgram(np.zeros(ng + free), A, rhs, -np.ones(ng + free), np.ones(ng + free))
    return solve_lp(lp).optimal


def feasible_assignments(hz: HybridZonotope, cap: int = ENUMERATION_CAP) -> list[np.ndarray]:
    """Binary assignments whose leaf is nonempty, in depth-first order (+1 branch first)."""
    nb = hz.n_bin
    if hz.one_hot_rows:
        cands = []
        for k in range(nb):
            xb = -np.ones(nb)
            xb[k] = 1.0
            cands.append(xb)
        return [xb for xb in cands if not hz.leaf(xb).is_empty()]
    if nb > cap:
        raise EnumerationBudgetExceeded(f"{nb} binary factors exceed the enumeration cap {cap}")
    out = []
    fixed = np.zeros(nb)

    def dfs(depth):
        if not _relaxation_feasible(hz, fixed, depth):
            return
        if depth == nb:
            out.append(fixed.copy())
            return
        for v in (1.0, -1.0):
            fixed[depth] = v
            dfs(depth + 1)
        fixed[depth] = 0.0

    dfs(0)
    return out


def enumerate_leaves(hz: HybridZonotope, cap: int = ENUMERATION_CAP) -> list[Leaf]:
    """All nonempty leaves with sequential ids starting at 0."""
    leaves = []
    for xb in feasible_assignments(hz, cap):
        Z = hz.leaf(xb)
        leaves.append(Leaf(len(leaves), xb, Z, interval_hull(Z)))
    log.debug("enumerated %d leaves from %d binaries", len(leaves), hz.n_bin)
    return leaves


def find_containing_leaf(x, leaves) -> int:
    """Smallest leaf id whose set contains ``x``."""
    x = as_vec(x, "x")
    if not leaves:
        raise ContractViolation("no leaves to search")
    for leaf in sorted(leaves, key=lambda lf: lf.id):
        if leaf.contains(x):
            return leaf.id
    raise StateInObstacle(f"state {x.tolist()} is not in free space")
