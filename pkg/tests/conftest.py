"""Shared builders and independent geometric oracles for the test suite."""
import itertools

import numpy as np
import pytest
from scipy.spatial import ConvexHull

from hzplan.sets import HybridZonotope


def box_pair_hz(half, shift, center=None) -> HybridZonotope:
    """Two axis-aligned boxes ``center +- shift`` with half-widths ``half``, as one binary."""
    half = np.asarray(half, dtype=float)
    c = np.zeros(half.size) if center is None else np.asarray(center, dtype=float)
    return HybridZonotope(np.diag(half), np.asarray(shift, dtype=float).reshape(-1, 1), c)


def cz_vertices(Z) -> np.ndarray:
    """Vertices of a constrained zonotope by brute-force factor-polytope vertex enumeration.

    A vertex of ``{A xi = b, |xi| <= 1}`` has ``n_g - n_c`` coordinates at
    +-1; the remaining ones follow from the (square) constraint system.
    """
    ng, nc = Z.n_gen, Z.n_con
    pts = []
    for free in itertools.combinations(range(ng), nc):
        fixed = [k for k in range(ng) if k not in free]
        Af = Z.A[:, list(free)]
        if nc and abs(np.linalg.det(Af)) < 1e-12:
            continue
        for signs in itertools.product((-1.0, 1.0), repeat=len(fixed)):
            xi = np.zeros(ng)
            xi[fixed] = signs
            if nc:
                xi[list(free)] = np.linalg.solve(Af, Z.b - Z.A[:, fixed] @ np.array(signs))
            if np.all(np.abs(xi) <= 1 + 1e-12):
                pts.append(Z.point(xi))
    return np.array(pts)


class Polygon:
    """Halfspace membership oracle for the convex hull of points."""

    def __init__(self, pts):
        self.hull = ConvexHull(pts)

    def contains(self, X, tol=1e-9):
        eq = self.hull.equations
        return np.all(X @ eq[:, :-1].T + eq[:, -1] <= tol, axis=1)

    def signed_margin(self, x):
        """Max halfspace violation: < 0 inside (depth), > 0 outside (lower bound on distance)."""
        eq = self.hull.equations
        return float(np.max(eq[:, :-1] @ x + eq[:, -1]))


def grid(lower, upper, k=200):
    xs = np.linspace(lower[0], upper[0], k)
    ys = np.linspace(lower[1], upper[1], k)
    X, Y = np.meshgrid(xs, ys)
    return np.column_stack([X.ravel(), Y.ravel()]), (np.asarray(upper) - np.asarray(lower)) / (k - 1)


def affine_rank(P, tol=1e-7) -> int:
    P = np.asarray(P, dtype=float)
    if len(P) < 2:
        return 0
    s = np.linalg.svd(P - P.mean(axis=0), compute_uv=False)
    return int(np.sum(s > tol * max(1.0, s[0])))


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


def polygon_inradius(polys) -> float:
    """Chebyshev radius of the intersection of convex polygons (negative when empty)."""
    from scipy.optimize import linprog

    eqs = np.vstack([Polygon(P).hull.equations for P in polys])
    N, h = eqs[:, :-1], -eqs[:, -1]
    norms = np.linalg.norm(N, axis=1)
    # maximize r subject to N x + r |N| <= h, r free
    res = linprog([0, 0, -1], A_ub=np.column_stack([N, norms]), b_ub=h, bounds=[(None, None)] * 3,
                  method="highs")
    return -res.fun if res.status == 0 else -np.inf


def random_two_leaf(rng, overlap: bool, with_constraint: bool, cells: float = 2.0, k: int = 200):
    """Two translated copies of a random zonotope, far from tangency on a ``k x k`` grid.

    Returns ``(hz, leaf_polygons, grid_step)``. The instance is redrawn until
    the overlap inradius, or the separation lower bound, exceeds ``cells``
    grid diagonals.
    """
    while True:
        Gc = rng.normal(size=(2, 3))
        Ac = bc = None
        if with_constraint:
            Ac = rng.normal(size=(1, 3))
            bc = Ac @ rng.uniform(-0.5, 0.5, 3)
        u = rng.normal(size=2)
        u /= np.linalg.norm(u)
        alpha = rng.uniform(0.3, 0.8) if overlap else rng.uniform(1.2, 1.8)
        base = HybridZonotope(Gc, np.zeros((2, 1)), np.zeros(2), Ac, None if Ac is None else np.zeros((1, 1)), bc)
        V0 = cz_vertices(base.leaf([1.0]))
        if len(V0) < 3:
            continue
        D = Polygon(np.vstack([V0 - v for v in V0]))  # difference body Z - Z
        # radial extent of Z - Z along u by bisection on halfspace membership
        lo, hi = 0.0, 20.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if D.contains((mid * u)[None])[0] else (lo, mid)
        t = alpha * lo * u
        Ab = None if Ac is None else np.zeros((1, 1))
        hz = HybridZonotope(Gc, (0.5 * t)[:, None], np.zeros(2), Ac, Ab, bc)
        polys = [cz_vertices(hz.leaf([1.0])), cz_vertices(hz.leaf([-1.0]))]
        allp = np.vstack(polys)
        step = (allp.max(axis=0) - allp.min(axis=0)).max() / (k - 1)
        margin = cells * step * np.sqrt(2)
        if overlap and polygon_inradius(polys) >= margin:
            return hz, polys, step
        if not overlap and D.signed_margin(t) >= margin:
            return hz, polys, step


def grid_intersects(polys, k: int = 200) -> bool:
    allp = np.vstack(polys)
    X, _ = grid(allp.min(axis=0), allp.max(axis=0), k)
    return bool(np.any(Polygon(polys[0]).contains(X) & Polygon(polys[1]).contains(X)))
