"""Set representations: boxes, constrained and hybrid zonotopes, ellipsoids, ellipsotopes.

All sets are immutable; operations return new objects.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, DegenerateInformedSet
from .numeric import FEAS_TOL, LinearProgram, as_mat, as_vec, solve_lp

ELLIPSOID_TOL = 1e-12


def _freeze(*arrays):
    for a in arrays:
        a.setflags(write=False)


@dataclass(frozen=True, eq=False)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo, hi = as_vec(self.lower, "lower"), as_vec(self.upper, "upper")
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ContractViolation("box needs lower <= upper with equal lengths")
        _freeze(lo, hi)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def corners(self) -> np.ndarray:
        return np.array(list(itertools.product(*zip(self.lower, self.upper))))

    def volume(self) -> float:
        return float(np.prod(self.upper - self.lower))

    def __eq__(self, other):
        return (
            isinstance(other, Box)
            and np.array_equal(self.lower, other.lower)
            and np.array_equal(self.upper, other.upper)
        )

    def __repr__(self):
        return f"Box(lower={self.lower.tolist()}, upper={self.upper.tolist()})"


class ConstrainedZonotope:
    r"""The set ``{G xi + c : A xi = b, ||xi||_inf <= 1}``.

    Parameters
    ----------
    G : (n, n_g) array
        Generator matrix.
    c : (n,) array
        Center.
    A : (n_c, n_g) array, optional
        Equality constraint matrix on the factors.
    b : (n_c,) array, optional
    """

    __slots__ = ("G", "c", "A", "b")

    def __init__(self, G, c, A=None, b=None):
        c = as_vec(c, "c")
        G = as_mat(G, rows=c.size, name="G")
        ng = G.shape[1]
        if A is None:
            A = np.zeros((0, ng))
            b = np.zeros(0)
        b = as_vec(b, "b")
        A = as_mat(A, rows=b.size, cols=ng, name="A")
        _freeze(G, c, A, b)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    def __setattr__(self, name, value):
        raise AttributeError("ConstrainedZonotope is immutable")

    def __repr__(self):
        return f"ConstrainedZonotope(n={self.dim}, n_g={self.n_gen}, n_c={self.n_con})"

    @classmethod
    def from_box(cls, lower, upper) -> ConstrainedZonotope:
        lo, hi = as_vec(lower), as_vec(upper)
        return cls(np.diag(0.5 * (hi - lo)), 0.5 * (hi + lo))

    @property
    def dim(self) -> int:
        return self.c.size

    @property
    def n_gen(self) -> int:
        return self.G.shape[1]

    @property
    def n_con(self) -> int:
        return self.A.shape[0]

    def point(self, xi) -> np.ndarray:
        return self.G @ np.asarray(xi, dtype=float) + self.c

    def factors_feasible(self, xi, tol: float = FEAS_TOL) -> bool:
        xi = np.asarray(xi, dtype=float)
        if np.any(np.abs(xi) > 1 + tol):
            return False
        if self.n_con == 0:
            return True
        return bool(np.all(np.abs(self.A @ xi - self.b) <= tol * max(1.0, np.abs(self.b).max())))

    # -- queries ----------------------------------------------------------
    def contains(self, x, tol: float = FEAS_TOL) -> bool:
        """Membership test via LP feasibility of the factor system."""
        x = as_vec(x, "x")
        if x.size != self.dim:
            raise ContractViolation(f"point has dim {x.size}, set has dim {self.dim}")
        return self.membership_factors(x, tol) is not None

    def membership_factors(self, x, tol: float = FEAS_TOL):
        """Factors ``xi`` with ``G xi + c = x`` and ``A xi = b``, or None."""
        ng = self.n_gen
        Aeq = np.vstack([self.G, self.A])
        beq = np.concatenate([np.asarray(x, dtype=float) - self.c, self.b])
        out = solve_lp(LinearProgram(np.zeros(ng), Aeq, beq, -np.ones(ng), np.ones(ng)), feas_tol=tol)
        return out.point if out.optimal else None

    def is_empty(self, tol: float = FEAS_TOL) -> bool:
        return self.feasible_factors(tol) is None

    def feasible_factors(self, tol: float = FEAS_TOL):
        ng = self.n_gen
        if self.n_con == 0:
            return np.zeros(ng)
        out = solve_lp(LinearProgram(np.zeros(ng), self.A, self.b, -np.ones(ng), np.ones(ng)), feas_tol=tol)
        return out.point if out.optimal else None

    def support(self, direction) -> tuple[float, np.ndarray]:
        """Maximize ``direction @ x`` over the set; returns (value, maximizing factors)."""
        d = as_vec(direction, "direction")
        ng = self.n_gen
        out = solve_lp(LinearProgram(self.G.T @ d, self.A, self.b, -np.ones(ng), np.ones(ng)))
        if not out.optimal:
            raise ContractViolation("support of an empty constrained zonotope")
        return out.value + float(d @ self.c), out.point

    def box_bound(self) -> Box:
        """Interval hull ignoring the equality constraints (conservative)."""
        r = np.abs(self.G).sum(axis=1)
        return Box(self.c - r, self.c + r)

    # -- set operations ---------------------------------------------------
    def linear_map(self, R, t=None) -> ConstrainedZonotope:
        R = as_mat(R, cols=self.dim, name="R")
        c = R @ self.c if t is None else R @ self.c + as_vec(t)
        return ConstrainedZonotope(R @ self.G, c, self.A, self.b)

    def minkowski_sum(self, other: ConstrainedZonotope) -> ConstrainedZonotope:
        if other.dim != self.dim:
            raise ContractViolation("Minkowski sum needs equal dimensions")
        A = np.block(
            [
                [self.A, np.zeros((self.n_con, other.n_gen))],
                [np.zeros((other.n_con, self.n_gen)), other.A],
            ]
        )
        return ConstrainedZonotope(
            np.hstack([self.G, other.G]), self.c + other.c, A, np.concatenate([self.b, other.b])
        )

    def intersect_generalized(self, other: ConstrainedZonotope, R=None) -> ConstrainedZonotope:
        """``{z in self : R z in other}``; ``R`` defaults to the identity."""
        if R is None:
            R = np.eye(self.dim)
        R = as_mat(R, rows=other.dim, cols=self.dim, name="R")
        ng1, ng2 = self.n_gen, other.n_gen
        A = np.block(
            [
                [self.A, np.zeros((self.n_con, ng2))],
                [np.zeros((other.n_con, ng1)), other.A],
                [R @ self.G, -other.G],
            ]
        )
        b = np.concatenate([self.b, other.b, other.c - R @ self.c])
        return ConstrainedZonotope(np.hstack([self.G, np.zeros((self.dim, ng2))]), self.c, A, b)

    def with_zero_generator(self) -> ConstrainedZonotope:
        """Same set with one extra all-zero generator column (re-parameterization)."""
        return ConstrainedZonotope(
            np.hstack([self.G, np.zeros((self.dim, 1))]),
            self.c,
            np.hstack([self.A, np.zeros((self.n_con, 1))]),
            self.b,
        )


class HybridZonotope:
    """Mixed continuous/binary set ``<Gc, Gb, c, Ac, Ab, b>``.

    Members are ``Gc xi_c + Gb xi_b + c`` with ``||xi_c||_inf <= 1``,
    ``xi_b in {-1, 1}^n_b`` and ``Ac xi_c + Ab xi_b = b``.
    """

    __slots__ = ("Gc", "Gb", "c", "Ac", "Ab", "b", "one_hot_rows")

    def __init__(self, Gc, Gb, c, Ac=None, Ab=None, b=None):
        c = as_vec(c, "c")
        n = c.size
        Gc = as_mat(Gc, rows=n, name="Gc")
        Gb = as_mat(Gb, rows=n, name="Gb")
        ng, nb = Gc.shape[1], Gb.shape[1]
        if b is None:
            b = np.zeros(0)
        b = as_vec(b, "b")
        Ac = np.zeros((b.size, ng)) if Ac is None else as_mat(Ac, rows=b.size, cols=ng, name="Ac")
        Ab = np.zeros((b.size, nb)) if Ab is None else as_mat(Ab, rows=b.size, cols=nb, name="Ab")
        _freeze(Gc, Gb, c, Ac, Ab, b)
        for name, val in zip(("Gc", "Gb", "c", "Ac", "Ab", "b"), (Gc, Gb, c, Ac, Ab, b)):
            object.__setattr__(self, name, val)
        object.__setattr__(self, "one_hot_rows", self._detect_one_hot())

    def __setattr__(self, name, value):
        raise AttributeError("HybridZonotope is immutable")

    def __repr__(self):
        return f"HybridZonotope(n={self.dim}, n_g={self.n_gen}, n_b={self.n_bin}, n_c={self.n_con})"

    @property
    def dim(self) -> int:
        return self.c.size

    @property
    def n_gen(self) -> int:
        return self.Gc.shape[1]

    @property
    def n_bin(self) -> int:
        return self.Gb.shape[1]

    @property
    def n_con(self) -> int:
        return self.b.size

    @property
    def M(self) -> np.ndarray:
        return np.vstack([self.Gc, self.Ac])

    @property
    def N(self) -> np.ndarray:
        return np.vstack([self.Gb, self.Ab])

    def _detect_one_hot(self) -> tuple[int, ...]:
        """Rows forcing exactly one binary factor to +1.

        Such a row has no continuous part and reads ``a * sum(xi_b) = a * (2 - n_b)``.
        """
        rows = []
        nb = self.n_bin
        for r in range(self.n_con):
            ab = self.Ab[r]
            if nb == 0 or np.any(self.Ac[r] != 0.0) or ab[0] == 0.0 or np.any(ab != ab[0]):
                continue
            if abs(self.b[r] - ab[0] * (2 - nb)) <= 1e-12 * max(1.0, abs(self.b[r])):
                rows.append(r)
        return tuple(rows)

    def leaf(self, xi_b) -> ConstrainedZonotope:
        xi_b = as_vec(xi_b, "xi_b")
        if xi_b.size != self.n_bin:
            raise ContractViolation("binary assignment has the wrong length")
        return ConstrainedZonotope(self.Gc, self.c + self.Gb @ xi_b, self.Ac, self.b - self.Ab @ xi_b)

    def relaxation(self) -> ConstrainedZonotope:
        """Convex relaxation with binaries allowed anywhere in [-1, 1]."""
        return ConstrainedZonotope(np.hstack([self.Gc, self.Gb]), self.c, np.hstack([self.Ac, self.Ab]), self.b)

    def linear_map(self, R, t=None) -> HybridZonotope:
        R = as_mat(R, cols=self.dim, name="R")
        c = R @ self.c if t is None else R @ self.c + as_vec(t)
        return HybridZonotope(R @ self.Gc, R @ self.Gb, c, self.Ac, self.Ab, self.b)

    def minkowski_sum(self, other: HybridZonotope) -> HybridZonotope:
        def blk(X, Y):
            return np.block(
                [[X, np.zeros((X.shape[0], Y.shape[1]))], [np.zeros((Y.shape[0], X.shape[1])), Y]]
            )

        return HybridZonotope(
            np.hstack([self.Gc, other.Gc]),
            np.hstack([self.Gb, other.Gb]),
            self.c + other.c,
            blk(self.Ac, other.Ac),
            blk(self.Ab, other.Ab),
            np.concatenate([self.b, other.b]),
        )


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """``{x : (x - center)^T Q (x - center) <= 1}`` with ``Q`` positive definite."""

    center: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        c = as_vec(self.center, "center")
        Q = as_mat(self.Q, rows=c.size, cols=c.size, name="Q")
        if np.max(np.abs(Q - Q.T), initial=0.0) > 1e-10 * max(1.0, np.abs(Q).max()):
            raise ContractViolation("shape matrix must be symmetric")
        if c.size and np.linalg.eigvalsh(0.5 * (Q + Q.T)).min() <= 0:
            raise ContractViolation("shape matrix must be positive definite")
        _freeze(c, Q)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "Q", Q)

    def quadratic(self, x) -> np.ndarray | float:
        d = np.asarray(x, dtype=float) - self.center
        if d.ndim == 1:
            return float(d @ self.Q @ d)
        return np.einsum("ij,jk,ik->i", d, self.Q, d)

    def contains(self, x) -> bool:
        return bool(self.quadratic(x) <= 1.0 + ELLIPSOID_TOL)


@dataclass(frozen=True, eq=False)
class Ellipsotope:
    """``{c + G xi : ||xi_J||_p <= 1 for every block J, A xi = b}``."""

    center: np.ndarray
    G: np.ndarray
    A: np.ndarray = None
    b: np.ndarray = None
    index_set: tuple = None
    p: float = 2.0

    def __post_init__(self):
        c = as_vec(self.center, "center")
        G = as_mat(self.G, rows=c.size, name="G")
        ng = G.shape[1]
        A = np.zeros((0, ng)) if self.A is None else as_mat(self.A, cols=ng, name="A")
        b = np.zeros(A.shape[0]) if self.b is None else as_vec(self.b, "b")
        if b.size != A.shape[0]:
            raise ContractViolation("A and b disagree on the constraint count")
        blocks = (tuple(range(ng)),) if self.index_set is None else tuple(tuple(J) for J in self.index_set)
        flat = sorted(i for J in blocks for i in J)
        if flat != list(range(ng)):
            raise ContractViolation("index set blocks must partition the generator indices")
        if self.p < 1:
            raise ContractViolation("norm order must be >= 1")
        _freeze(c, G, A, b)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "index_set", blocks)

    def _basic(self) -> bool:
        return self.A.shape[0] == 0 and self.G.shape[0] == self.G.shape[1] and len(self.index_set) == 1

    def to_ellipsoid(self) -> Ellipsoid:
        """Shape-matrix form; only for a single 2-norm block with square invertible ``G``."""
        if not (self._basic() and self.p == 2):
            raise NotImplementedError("only single-block 2-norm ellipsotopes convert to ellipsoids")
        Ginv = np.linalg.inv(self.G)
        Q = Ginv.T @ Ginv
        return Ellipsoid(self.center, 0.5 * (Q + Q.T))

    def contains(self, x, tol: float = 1e-12) -> bool:
        if not self._basic():
            raise NotImplementedError("membership only for unconstrained, square-generator ellipsotopes")
        xi = np.linalg.solve(self.G, as_vec(x) - self.center)
        return bool(np.linalg.norm(xi, ord=self.p) <= 1.0 + tol)


def informed_contains(xs, xg, c_best: float, x):
    """Whether ``x`` can lie on a start/goal path shorter than ``c_best``.

    ``x`` may be one point or a stack of points (one per row); a stack gives
    a boolean array.
    """
    xs, xg, x = (np.asarray(v, dtype=float) for v in (xs, xg, x))
    base = float(np.linalg.norm(xg - xs))
    if c_best < base - 1e-12 * max(1.0, base):
        raise DegenerateInformedSet(f"c_best={c_best} below straight-line distance {base}")
    f = np.linalg.norm(x - xs, axis=-1) + np.linalg.norm(x - xg, axis=-1)
    inside = f <= c_best + 1e-12 * max(1.0, c_best)
    return bool(inside) if x.ndim == 1 else inside
