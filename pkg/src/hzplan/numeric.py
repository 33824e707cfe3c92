"""Dense linear algebra helpers and a small two-phase simplex LP solver.

Every problem solved in this package is small (tens to a few hundred
variables), so the LP solver uses a dense tableau rather than sparse
factorizations.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ContractViolation, SolverStall

FEAS_TOL = 1e-8
CONSISTENCY_TOL = 1e-7
RANK_TOL = 1e-10
_PIVOT_TOL = 1e-10
_COST_TOL = 1e-10
# consecutive degenerate pivots before switching Dantzig -> Bland pricing
_DEGENERATE_SWITCH = 30


def as_vec(x, name="vector") -> np.ndarray:
    v = np.asarray(x, dtype=float).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise ContractViolation(f"{name} has non-finite entries")
    return v


def as_mat(x, rows=None, cols=None, name="matrix") -> np.ndarray:
    m = np.asarray(x, dtype=float)
    if m.ndim == 1 and m.size == 0:
        m = m.reshape(rows or 0, cols or 0)
    if m.ndim != 2:
        raise ContractViolation(f"{name} must be 2-D, got shape {m.shape}")
    if rows is not None and m.shape[0] != rows:
        raise ContractViolation(f"{name} must have {rows} rows, got {m.shape[0]}")
    if cols is not None and m.shape[1] != cols:
        raise ContractViolation(f"{name} must have {cols} columns, got {m.shape[1]}")
    if not np.all(np.isfinite(m)):
        raise ContractViolation(f"{name} has non-finite entries")
    return m


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LinearProgram:
    """maximize ``objective @ x`` s.t. ``eq_matrix @ x == eq_rhs``, ``lower <= x <= upper``.

    Bounds may be infinite.
    """

    objective: np.ndarray
    eq_matrix: np.ndarray
    eq_rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        c = as_vec(self.objective, "objective")
        n = c.size
        b = as_vec(self.eq_rhs, "eq_rhs")
        A = as_mat(self.eq_matrix, rows=b.size, cols=n, name="eq_matrix")
        lo = np.asarray(self.lower, dtype=float).reshape(-1)
        hi = np.asarray(self.upper, dtype=float).reshape(-1)
        if lo.size != n or hi.size != n:
            raise ContractViolation("bounds must match the variable count")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)) or np.any(lo > hi):
            raise ContractViolation("need lower <= upper elementwise")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "eq_matrix", A)
        object.__setattr__(self, "eq_rhs", b)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def n_vars(self) -> int:
        return self.objective.size


@dataclass(frozen=True)
class LpOutcome:
    status: LpStatus
    point: np.ndarray | None = None
    value: float = float("nan")

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


class _Tableau:
    """Dense simplex tableau for ``min cost @ y`` s.t. ``A y = b, y >= 0`` with ``b >= 0``.

    Row 0..m-1 hold constraints, the last row holds reduced costs. The last
    column holds the right hand side.
    """

    def __init__(self, A, b, max_iter):
        m, n = A.shape
        self.m, self.n = m, n
        # artificial columns n..n+m-1 form the starting basis
        T = np.zeros((m + 1, n + m + 1))
        T[:m, :n] = A
        T[:m, n : n + m] = np.eye(m)
        T[:m, -1] = b
        self.T = T
        self.basis = list(range(n, n + m))
        self.max_iter = max_iter
        self.iterations = 0

    def set_cost(self, cost):
        """Install a cost row (length n + m) and price out the basis."""
        T = self.T
        T[-1, :-1] = cost
        T[-1, -1] = 0.0
        for r, j in enumerate(self.basis):
            if T[-1, j] != 0.0:
                T[-1] -= T[-1, j] * T[r]

    def pivot(self, r, c):
        T = self.T
        T[r] /= T[r, c]
        col = T[:, c].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        self.basis[r] = c

    def run(self, allowed):
        """Iterate to optimality over columns flagged in ``allowed``.

        Returns False if the problem is unbounded along an entering column.
        """
        T = self.T
        degenerate = 0
        while True:
            if self.iterations >= self.max_iter:
                raise SolverStall(f"simplex exceeded {self.max_iter} iterations")
            red = T[-1, :-1]
            candidates = np.flatnonzero((red < -_COST_TOL) & allowed)
            if candidates.size == 0:
                return True
            if degenerate >= _DEGENERATE_SWITCH:
                c = candidates[0]  # Bland
            else:
                c = candidates[np.argmin(red[candidates])]
            col = T[:-1, c]
            pos = col > _PIVOT_TOL
            if not np.any(pos):
                return False
            ratios = np.full(self.m, np.inf)
            ratios[pos] = T[:-1, -1][pos] / col[pos]
            best = ratios.min()
            ties = np.flatnonzero(ratios <= best + 1e-12 * max(1.0, abs(best)))
            # Bland tie-break: smallest basic variable index leaves
            r = min(ties, key=lambda i: self.basis[i])
            degenerate = degenerate + 1 if best <= 1e-12 else 0
            self.pivot(r, c)
            self.iterations += 1


def _standard_form(lp: LinearProgram):
    """Rewrite bounds so every variable is nonnegative.

    Returns ``(A, b, cost, recover)`` where ``recover(y)`` maps a standard-form
    solution back to the original variables.
    """
    A0, b0, lo, hi = lp.eq_matrix, lp.eq_rhs, lp.lower, lp.upper
    m0, n0 = A0.shape
    cols = []  # (original index, sign) per standard column
    offset = np.zeros(n0)
    upper_rows = []  # (standard column, width)
    for k in range(n0):
        l, u = lo[k], hi[k]
        if np.isfinite(l) and np.isfinite(u):
            offset[k] = l
            if u - l > 0:
                cols.append((k, 1.0))
                upper_rows.append((len(cols) - 1, u - l))
        elif np.isfinite(l):
            offset[k] = l
            cols.append((k, 1.0))
        elif np.isfinite(u):
            offset[k] = u
            cols.append((k, -1.0))
        else:
            cols.append((k, 1.0))
            cols.append((k, -1.0))
    ns = len(cols)
    n_slack = len(upper_rows)
    idx = np.array([k for k, _ in cols], dtype=int)
    sgn = np.array([s for _, s in cols])
    A = np.zeros((m0 + n_slack, ns + n_slack))
    if ns:
        A[:m0, :ns] = A0[:, idx] * sgn
    b = np.empty(m0 + n_slack)
    b[:m0] = b0 - A0 @ offset
    for r, (j, width) in enumerate(upper_rows):
        A[m0 + r, j] = 1.0
        A[m0 + r, ns + r] = 1.0
        b[m0 + r] = width
    cost = np.zeros(ns + n_slack)
    if ns:
        cost[:ns] = -lp.objective[idx] * sgn  # maximize -> minimize

    def recover(y):
        x = offset.copy()
        if ns:
            np.add.at(x, idx, sgn * y[:ns])
        return x

    return A, b, cost, recover


def _presolve(lp: LinearProgram, tol: float):
    """Fix variables pinned by forcing rows and drop rows left empty.

    A row is forcing when its right-hand side equals the smallest (or
    largest) activity allowed by the bounds; every variable in it then sits
    at the bound attaining that extreme. Returns None when a row proves the
    program infeasible.
    """
    A, b = lp.eq_matrix, lp.eq_rhs
    lo, hi = lp.lower.copy(), lp.upper.copy()
    if A.shape[0] == 0:
        return lp
    nz = np.abs(A) > 0.0
    active = np.ones(A.shape[0], dtype=bool)
    changed = True
    while changed:
        changed = False
        fixed = lo == hi
        for i in np.flatnonzero(active):
            a = A[i]
            cols = nz[i] & ~fixed
            if not cols.any():
                continue
            ac = a[cols]
            lo_part = np.where(ac > 0, ac * lo[cols], ac * hi[cols])
            hi_part = np.where(ac > 0, ac * hi[cols], ac * lo[cols])
            if not (np.all(np.isfinite(lo_part)) and np.all(np.isfinite(hi_part))):
                continue
            rest = b[i] - a[fixed & nz[i]] @ lo[fixed & nz[i]]
            mn, mx = lo_part.sum(), hi_part.sum()
            band = tol * max(1.0, abs(rest), np.abs(lo_part).sum())
            if rest < mn - band or rest > mx + band:
                return None
            if mx - mn <= band:
                continue  # already (nearly) fixed, let the simplex handle it
            if rest <= mn + band:
                vals = np.where(ac > 0, lo[cols], hi[cols])
            elif rest >= mx - band:
                vals = np.where(ac > 0, hi[cols], lo[cols])
            else:
                continue
            idx = np.flatnonzero(cols)
            lo[idx] = hi[idx] = vals
            fixed[idx] = True
            active[i] = False
            changed = True
    # rows whose every variable is now fixed carry no information
    fixed = lo == hi
    keep = np.any(nz & ~fixed, axis=1)
    resid = b[~keep] - A[~keep][:, fixed] @ lo[fixed]
    if resid.size and np.abs(resid).max() > tol * max(1.0, float(np.abs(b).max())):
        return None
    return LinearProgram(lp.objective, A[keep], b[keep], lo, hi)


def forced_bounds(A, b, lower, upper, tol: float = FEAS_TOL):
    """Bounds after fixing every variable pinned by a forcing row.

    Returns ``(lower, upper)`` or None if the rows are infeasible.
    """
    n = np.asarray(lower).size
    lp = LinearProgram(np.zeros(n), np.asarray(A, dtype=float).reshape(-1, n), b, lower, upper)
    out = _presolve(lp, tol)
    return None if out is None else (out.lower, out.upper)


def solve_lp(lp: LinearProgram, feas_tol: float = FEAS_TOL, max_iter: int | None = None) -> LpOutcome:
    """Solve a linear program with the two-phase simplex method.

    Pricing is Dantzig's rule, falling back to Bland's rule after a run of
    degenerate pivots so the method cannot cycle.

    Raises
    ------
    SolverStall
        If the iteration cap (default ``10 * (variables + constraints)`` of
        the standard form) is reached.
    """
    reduced = _presolve(lp, feas_tol)
    if reduced is None:
        return LpOutcome(LpStatus.INFEASIBLE)
    A, b, cost, recover = _standard_form(reduced)
    m, n = A.shape
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0
    if max_iter is None:
        max_iter = 10 * (n + m) + 50
    scale = max(1.0, float(np.abs(b).max(initial=0.0)))

    if m == 0:
        if np.any(cost < -_COST_TOL):
            return LpOutcome(LpStatus.UNBOUNDED)
        x = recover(np.zeros(n))
        return LpOutcome(LpStatus.OPTIMAL, x, float(lp.objective @ x))

    tab = _Tableau(A, b, max_iter)
    phase1 = np.zeros(n + m)
    phase1[n:] = 1.0
    tab.set_cost(phase1)
    tab.run(np.ones(n + m, dtype=bool))
    if -tab.T[-1, -1] > feas_tol * scale:
        return LpOutcome(LpStatus.INFEASIBLE)

    # drive zero-level artificials out of the basis; drop redundant rows
    T = tab.T
    r = 0
    while r < tab.m:
        if tab.basis[r] >= n:
            row = T[r, :n]
            nz = np.flatnonzero(np.abs(row) > 1e-9)
            if nz.size:
                tab.pivot(r, nz[0])
            else:
                T = np.delete(T, r, axis=0)
                tab.T = T
                del tab.basis[r]
                tab.m -= 1
                continue
        r += 1
    T = tab.T

    allowed = np.zeros(n + m, dtype=bool)
    allowed[:n] = True
    full_cost = np.zeros(n + m)
    full_cost[:n] = cost
    tab.set_cost(full_cost)
    if not tab.run(allowed):
        return LpOutcome(LpStatus.UNBOUNDED)

    y = np.zeros(n + m)
    y[tab.basis] = tab.T[:-1, -1]
    y = np.maximum(y[:n], 0.0)
    x = recover(y)
    x = np.clip(x, lp.lower, lp.upper)
    return LpOutcome(LpStatus.OPTIMAL, x, float(lp.objective @ x))


def feasible_point(A, b, lower, upper, feas_tol: float = FEAS_TOL) -> np.ndarray | None:
    """Return some ``x`` with ``A x = b`` inside the bounds, or None."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = np.asarray(lower).size
    if A.size == 0:
        A = np.zeros((0, n))
    out = solve_lp(LinearProgram(np.zeros(n), A, b, lower, upper), feas_tol=feas_tol)
    return out.point if out.optimal else None


def least_squares_residual(M, y) -> tuple[np.ndarray, float]:
    """Minimize ``||M x - y||`` and return ``(x, residual)``."""
    y = as_vec(y, "y")
    M = as_mat(M, rows=y.size, name="M")
    if M.shape[1] == 0:
        return np.zeros(0), float(np.linalg.norm(y))
    x, *_ = np.linalg.lstsq(M, y, rcond=None)
    return x, float(np.linalg.norm(M @ x - y))


def numerical_rank(A, tol: float = RANK_TOL) -> int:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        return 0
    _, R, _ = scipy.linalg.qr(A.T, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    if d.size == 0 or d[0] == 0.0:
        return 0
    return int(np.sum(d > tol * d[0]))


def null_space_basis(A, n: int | None = None, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis (as columns) of ``{x : A x = 0}``.

    Dependent rows of ``A`` are detected with a column-pivoted QR of
    ``A.T`` and ignored. ``n`` gives the variable count when ``A`` has no rows.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A.reshape(1, -1) if A.size else np.zeros((0, n or 0))
    if n is None:
        n = A.shape[1]
    if A.shape[0] == 0:
        return np.eye(n)
    Q, R, _ = scipy.linalg.qr(A.T, mode="full", pivoting=True)
    d = np.abs(np.diag(R))
    rank = 0 if d.size == 0 or d[0] == 0.0 else int(np.sum(d > tol * d[0]))
    return Q[:, rank:]


def orthonormal_completion(u) -> np.ndarray:
    """Columns completing the unit vector ``u`` to an orthonormal basis."""
    u = as_vec(u, "u")
    if abs(np.linalg.norm(u) - 1.0) > 1e-9:
        raise ContractViolation("orthonormal_completion needs a unit vector")
    return null_space_basis(u.reshape(1, -1))
