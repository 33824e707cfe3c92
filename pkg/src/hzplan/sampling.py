"""Random walks (Hit-and-Run, Billiard Walk) on shared faces.

Walks run in the factor space of a face: the polytope
``{xi : A xi = b, ||xi||_inf <= 1}``. Factors that are pinned to +-1 on the
whole face are detected once and removed, so the walk moves in the relative
interior of what is left and every step is a closed-form box computation.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ContractViolation
from .numeric import LinearProgram, forced_bounds, null_space_basis, solve_lp
from .sets import ConstrainedZonotope

FREE_TOL = 1e-9


class WalkKind(enum.Enum):
    HIT_AND_RUN = "hit-and-run"
    BILLIARD = "billiard"


@dataclass(frozen=True)
class SamplerKind:
    tag: WalkKind = WalkKind.HIT_AND_RUN
    billiard_trajectory_length: float | None = None  # None: factor-box diameter
    billiard_max_reflections: int = 100

    def __post_init__(self):
        if self.billiard_trajectory_length is not None and self.billiard_trajectory_length <= 0:
            raise ContractViolation("billiard trajectory length must be positive")
        if self.billiard_max_reflections < 1:
            raise ContractViolation("billiard reflection cap must be >= 1")

    @classmethod
    def parse(cls, name: str) -> SamplerKind:
        return cls(WalkKind(name))


def interior_point(face: ConstrainedZonotope) -> tuple[np.ndarray, float, bool]:
    """Factors maximizing the uniform slack ``s`` to the box.

    Returns ``(xi, s, degenerate)``; ``degenerate`` is set when the best
    slack is zero, i.e. the face touches the box boundary everywhere.
    """
    m, nc = face.n_gen, face.n_con
    # variables: xi (m), s, u (m), v (m) with xi + s + u = 1 and -xi + s + v = 1
    A = np.zeros((nc + 2 * m, 3 * m + 1))
    A[:nc, :m] = face.A
    A[nc : nc + m, :m] = np.eye(m)
    A[nc + m :, :m] = -np.eye(m)
    A[nc:, m] = 1.0
    A[nc:, m + 1 :] = np.eye(2 * m)
    b = np.concatenate([face.b, np.ones(2 * m)])
    lo = np.concatenate([-np.ones(m), [0.0], np.zeros(2 * m)])
    hi = np.concatenate([np.ones(m), [1.0], np.full(2 * m, np.inf)])
    obj = np.zeros(3 * m + 1)
    obj[m] = 1.0
    out = solve_lp(LinearProgram(obj, A, b, lo, hi))
    if not out.optimal:
        raise ContractViolation("interior_point called on an empty face")
    s = float(out.point[m])
    return out.point[:m], s, s <= FREE_TOL


def _free_coordinates(face: ConstrainedZonotope):
    """Split factors into ones that can leave the box boundary and pinned ones.

    Factors fixed by forcing rows are removed first. Then the summed box
    slack of the still-undecided factors is maximized repeatedly; every
    factor with positive slack is free. Once the optimum is zero the
    remaining factors sit at +-1 on the entire face. The returned anchor is
    the average of the LP solutions, strictly inside the box on every free
    factor.
    """
    m, nc = face.n_gen, face.n_con
    bounds = forced_bounds(face.A, face.b, -np.ones(m), np.ones(m))
    if bounds is None:
        raise ContractViolation("face is empty")
    lo0, hi0 = bounds
    undecided = np.flatnonzero(lo0 < hi0)
    free = np.zeros(m, dtype=bool)
    sols = []
    while undecided.size:
        u = undecided.size
        # variables: xi (m), t (u), p (u), q (u):  xi_k + t + p = 1, -xi_k + t + q = 1
        nv = m + 3 * u
        A = np.zeros((nc + 2 * u, nv))
        A[:nc, :m] = face.A
        A[nc + np.arange(u), undecided] = 1.0
        A[nc + u + np.arange(u), undecided] = -1.0
        A[nc : nc + u, m : m + u] = np.eye(u)
        A[nc + u :, m : m + u] = np.eye(u)
        A[nc:, m + u :] = np.eye(2 * u)
        b = np.concatenate([face.b, np.ones(2 * u)])
        lo = np.concatenate([lo0, np.zeros(3 * u)])
        hi = np.concatenate([hi0, np.ones(u), np.full(2 * u, np.inf)])
        obj = np.zeros(nv)
        obj[m : m + u] = 1.0
        out = solve_lp(LinearProgram(obj, A, b, lo, hi))
        if not out.optimal:
            raise ContractViolation("face is empty")
        sols.append(out.point[:m])
        t = out.point[m : m + u]
        gained = t > FREE_TOL
        if not np.any(gained):
            break
        free[undecided[gained]] = True
        undecided = undecided[~gained]
    if not sols:
        sols.append(lo0)
    anchor = np.mean(sols, axis=0)
    pinned_values = np.sign(sols[-1])
    return free, anchor, pinned_values


class FacePolytope:
    """Walk domain of a face: free factors, tangent basis and an anchor point.

    Attributes
    ----------
    face : ConstrainedZonotope
    free : bool array
        Factors that are not pinned to the box boundary.
    pinned : array
        Values (+-1) of the pinned factors.
    tangent : (n_free, k) array
        Orthonormal basis of the null space of the free constraint columns.
    anchor : (n_free,) array
        Feasible starting point, strictly inside the box.
    """

    def __init__(self, face: ConstrainedZonotope):
        if face.is_empty():
            raise ContractViolation("cannot sample an empty face")
        self.face = face
        free, anchor, pinned_values = _free_coordinates(face)
        self.free = free
        self.pinned = pinned_values[~free]
        self.anchor = anchor[free]
        A_free = face.A[:, free]
        self.tangent = null_space_basis(A_free, n=int(free.sum()))
        self._G_free = face.G[:, free]
        self._offset = face.c + face.G[:, ~free] @ self.pinned

    @property
    def dim(self) -> int:
        """Dimension of the walk (factor-space affine dimension of the face)."""
        return self.tangent.shape[1]

    def full_factors(self, xi_free) -> np.ndarray:
        xi = np.empty(self.face.n_gen)
        xi[self.free] = xi_free
        xi[~self.free] = self.pinned
        return xi

    def to_workspace(self, xi_free) -> np.ndarray:
        """Workspace point(s) of free-factor vector(s) (one per row)."""
        return np.asarray(xi_free, dtype=float) @ self._G_free.T + self._offset

    def chord(self, x, d) -> tuple[float, float]:
        """Interval of ``lam`` keeping ``x + lam d`` in the box."""
        mask = np.abs(d) > 1e-14
        dm, xm = d[mask], x[mask]
        r1 = (1.0 - xm) / dm
        r2 = (-1.0 - xm) / dm
        lo = float(np.minimum(r1, r2).max(initial=-math.inf))
        hi = float(np.maximum(r1, r2).min(initial=math.inf))
        return min(lo, 0.0), max(hi, 0.0)


@dataclass(frozen=True, eq=False)
class WalkState:
    current: np.ndarray
    rng: np.random.Generator
    step_count: int = 0
    degenerate: bool = False


def start_walk(fp: FacePolytope, seed) -> WalkState:
    return WalkState(fp.anchor.copy(), np.random.default_rng(seed))


def _hit_and_run_chain(fp: FacePolytope, x: np.ndarray, rng: np.random.Generator, steps: int, every: int = 0):
    """Run ``steps`` Hit-and-Run moves from factor point ``x``.

    Directions and chord positions are drawn up front in two batches.
    Returns the final point and, when ``every > 0``, the states after every
    ``every``-th move as rows of an array.
    """
    G = rng.standard_normal((steps, fp.dim))
    U = rng.random(steps)
    if fp.dim == 1 and steps:
        # on a segment every chord is the whole segment: positions are explicit
        t = fp.tangent[:, 0]
        lo, hi = fp.chord(x, t)
        L = hi - lo
        s = np.where(G[:, 0] > 0, lo + U * L, hi - U * L)
        if L <= 0.0:
            s = np.zeros(steps)
        X = np.clip(x + s[:, None] * t, -1.0, 1.0)
        kept = X[every - 1 :: every] if every else X[:0]
        return X[-1].copy(), kept
    D = G @ fp.tangent.T
    kept = []
    for i in range(steps):
        d = D[i]
        mask = np.abs(d) > 1e-14
        if mask.any():
            dm, xm = d[mask], x[mask]
            r1 = (1.0 - xm) / dm
            r2 = (-1.0 - xm) / dm
            lo = min(float(np.minimum(r1, r2).max()), 0.0)
            hi = max(float(np.maximum(r1, r2).min()), 0.0)
            x = x + (lo + U[i] * (hi - lo)) * d
            np.clip(x, -1.0, 1.0, out=x)
        if every and (i + 1) % every == 0:
            kept.append(x)
    return x, np.array(kept).reshape(len(kept), x.size)


def hit_and_run_step(fp: FacePolytope, st: WalkState) -> WalkState:
    """One Hit-and-Run move along a Gaussian direction in the face tangent space."""
    if fp.dim == 0:
        return replace(st, step_count=st.step_count + 1, degenerate=True)
    x, _ = _hit_and_run_chain(fp, st.current, st.rng, 1)
    return WalkState(x, st.rng, st.step_count + 1, degenerate=x is st.current)


def billiard_walk_step(fp: FacePolytope, st: WalkState, kind: SamplerKind) -> WalkState:
    """One Billiard Walk trajectory with specular reflections off the box facets.

    The trajectory length is exponential with mean ``billiard_trajectory_length``.
    A trajectory needing more reflections than the cap is rejected and the
    state is returned unchanged (apart from the consumed randomness).
    """
    if fp.dim == 0:
        return replace(st, step_count=st.step_count + 1, degenerate=True)
    T = fp.tangent
    tau = kind.billiard_trajectory_length or 2.0 * math.sqrt(T.shape[0])
    d = T @ st.rng.standard_normal(fp.dim)
    nrm = np.linalg.norm(d)
    if nrm <= 1e-14:
        return replace(st, step_count=st.step_count + 1, degenerate=True)
    d /= nrm
    length = -tau * math.log(1.0 - st.rng.random())  # 1 - U lies in (0, 1]
    x = st.current.copy()
    reflections = 0
    while True:
        with np.errstate(divide="ignore", invalid="ignore"):
            t_up = np.where(d > 1e-14, (1.0 - x) / d, np.inf)
            t_dn = np.where(d < -1e-14, (-1.0 - x) / d, np.inf)
        t_hit = np.minimum(t_up, t_dn)
        t_hit[t_hit < 0] = 0.0
        k = int(np.argmin(t_hit))
        if length <= t_hit[k]:
            x = np.clip(x + length * d, -1.0, 1.0)
            return WalkState(x, st.rng, st.step_count + 1)
        reflections += 1
        if reflections > kind.billiard_max_reflections:
            return replace(st, step_count=st.step_count + 1)
        x = x + t_hit[k] * d
        x[k] = 1.0 if d[k] > 0 else -1.0
        length -= t_hit[k]
        normal = T @ T[k]  # facet normal projected into the tangent space
        nn = float(normal @ normal)
        if nn <= 1e-14:
            return replace(st, step_count=st.step_count + 1)
        d = d - 2.0 * (d @ normal) / nn * normal


def sample_face(
    face,
    n_samples: int,
    kind: SamplerKind | None = None,
    seed=0,
    *,
    burn_in: int | None = None,
    thin: int | None = None,
    accept=None,
    max_attempts: int | None = None,
) -> np.ndarray:
    """Draw ``n_samples`` workspace points on a face.

    Parameters
    ----------
    face : ConstrainedZonotope or FacePolytope
    kind : SamplerKind, optional
        Defaults to Hit-and-Run.
    seed : int or sequence of ints or numpy SeedSequence
    burn_in, thin : int, optional
        Defaults ``10 * dim`` and ``dim`` (dim = walk dimension).
    accept : callable, optional
        Vectorized point filter: takes a ``(k, n)`` array and returns ``k``
        booleans. Rejected points do not count. At most ``max_attempts``
        (default ``10 * n_samples``) candidates are drawn, so fewer than
        ``n_samples`` rows can come back.

    Returns
    -------
    (k, n) array of points, ``k <= n_samples``.
    """
    if n_samples < 1:
        raise ContractViolation("need at least one sample")
    kind = kind or SamplerKind()
    fp = face if isinstance(face, FacePolytope) else FacePolytope(face)
    dim = fp.dim
    if dim == 0:
        p = fp.to_workspace(fp.anchor)
        if accept is not None and not np.all(accept(p[None, :])):
            return np.zeros((0, p.size))
        return np.tile(p, (n_samples, 1))
    burn_in = 10 * dim if burn_in is None else burn_in
    thin = max(1, dim if thin is None else thin)
    max_attempts = 10 * n_samples if max_attempts is None else max_attempts

    st = start_walk(fp, seed)
    if kind.tag is WalkKind.HIT_AND_RUN:
        def chain(x, steps, every):
            return _hit_and_run_chain(fp, x, st.rng, steps, every)
    else:
        if kind.billiard_trajectory_length is None:
            kind = replace(kind, billiard_trajectory_length=2.0 * math.sqrt(fp.free.sum()))

        def chain(x, steps, every):
            s, kept = WalkState(x, st.rng), []
            for i in range(steps):
                s = billiard_walk_step(fp, s, kind)
                if every and (i + 1) % every == 0:
                    kept.append(s.current)
            return s.current, np.array(kept).reshape(len(kept), x.size)

    x, _ = chain(st.current.copy(), burn_in, 0)
    out = []
    accepted = attempts = 0
    while accepted < n_samples and attempts < max_attempts:
        # the chain does not depend on acceptance, so candidates can be drawn in batches
        batch = min(n_samples - accepted, max_attempts - attempts)
        x, states = chain(x, batch * thin, thin)
        attempts += batch
        pts = fp.to_workspace(states)
        if accept is not None:
            pts = pts[np.asarray(accept(pts), dtype=bool).reshape(-1)]
        pts = pts[: n_samples - accepted]
        out.append(pts)
        accepted += len(pts)
    return np.vstack(out) if out else np.zeros((0, fp.face.dim))
