import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import cz_vertices, Polygon
from hzplan.errors import ContractViolation, DegenerateInformedSet
from hzplan.informed import update_reachable_set
from hzplan.sets import Box, ConstrainedZonotope, Ellipsoid, Ellipsotope, HybridZonotope, informed_contains

SQUARE = ConstrainedZonotope(np.eye(2), np.zeros(2))


def test_cz_contains_examples(rng):
    assert SQUARE.contains([0.0, 0.0])
    assert not SQUARE.contains([2.0, 0.0])
    G = rng.normal(size=(2, 3))
    Z = ConstrainedZonotope(G, rng.normal(size=2), [[1.0, 1.0, 0.0]], [0.0])
    xi = np.array([0.4, -0.4, 0.9])
    assert Z.contains(Z.point(xi))
    with pytest.raises(ContractViolation):
        SQUARE.contains([0.0, 0.0, 0.0])


def test_cz_is_empty_examples():
    assert ConstrainedZonotope([[1.0]], [0.0], [[1.0]], [2.0]).is_empty()
    assert not SQUARE.is_empty()
    Z = ConstrainedZonotope(np.eye(2), np.zeros(2), [[1.0, 1.0]], [1.5])
    assert not Z.is_empty()
    assert Z.factors_feasible([1.0, 0.5])


def test_generalized_intersection_examples(rng):
    same = SQUARE.intersect_generalized(SQUARE)
    X = rng.uniform(-1.5, 1.5, size=(300, 2))
    assert [same.contains(x) for x in X] == [SQUARE.contains(x) for x in X]
    far = ConstrainedZonotope(np.eye(2), [3.0, 0.0])
    assert SQUARE.intersect_generalized(far).is_empty()

    Y = ConstrainedZonotope.from_box([0, -1], [2, 1])
    Z = SQUARE.intersect_generalized(Y)
    X = rng.uniform(-1.5, 2.5, size=(1000, 2))
    oracle = (X[:, 0] >= 0) & (X[:, 0] <= 1) & (np.abs(X[:, 1]) <= 1)
    got = np.array([Z.contains(x) for x in X])
    assert np.array_equal(got, oracle)


def test_generalized_intersection_with_map(rng):
    # {z in Z : R z in Y}, checked against direct membership in both directions
    Z = ConstrainedZonotope(rng.normal(size=(2, 3)), rng.normal(size=2))
    Y = ConstrainedZonotope(rng.normal(size=(1, 2)), [0.2])
    R = np.array([[1.0, -0.5]])
    W = Z.intersect_generalized(Y, R)
    for x in rng.uniform(-4, 4, size=(300, 2)):
        assert W.contains(x) == (Z.contains(x) and Y.contains(R @ x))


def test_box_bound_examples(rng):
    assert SQUARE.box_bound() == Box([-1, -1], [1, 1])
    assert ConstrainedZonotope([[1.0, 1.0], [0.0, 1.0]], [0, 0]).box_bound() == Box([-2, -1], [2, 1])
    Z = ConstrainedZonotope(rng.normal(size=(2, 4)), rng.normal(size=2), rng.normal(size=(1, 4)), [0.1])
    B = Z.box_bound()
    pts = cz_vertices(Z)
    lam = rng.dirichlet(np.ones(len(pts)), size=1000)
    assert all(B.contains(x, tol=1e-12) for x in lam @ pts)


def test_ellipsoid_contains_examples():
    E = Ellipsoid([1.0, 2.0], np.diag([3.0, 0.5]))
    assert E.contains([1.0, 2.0])
    assert Ellipsoid(np.zeros(3), np.eye(3)).contains([1.0, 0.0, 0.0])
    assert not Ellipsoid(np.zeros(2), np.diag([0.25, 1.0])).contains([2.01, 0.0])
    with pytest.raises(ContractViolation):
        Ellipsoid(np.zeros(2), [[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(ContractViolation):
        Ellipsoid(np.zeros(2), np.diag([1.0, -1.0]))


def test_informed_contains_examples(rng):
    xs, xg = np.zeros(2), np.array([2.0, 0.0])
    assert informed_contains(xs, xg, 2.0, xs)
    assert informed_contains(xs, xg, 2.0, [1.0, 0.0])
    assert not informed_contains(xs, xg, 2.0, [1.0, 0.1])
    with pytest.raises(DegenerateInformedSet):
        informed_contains(xs, xg, 1.9, xs)
    E = update_reachable_set(xs, xg, 4.0).ellipsoid
    X = rng.uniform([-2, -3], [4, 3], size=(1000, 2))
    q = E.quadratic(X)
    keep = np.abs(q - 1) > 1e-6
    assert np.array_equal(informed_contains(xs, xg, 4.0, X)[keep], (q <= 1 + 1e-12)[keep])


def test_ellipsotope_matches_ellipsoid(rng):
    G = rng.normal(size=(3, 3))
    T = Ellipsotope(np.ones(3), G)
    E = T.to_ellipsoid()
    for x in rng.normal(size=(300, 3)) * 2 + 1:
        if abs(E.quadratic(x) - 1) > 1e-6:
            assert T.contains(x) == E.contains(x)
    with pytest.raises(ContractViolation):
        Ellipsotope(np.zeros(2), np.eye(2), index_set=[[0]])


def test_sets_are_immutable():
    with pytest.raises(AttributeError):
        SQUARE.c = np.ones(2)
    with pytest.raises(ValueError):
        SQUARE.G[0, 0] = 5.0
    hz = HybridZonotope(np.eye(2), [[1.0], [0.0]], [0.0, 0.0])
    with pytest.raises(AttributeError):
        hz.b = None


def test_hybrid_leaf_and_relaxation():
    hz = HybridZonotope(np.eye(2), [[2.0], [0.0]], [0.0, 0.0])
    assert hz.leaf([1.0]).contains([2.5, 0.0])
    assert not hz.leaf([-1.0]).contains([2.5, 0.0])
    assert hz.relaxation().contains([0.0, 0.0])
    moved = hz.linear_map(np.diag([1.0, 2.0]), [1.0, 0.0])
    assert moved.leaf([-1.0]).contains([-2.0, 2.0])
    doubled = hz.minkowski_sum(hz)
    assert doubled.n_bin == 2 and doubled.leaf([1.0, 1.0]).contains([6.0, 0.0])


@st.composite
def constrained_zonotopes(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    ng = draw(st.integers(2, 4))
    nc = draw(st.integers(0, 1))
    G = rng.normal(size=(2, ng))
    A = rng.normal(size=(nc, ng))
    return ConstrainedZonotope(G, rng.normal(size=2), A, A @ rng.uniform(-0.8, 0.8, ng)), rng


@settings(max_examples=30, deadline=None)
@given(constrained_zonotopes())
def test_membership_matches_vertex_hull(arg):
    Z, rng = arg
    pts = cz_vertices(Z)
    if len(pts) < 3 or np.linalg.matrix_rank(pts[1:] - pts[0]) < 2:
        return
    P = Polygon(pts)
    B = Z.box_bound()
    for x in rng.uniform(B.lower - 0.5, B.upper + 0.5, size=(40, 2)):
        m = P.signed_margin(x)
        if abs(m) > 1e-6:
            assert Z.contains(x) == (m < 0)


@settings(max_examples=30, deadline=None)
@given(constrained_zonotopes())
def test_zero_generator_invariance(arg):
    Z, rng = arg
    W = Z.with_zero_generator()
    B = Z.box_bound()
    for x in rng.uniform(B.lower, B.upper, size=(20, 2)):
        assert W.contains(x) == Z.contains(x)


@settings(max_examples=30, deadline=None)
@given(constrained_zonotopes())
def test_box_bound_is_conservative(arg):
    Z, rng = arg
    B = Z.box_bound()
    for k in range(2):
        e = np.eye(2)[k]
        assert Z.support(e)[0] <= B.upper[k] + 1e-9
        assert -Z.support(-e)[0] >= B.lower[k] - 1e-9
