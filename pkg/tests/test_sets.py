import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_cz
from zonotube.errors import (
    DimensionMismatchError,
    EmptySetError,
    GaugeDomainError,
    ProjectionBudgetError,
    SetError,
)
from zonotube.sets import (
    ConstrainedZonotope,
    Ellipsoid,
    HPolytope,
    bounding_box,
    contains,
    contract,
    distance_inf,
    enumerate_vertices,
    gauge,
    hpolytope_is_empty,
    hrep_to_czonotope,
    is_empty,
    linear_map,
    minkowski_sum,
    polar,
    pontryagin_diff,
    remove_redundant,
    sample_points,
    scale,
    set_from_dict,
    support_function,
    to_hrep,
)

seeds = st.integers(0, 2**32 - 1)


def vertex_support(s, d):
    return float(np.max(enumerate_vertices(s) @ d))


def bisection_gauge(s, x, hi=1e3, iters=80):
    """Gauge by bisection on membership of ``x`` in ``t s``."""
    lo = 0.0
    if not contains(scale(s, hi), x, tol=1e-12):
        raise ValueError("bracket too small")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid > 0 and contains(scale(s, mid), x, tol=1e-12):
            hi = mid
        else:
            lo = mid
    return hi


# -- construction and validation ------------------------------------------------

def test_box_and_point_constructors():
    b = ConstrainedZonotope.box([1.0, -1.0], [2.0, 0.5])
    np.testing.assert_array_equal(b.G, np.diag([2.0, 0.5]))
    p = ConstrainedZonotope.point([3.0, 4.0])
    assert p.num_generators == 0 and contains(p, [3.0, 4.0])
    assert not contains(p, [3.0, 4.1])


def test_dimension_mismatch_rejected():
    with pytest.raises(DimensionMismatchError):
        ConstrainedZonotope([0.0, 0.0], np.eye(3))
    with pytest.raises(DimensionMismatchError):
        minkowski_sum(ConstrainedZonotope.box([0.0], [1.0]), ConstrainedZonotope.box([0.0, 0.0], [1.0, 1.0]))


def test_empty_detection():
    z = ConstrainedZonotope([0.0], [[1.0, 1.0]], [[1.0, 0.0]], [2.0])
    assert is_empty(z)
    with pytest.raises(EmptySetError):
        support_function(z, [1.0])
    assert not is_empty(ConstrainedZonotope([0.0], [[1.0, 1.0]], [[1.0, 1.0]], [1.5]))


def test_serialization_round_trip(rng):
    z = random_cz(rng)
    z2 = set_from_dict(z.to_dict())
    np.testing.assert_array_equal(z.G, z2.G)
    np.testing.assert_array_equal(z.theta, z2.theta)
    h = HPolytope(np.eye(2), [1.0, 2.0])
    np.testing.assert_array_equal(set_from_dict(h.to_dict()).q, h.q)
    e = Ellipsoid(np.diag([1.0, 4.0]))
    np.testing.assert_array_equal(set_from_dict(e.to_dict()).P, e.P)
    with pytest.raises(SetError):
        set_from_dict({"foo": 1})


def test_ellipsoid_requires_spd():
    with pytest.raises(SetError):
        Ellipsoid([[1.0, 2.0], [2.0, 1.0]])


# -- support functions ----------------------------------------------------------

def test_box_support_closed_form():
    # h = d.c + sum |d_i| r_i
    b = ConstrainedZonotope.box([1.0, 2.0], [0.5, 3.0])
    assert support_function(b, [1.0, -1.0]) == pytest.approx(1.0 - 2.0 + 0.5 + 3.0)


@given(seeds)
def test_support_matches_vertex_oracle(seed):
    rng = np.random.default_rng(seed)
    z = random_cz(rng)
    for d in rng.normal(size=(5, 2)):
        assert support_function(z, d) == pytest.approx(vertex_support(z, d), abs=1e-7)


@given(seeds)
def test_minkowski_sum_support_is_additive(seed):
    rng = np.random.default_rng(seed)
    a, b = random_cz(rng), random_cz(rng)
    s = minkowski_sum(a, b)
    for d in rng.normal(size=(4, 2)):
        assert support_function(s, d) == pytest.approx(support_function(a, d) + support_function(b, d), abs=1e-7)


@given(seeds)
def test_linear_map_support_uses_transpose(seed):
    rng = np.random.default_rng(seed)
    z = random_cz(rng)
    M = rng.normal(size=(3, 2))
    for d in rng.normal(size=(4, 3)):
        assert support_function(linear_map(M, z), d) == pytest.approx(support_function(z, M.T @ d), abs=1e-7)


def test_contract_and_scale():
    z = ConstrainedZonotope.box([1.0, 1.0], [1.0, 1.0])
    c = contract(z, 0.5)
    assert support_function(c, [1.0, 0.0]) == pytest.approx(1.5)
    s = scale(z, 2.0)
    assert support_function(s, [1.0, 0.0]) == pytest.approx(4.0)
    with pytest.raises(ValueError):
        contract(z, 1.5)


def test_ellipsoid_and_hpolytope_support():
    e = Ellipsoid(np.diag([4.0, 1.0]))
    assert support_function(e, [1.0, 0.0]) == pytest.approx(2.0)
    h = HPolytope.box([-1.0, -2.0], [1.0, 2.0])
    assert support_function(h, [1.0, 1.0]) == pytest.approx(3.0)
    lo, hi = bounding_box(h)
    np.testing.assert_allclose(hi, [1.0, 2.0])
    np.testing.assert_allclose(lo, [-1.0, -2.0])


# -- membership -----------------------------------------------------------------

@given(seeds)
def test_sampled_points_are_members(seed):
    rng = np.random.default_rng(seed)
    z = random_cz(rng)
    H = to_hrep(z)
    for x in sample_points(z, 10, rng):
        assert contains(z, x, tol=1e-7)
        assert np.all(H.Q @ x <= H.q + 1e-7)


def test_distance_inf_box():
    b = ConstrainedZonotope.box([0.0, 0.0], [1.0, 1.0])
    assert distance_inf(b, [3.0, 0.5]) == pytest.approx(2.0)
    assert distance_inf(b, [0.2, 0.5]) == pytest.approx(0.0, abs=1e-12)


# -- H-representation -----------------------------------------------------------

@given(seeds)
def test_to_hrep_faces_touch_vertices(seed):
    rng = np.random.default_rng(seed)
    z = random_cz(rng)
    H = to_hrep(z)
    V = enumerate_vertices(z)
    slack = H.q[:, None] - H.Q @ V.T
    assert slack.min() >= -1e-7
    # every face is supporting: some vertex attains it
    assert np.all(slack.min(axis=1) <= 1e-6)
    np.testing.assert_allclose(enumerate_vertices(H), V, atol=1e-6)


def test_to_hrep_budget():
    z = ConstrainedZonotope.zonotope([0.0, 0.0], np.ones((2, 13)))
    with pytest.raises(ProjectionBudgetError):
        to_hrep(z)


def test_remove_redundant_drops_implied_row():
    rows = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]])
    rhs = np.array([1.0, 1.0, 1.0, 1.0, 5.0])
    r, b = remove_redundant(rows, rhs)
    assert r.shape[0] == 4


@given(seeds)
def test_hrep_to_czonotope_round_trip(seed):
    rng = np.random.default_rng(seed)
    z = random_cz(rng)
    back = hrep_to_czonotope(to_hrep(z))
    np.testing.assert_allclose(enumerate_vertices(back), enumerate_vertices(z), atol=1e-6)


def test_hpolytope_emptiness():
    assert hpolytope_is_empty(HPolytope([[1.0], [-1.0]], [-1.0, 0.0]))
    assert not hpolytope_is_empty(HPolytope.box([0.0], [1.0]))


# -- polar and gauge ------------------------------------------------------------

def test_box_gauge():
    q = ConstrainedZonotope.box([0.0, 0.0, 0.0], [20.0, 20.0, 20.0])
    assert gauge(q, [0.5, 0.0, 0.0]) == pytest.approx(0.025)
    assert gauge(q, [0.0, 0.0, 0.0]) == 0.0


def test_gauge_domain():
    with pytest.raises(GaugeDomainError):
        gauge(ConstrainedZonotope.box([1.0, 0.0], [0.5, 0.5]), [0.0, 0.0])
    with pytest.raises(GaugeDomainError):
        gauge(ConstrainedZonotope.box([0.0, 0.0], [1.0, 0.0]), [0.0, 0.0])


@given(seeds)
def test_gauge_matches_bisection_oracle(seed):
    rng = np.random.default_rng(seed)
    G = rng.normal(size=(2, int(rng.integers(2, 5))))
    s = ConstrainedZonotope.zonotope([0.0, 0.0], G)
    if np.linalg.matrix_rank(G) < 2:
        return
    x = rng.normal(size=2)
    assert gauge(s, x) == pytest.approx(bisection_gauge(s, x), rel=1e-6, abs=1e-9)


@given(seeds)
def test_gauge_equals_polar_support(seed):
    rng = np.random.default_rng(seed)
    G = rng.normal(size=(2, int(rng.integers(2, 5))))
    if np.linalg.matrix_rank(G) < 2:
        return
    s = ConstrainedZonotope.zonotope([0.0, 0.0], G)
    p = polar(s)
    H = to_hrep(s)
    for x in rng.normal(size=(3, 2)):
        assert gauge(s, x) == pytest.approx(support_function(p, x), rel=1e-7, abs=1e-9)
        # the gauge of a polytope is its largest normalized face value
        assert gauge(s, x) == pytest.approx(np.max(H.Q @ x / H.q), rel=1e-7, abs=1e-9)


@given(seeds)
def test_gauge_is_sublinear(seed):
    rng = np.random.default_rng(seed)
    s = ConstrainedZonotope.zonotope([0.0, 0.0], rng.normal(size=(2, 3)) + np.hstack([np.eye(2), np.zeros((2, 1))]))
    x, y = rng.normal(size=(2, 2))
    t = float(rng.uniform(0.1, 5.0))
    assert gauge(s, t * x) == pytest.approx(t * gauge(s, x), rel=1e-7)
    assert gauge(s, x + y) <= gauge(s, x) + gauge(s, y) + 1e-8


def test_constrained_gauge_matches_vertex_hrep():
    # hexagon as a constrained zonotope through its H-rep lift
    angles = np.arange(6) * np.pi / 3
    h = HPolytope(np.column_stack([np.cos(angles), np.sin(angles)]), np.ones(6))
    z = hrep_to_czonotope(h)
    for x in ([0.3, 0.1], [-1.0, 2.0], [0.0, -0.7]):
        assert gauge(z, x) == pytest.approx(np.max(h.Q @ x), abs=1e-7)


def test_polar_preconditions():
    with pytest.raises(SetError):
        polar(ConstrainedZonotope.box([1.0, 0.0], [1.0, 1.0]))
    with pytest.raises(SetError):
        polar(ConstrainedZonotope.zonotope([0.0, 0.0], [[1.0, 2.0], [2.0, 4.0]]))


# -- Pontryagin difference -------------------------------------------------------

@given(seeds)
def test_pontryagin_difference_inclusion(seed):
    rng = np.random.default_rng(seed)
    big = ConstrainedZonotope.zonotope([0.0, 0.0], 3.0 * np.eye(2) + 0.3 * rng.normal(size=(2, 2)))
    small = ConstrainedZonotope.zonotope(0.1 * rng.normal(size=2), 0.3 * rng.normal(size=(2, 2)))
    diff = pontryagin_diff(big, small)
    H = to_hrep(big)
    # (big - small) + small  is inside big: check on vertex sums
    for v in enumerate_vertices(diff):
        for w in enumerate_vertices(small):
            assert np.all(H.Q @ (v + w) <= H.q + 1e-7)


def test_pontryagin_difference_of_boxes():
    d = pontryagin_diff(ConstrainedZonotope.box([0.0, 0.0], [1.0, 1.0]),
                        ConstrainedZonotope.box([0.0, 0.0], [0.3, 0.1]))
    lo, hi = bounding_box(d)
    np.testing.assert_allclose(hi, [0.7, 0.9], atol=1e-9)
    with pytest.raises(EmptySetError):
        pontryagin_diff(ConstrainedZonotope.box([0.0], [1.0]), ConstrainedZonotope.box([0.0], [2.0]))


def test_vertex_enumeration_of_square():
    V = enumerate_vertices(ConstrainedZonotope.box([0.0, 0.0], [1.0, 1.0]))
    expected = np.array(list(itertools.product([-1.0, 1.0], repeat=2)))
    np.testing.assert_allclose(V, expected)
