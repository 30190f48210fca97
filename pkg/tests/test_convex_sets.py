import itertools

import numpy as np
import pytest
from conftest import linprog_support
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from monoface.convex_sets import (EmptySetError, PolyhedralSet, convex_hull, euclidean_distance,
                                  face_of, generators_to_halfspaces, halfspaces_to_generators,
                                  membership, min_norm_point, minkowski_sum, normal_cone,
                                  polar_cone, project, reduce_generators, set_distance,
                                  support_function, tangent_cone)

TRIANGLE = PolyhedralSet([[1, 0], [0, 1], [0, 0]])


points = arrays(np.float64, st.tuples(st.integers(1, 6), st.just(2)),
                elements=st.floats(-5, 5, allow_nan=False, allow_subnormal=False))
rays = arrays(np.float64, st.tuples(st.integers(0, 2), st.just(2)),
              elements=st.floats(-1, 1, allow_nan=False, allow_subnormal=False))
dirs = arrays(np.float64, 2, elements=st.floats(-3, 3, allow_nan=False, allow_subnormal=False)
              ).filter(lambda d: np.linalg.norm(d) > 1e-3)


@settings(max_examples=150, deadline=None)
@given(points, rays, dirs)
def test_support_matches_linprog(V, R, d):
    S = PolyhedralSet(V, R)
    # the LP solver cannot resolve rays within its own tolerance of orthogonal to d
    assume(not len(S.rays) or np.min(np.abs(S.rays @ d)) > 1e-6 * np.linalg.norm(d))
    ref = linprog_support(S.vertices, S.rays, d)
    sv = support_function(S, d)
    if np.isinf(ref):
        assert sv.kind == "plus_infinity"
        assert sv.certificate @ d > 0
    else:
        assert sv.kind == "finite"
        assert sv.value == pytest.approx(ref, abs=1e-7 * (1 + abs(ref)))
        assert membership(sv.certificate, S)


def test_triangle_face_and_support():
    assert support_function(TRIANGLE, [1, 1]).as_float() == 1.0
    assert face_of(TRIANGLE, [1, 1]) == PolyhedralSet([[1, 0], [0, 1]])
    assert face_of(TRIANGLE, [-1, 0]) == PolyhedralSet([[0, 0], [0, 1]])
    assert face_of(TRIANGLE, [1, 2]) == PolyhedralSet.point([0, 1])


def test_face_of_unbounded():
    cone = PolyhedralSet.cone([[1, 0]], dim=2)
    assert support_function(cone, [1, 0]).kind == "plus_infinity"
    assert face_of(cone, [1, 0]).is_empty
    assert face_of(cone, [0, 1]) == cone
    assert face_of(cone, [-1, 0]) == PolyhedralSet.point([0, 0])


def test_empty_set_raises():
    E = PolyhedralSet.empty(2)
    with pytest.raises(EmptySetError):
        support_function(E, [1, 0])
    with pytest.raises(EmptySetError):
        min_norm_point(E)


def test_zero_direction_rejected():
    with pytest.raises(ValueError, match="nonzero"):
        support_function(TRIANGLE, [0, 0])


def test_min_norm_closed_forms():
    seg = PolyhedralSet([[1, 1], [2, -1]])
    np.testing.assert_allclose(min_norm_point(seg), [1.2, 0.6], atol=1e-12)
    # q = 1.5: stationarity gives (1+s) = 4(1-2s), s = 1/3
    np.testing.assert_allclose(min_norm_point(seg, q=1.5), [4 / 3, 1 / 3], atol=1e-10)
    # q = 3: (1+s) = sqrt(2)(1-2s)
    s = (np.sqrt(2) - 1) / (1 + 2 * np.sqrt(2))
    np.testing.assert_allclose(min_norm_point(seg, q=3.0), [1 + s, 1 - 2 * s], atol=1e-10)
    np.testing.assert_allclose(min_norm_point(TRIANGLE), [0, 0], atol=1e-15)


def test_min_norm_with_rays():
    # [1, inf) x {1} in the plane: the nearest point is (1, 1)
    S = PolyhedralSet([[1, 1]], [[1, 0]])
    np.testing.assert_allclose(min_norm_point(S, q=1.5), [1, 1], atol=1e-10)
    S = PolyhedralSet([[-2, 1]], [[1, 0]])
    np.testing.assert_allclose(min_norm_point(S), [0, 1], atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(points, st.sampled_from([1.5, 2.0, 3.0]))
def test_min_norm_is_optimal(V, q):
    """No convex combination of the minimizer with a vertex has smaller norm."""
    S = PolyhedralSet(V)
    z = min_norm_point(S, q=q)
    assert membership(z, S, tol=1e-7)
    nz = np.sum(np.abs(z) ** q) ** (1 / q)
    for w in S.vertices:
        for s in (1e-3, 0.1, 0.5, 1.0):
            y = (1 - s) * z + s * w
            assert np.sum(np.abs(y) ** q) ** (1 / q) >= nz - 1e-8


def test_box_normal_and_tangent_cones():
    B = PolyhedralSet.box([-1, -1], [1, 1])
    corner = [1, 1]
    N = normal_cone(corner, B)
    assert N == PolyhedralSet.cone([[1, 0], [0, 1]], dim=2)
    T = tangent_cone(corner, B)
    assert T == PolyhedralSet.cone([[-1, 0], [0, -1]], dim=2)
    assert normal_cone([0, 0], B) == PolyhedralSet.point([0, 0])
    assert normal_cone([1, 0], B) == PolyhedralSet.cone([[1, 0]], dim=2)
    assert polar_cone(N) == T


def test_normal_cone_outside_raises():
    with pytest.raises(ValueError):
        normal_cone([2, 0], PolyhedralSet.box([-1, -1], [1, 1]))


def test_cone_angle_distance():
    a = PolyhedralSet.cone([[1, 0]], dim=2)
    b = PolyhedralSet.cone([[0, 1]], dim=2)
    assert set_distance(a, b) == pytest.approx(10.0)
    assert set_distance(a, a) == 0.0


def test_interval_distance_and_self_distance():
    assert set_distance(PolyhedralSet.interval(0, 1), PolyhedralSet.interval(0, 2)) == \
        pytest.approx(1.0)
    assert set_distance(TRIANGLE, TRIANGLE) == 0.0


def test_from_halfspaces_triangle():
    S = PolyhedralSet.from_halfspaces([[-1, 0], [0, -1], [1, 1]], [0, 0, 1])
    assert S == TRIANGLE
    assert S.has_halfspaces


def test_from_halfspaces_unbounded_and_empty():
    S = PolyhedralSet.from_halfspaces([[0, -1]], [0])
    assert not S.is_bounded
    assert S.affine_dim() == 2
    assert PolyhedralSet.from_halfspaces([[1.0], [-1.0]], [0.0, -1.0]).is_empty


def test_hrep_vrep_roundtrip():
    V = np.array([[0, 0], [2, 0], [2, 1], [0, 3], [1, 1]], dtype=float)
    A, b = generators_to_halfspaces(V, np.zeros((0, 2)))
    V2, R2 = halfspaces_to_generators(A, b)
    assert len(R2) == 0
    assert PolyhedralSet(V2) == reduce_generators(PolyhedralSet(V))


def test_reduce_and_hull():
    S = PolyhedralSet([[0, 0], [1, 0], [0, 1], [0.2, 0.2]])
    assert len(reduce_generators(S).vertices) == 3
    H = convex_hull([[0, 0], [1, 0], [0, 1], [0.2, 0.2]])
    assert H == TRIANGLE


def test_minkowski_sum():
    s = minkowski_sum(PolyhedralSet.interval(0, 1), PolyhedralSet.interval(-1, 2))
    assert s == PolyhedralSet.interval(-1, 3)


def test_projection_and_distance():
    np.testing.assert_allclose(project([1, 1], TRIANGLE), [0.5, 0.5], atol=1e-12)
    assert euclidean_distance([1, 1], TRIANGLE) == pytest.approx(np.sqrt(0.5))
    assert euclidean_distance([0.2, 0.2], TRIANGLE) == pytest.approx(0.0, abs=1e-14)


def test_affine_dim_and_canonical_order():
    assert PolyhedralSet.point([1, 2]).affine_dim() == 0
    assert PolyhedralSet([[0, 0], [1, 1]]).affine_dim() == 1
    assert TRIANGLE.affine_dim() == 2
    S = PolyhedralSet([[1, 0], [0, 0], [1, 0]])
    np.testing.assert_array_equal(S.vertices, [[0, 0], [1, 0]])


def test_serialization_roundtrip():
    for S in (TRIANGLE, PolyhedralSet.box([0, 0], [1, 2]), PolyhedralSet.cone([[1, 1]], dim=2),
              PolyhedralSet.from_halfspaces([[0, -1]], [0])):
        T = PolyhedralSet.from_dict(S.to_dict())
        assert T == S
    assert "-0.0" not in repr(PolyhedralSet.box([0, 0], [1, 1]).to_dict())


def active_set_min_norm(V):
    """Min Euclidean norm over conv(V) by projecting 0 onto every vertex subset's hull."""
    best = None
    k_max = min(len(V), V.shape[1] + 1)
    for k in range(1, k_max + 1):
        for idx in itertools.combinations(range(len(V)), k):
            S = V[list(idx)]
            K = np.block([[S @ S.T, np.ones((k, 1))], [np.ones((1, k)), np.zeros((1, 1))]])
            rhs = np.r_[np.zeros(k), 1.0]
            sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
            lam = sol[:k]
            if np.any(lam < -1e-12) or abs(lam.sum() - 1) > 1e-9:
                continue
            z = lam @ S
            if best is None or np.linalg.norm(z) < np.linalg.norm(best):
                best = z
    return best


@settings(max_examples=150, deadline=None)
@given(points)
def test_min_norm_q2_matches_active_set_enumeration(V):
    z = min_norm_point(PolyhedralSet(V), q=2.0)
    ref = active_set_min_norm(V)
    assert abs(np.linalg.norm(z) - np.linalg.norm(ref)) <= 1e-8
    np.testing.assert_allclose(z, ref, atol=1e-6)


@settings(max_examples=150, deadline=None)
@given(points, rays, dirs)
def test_face_is_subset_with_same_support(V, R, d):
    S = PolyhedralSet(V, R)
    F = face_of(S, d)
    sv = support_function(S, d)
    if not sv.is_finite:
        assert F.is_empty
        return
    for z in F.vertices:
        assert membership(z, S, tol=1e-7)
    assert support_function(F, d).value == pytest.approx(sv.value, abs=1e-9 * (1 + abs(sv.value)))


@settings(max_examples=150, deadline=None)
@given(points, rays, dirs, dirs, st.floats(1e-3, 10.0))
def test_support_function_is_sublinear(V, R, d1, d2, c):
    S = PolyhedralSet(V, R)
    s1, s2 = support_function(S, d1).as_float(), support_function(S, d2).as_float()
    s12 = support_function(S, d1 + d2).as_float() if np.any(d1 + d2) else 0.0
    if np.isfinite(s1) and np.isfinite(s2):
        assert s12 <= s1 + s2 + 1e-9 * (1 + abs(s1) + abs(s2))
    if c > 0:
        sc = support_function(S, c * d1).as_float()
        assert sc == pytest.approx(c * s1, rel=1e-9, abs=1e-9) if np.isfinite(s1) else np.isinf(sc)


@pytest.mark.parametrize("x", [[1.0, 1.0], [1.0, 0.0], [0.0, 0.0], [-1.0, 0.3]])
def test_tangent_cone_is_polar_of_normal_cone(x):
    box = PolyhedralSet.box([-1, -1], [1, 1])
    T = tangent_cone(x, box)
    P = polar_cone(normal_cone(x, box))
    rng = np.random.default_rng(4)
    for d in rng.standard_normal((200, 2)):
        assert membership(d, T, 1e-9) == membership(d, P, 1e-9)


@settings(max_examples=60, deadline=None)
@given(points, points, points)
def test_set_distance_is_a_metric_on_polytopes(A, B, C):
    a, b, c = PolyhedralSet(A), PolyhedralSet(B), PolyhedralSet(C)
    ab = set_distance(a, b)
    assert ab == pytest.approx(set_distance(b, a), abs=1e-9)
    assert set_distance(a, c) <= ab + set_distance(b, c) + 1e-9
