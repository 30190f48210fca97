import json

import numpy as np
import pytest
from conftest import affine_op, ball_op, box_op, sign_op, tri_op

from monoface.convex_sets import PolyhedralSet, face_of, set_distance
from monoface.jsonio import dumps
from monoface.limits import (LimitProbe, Tolerances, VerificationReport, boundary_estimate,
                             constructive_face_sequence, decompose, direction_net,
                             estimate_limsup_face, lipschitz_bound, local_bound_check,
                             minnorm_limsup_face, resolvent_nonexpansive, support_via_minnorm,
                             support_via_selection, unique_determination_check, union_distance)
from monoface.operators import (DomainError, MaxAffineFunction, NormalConeMap, SelectionPolicy,
                                SubdiffMaxAffine, Sum)
from monoface.space import SpaceSpec

PROBE = LimitProbe()


def _set(d):
    return d if isinstance(d, PolyhedralSet) else PolyhedralSet.from_dict(d)


@pytest.mark.parametrize("A,x,v,expected", [
    (sign_op(), [0.0], [1.0], PolyhedralSet.point([1.0])),
    (sign_op(), [0.0], [-1.0], PolyhedralSet.point([-1.0])),
    (tri_op(), [0, 0], [1, 1], PolyhedralSet([[1, 0], [0, 1]])),
    (tri_op(), [0, 0], [-1, -1], PolyhedralSet.point([0, 0])),
    (box_op(), [1, 1], [-1, 0], PolyhedralSet.cone([[0, 1]], dim=2)),
    (ball_op(), [1, 0], [0, 1], PolyhedralSet.cone([[1, 0]], dim=2)),
    (ball_op(), [1, 0], [-1, 0], PolyhedralSet.point([0, 0])),
    (affine_op([[1, 0], [0, 2]], [1, 1]), [1, 1], [1, -1], PolyhedralSet.point([2, 3])),
])
def test_estimate_limsup_face_examples(A, x, v, expected):
    rep = estimate_limsup_face(A, x, v, PROBE)
    assert rep.status == "pass"
    assert set_distance(_set(rep.estimated), expected) <= 1e-6
    assert rep.diagnostics["weak_equals_strong"]


def test_face_outward_empty():
    rep = estimate_limsup_face(box_op(), [1, 0], [1, 0], PROBE)
    assert rep.status == "pass"
    assert _set(rep.estimated).is_empty and _set(rep.oracle).is_empty


def test_minnorm_strict_inclusion_on_ball():
    rep = minnorm_limsup_face(ball_op(), [1, 0], [0, 1], PROBE)
    assert rep.status == "pass"
    assert rep.diagnostics["strict"]
    assert _set(rep.estimated) == PolyhedralSet.point([0, 0])
    assert _set(rep.oracle) == PolyhedralSet.cone([[1, 0]], dim=2)


def test_minnorm_equality_on_triangle():
    rep = minnorm_limsup_face(tri_op(), [0, 0], [1, 1], PROBE)
    assert rep.status == "pass" and not rep.diagnostics["strict"]


def test_minnorm_needs_nonempty_face():
    with pytest.raises(ValueError, match="empty"):
        minnorm_limsup_face(box_op(), [1, 0], [1, 0], PROBE)


def test_zero_direction_and_outside_domain():
    with pytest.raises(ValueError, match="nonzero"):
        estimate_limsup_face(tri_op(), [0, 0], [0, 0], PROBE)
    with pytest.raises(DomainError):
        estimate_limsup_face(box_op(), [2, 0], [1, 0], PROBE)


@pytest.mark.parametrize("A,x,v,expected", [
    (tri_op(), [0, 0], [1, 2], 2.0),
    (tri_op(), [0, 0], [-1, -1], 0.0),
    (sign_op(), [0.0], [-3.0], 3.0),
    (box_op(), [1, 0], [0, 1], 0.0),
    (box_op(), [1, 0], [1, 0], np.inf),
    (ball_op(), [1, 0], [-1, 0], 0.0),
    (tri_op(3.0), [0, 0], [1, 2], 2.0),
])
def test_support_via_minnorm(A, x, v, expected):
    rep = support_via_minnorm(A, x, v, PROBE)
    assert rep.status == "pass"
    got = rep.estimated.as_float()
    assert got == pytest.approx(expected, abs=1e-6)
    # the running liminf never undercuts the support function
    assert rep.diagnostics.get("lower_bound_violation", 0.0) <= 1e-6


@pytest.mark.parametrize("kind", ["min_norm", "vertex_lexicographic", "seeded_random_vertex",
                                  "support_argmax"])
@pytest.mark.parametrize("A,x,v", [(tri_op(), [0, 0], [1, 2]), (box_op(), [1, 1], [-1, 0.5]),
                                   (sign_op(), [0.0], [1.0])])
def test_support_via_selection_policies(kind, A, x, v):
    pol = SelectionPolicy(kind, direction=(1.0,) * A.dim if kind == "support_argmax" else None,
                          seed=5)
    probe = LimitProbe(policy=pol, dense_set="generic")
    rep = support_via_selection(A, x, v, probe)
    assert rep.status == "pass", rep.diagnostics


def test_boundary_sign():
    rep = boundary_estimate(sign_op(), [0.0], PROBE)
    assert rep.status == "pass"
    pieces = [_set(d) for d in rep.estimated]
    assert union_distance(pieces, [PolyhedralSet.point([-1]), PolyhedralSet.point([1])]) <= 1e-9
    rep2 = boundary_estimate(sign_op(), [2.0], PROBE)
    assert rep2.status == "pass"
    assert [_set(d) for d in rep2.estimated] == [PolyhedralSet.point([1.0])]


def test_boundary_triangle_edges():
    rep = boundary_estimate(tri_op(), [0, 0], PROBE)
    assert rep.status == "pass" and rep.distance <= 1e-5
    assert rep.diagnostics["n_pieces"] == rep.diagnostics["n_oracle_faces"] == 6


def test_boundary_ball_sphere():
    rep = boundary_estimate(ball_op(), [1, 0], PROBE)
    assert rep.status == "pass" and rep.distance <= 1e-5


def test_decompose_examples():
    rep = decompose(box_op(), [1, 1], PROBE)
    assert rep.status == "pass"
    assert _set(rep.estimated) == PolyhedralSet.cone([[1, 0], [0, 1]], dim=2)
    interval = NormalConeMap(PolyhedralSet.interval(0, 1), SpaceSpec(1))
    rep = decompose(interval, [1.0], PROBE)
    assert rep.status == "pass"
    assert _set(rep.estimated) == PolyhedralSet.cone([[1.0]], dim=1)
    for variant in ("m4", "m5"):
        assert decompose(tri_op(), [0, 0], PROBE, variant=variant).status == "pass"


def test_decompose_needs_interior():
    seg = NormalConeMap(PolyhedralSet([[0, 0], [1, 0]]), SpaceSpec(2))
    with pytest.raises(ValueError, match="empty"):
        decompose(seg, [0.5, 0.0], PROBE)


@pytest.mark.parametrize("A,x,xs,v", [
    (tri_op(), [0, 0], [0.5, 0.5], [1, 1]),
    (tri_op(), [0, 0], [1, 0], [1, 0]),
    (sign_op(), [0.0], [1.0], [1.0]),
    (box_op(), [1, 0], [2.0, 0.0], [0, 1]),
    (tri_op(1.5), [0, 0], [0.3, 0.7], [1, 1]),
])
def test_constructive_sequence(A, x, xs, v):
    rep = constructive_face_sequence(A, x, xs, v)
    assert rep.status == "pass"
    assert rep.diagnostics["max_membership_residual"] <= 1e-8


def test_constructive_requires_face_point():
    with pytest.raises(ValueError, match="face"):
        constructive_face_sequence(tri_op(), [0, 0], [0.2, 0.2], [1, 1])


def test_constructive_slow_rate_is_reported_honestly():
    # curved boundary: the residual decays like 1/n, not geometrically
    rep = constructive_face_sequence(ball_op(), [1, 0], [1, 0], [0, 1])
    assert rep.status == "fail"
    assert not rep.diagnostics["geometric"]
    assert rep.diagnostics["max_membership_residual"] <= 1e-8


def test_p15_ball_tangent_is_slow():
    # at p < 2 the sphere is only Holder smooth and the tail error is ~1e-3
    rep = estimate_limsup_face(ball_op(1.5), [1, 0], [0, 1], PROBE)
    assert rep.status == "fail"
    assert 1e-4 < rep.distance < 1e-2


def test_local_bound():
    assert local_bound_check(sign_op(), [0.0], 1.0, 1.0).status == "pass"
    assert local_bound_check(sign_op(), [0.0], 1.0, 0.25).status == "premise_failed"
    assert local_bound_check(box_op(), [0, 0], 0.5, 0.0).status == "pass"
    assert local_bound_check(ball_op(), [0, 0], 0.5, 0.0).status == "pass"
    with pytest.raises(ValueError):
        local_bound_check(box_op(), [0, 0], 0.5, -1.0)


def test_unique_determination():
    sign2 = SubdiffMaxAffine(MaxAffineFunction([[2.0], [-2.0]], [0.0, 0.0]))
    assert unique_determination_check(sign_op(), sign_op(), [0.0], 1.0).status == "pass"
    assert unique_determination_check(sign_op(), sign2, [0.0], 1.0).status == "premise_failed"
    redundant = SubdiffMaxAffine(MaxAffineFunction([[1, 0], [0, 1], [0, 0], [0.2, 0.2]],
                                                   [0, 0, 0, -1]))
    for mode in ("minnorm", "intersection"):
        assert unique_determination_check(tri_op(), redundant, [0, 0], 1.0,
                                          mode=mode).status == "pass"


def test_lipschitz():
    f = MaxAffineFunction([[1, 0], [0, 1], [0, 0]], [0, 0, 0])
    assert lipschitz_bound(f, SpaceSpec(2), 1.0).status == "pass"
    assert lipschitz_bound(MaxAffineFunction([[0.0, 0.0]], [3.0]), SpaceSpec(2),
                           0.0).status == "pass"
    rep = lipschitz_bound(MaxAffineFunction([[2.0]], [0.0]), SpaceSpec(1), 1.0)
    assert rep.status == "premise_failed"


def test_resolvent_nonexpansive_requires_hilbert():
    assert resolvent_nonexpansive(tri_op(), n_pairs=20).status == "pass"
    with pytest.raises(ValueError, match="p = 2"):
        resolvent_nonexpansive(tri_op(3.0))


def test_probe_schedule_and_roundtrip():
    p = LimitProbe(seed=3, dense_set="generic", policy=SelectionPolicy("vertex_lexicographic"))
    s = p.scales()
    assert len(s) == 25 and s[0] == 1e-2 and s[1] == 5e-3
    assert LimitProbe.from_dict(p.to_dict()) == p
    J = p.jitters(2)
    assert J.shape == (8, 2)
    with pytest.raises(ValueError):
        LimitProbe(dense_set="everywhere")


def test_direction_net():
    D = direction_net(2, 720, 0)
    np.testing.assert_allclose(np.linalg.norm(D, axis=1), 1.0)
    assert len(D) == 720
    D3 = direction_net(3, 100, 0)
    assert D3.shape == (100, 3)


def test_tolerances_override():
    t = Tolerances().updated({"face": 1e-3})
    assert t.face == 1e-3 and t.support == Tolerances().support
    with pytest.raises(ValueError):
        Tolerances().updated({"nope": 1.0})


def test_report_serializes_stably():
    rep = estimate_limsup_face(tri_op(), [0, 0], [1, 1], PROBE)
    d = rep.to_dict()
    assert set(d) >= {"theorem_id", "status", "pass", "distance", "tolerance", "estimated",
                      "oracle", "diagnostics", "trace", "tolerances"}
    text = dumps(d)
    assert text == dumps(estimate_limsup_face(tri_op(), [0, 0], [1, 1], PROBE).to_dict())
    assert json.loads(text)["pass"] is True
    assert isinstance(rep, VerificationReport) and rep.ok


def test_sum_with_rotation_boundary():
    A = Sum([tri_op(), affine_op([[0, 1], [-1, 0]], [0, 0])])
    rep = boundary_estimate(A, [0, 0], PROBE)
    assert rep.status == "pass" and rep.distance <= 1e-5


def test_face_agrees_with_exact_face_of_value():
    A = tri_op()
    rep = estimate_limsup_face(A, [0.3, 0.3], [1, -1], PROBE)
    assert _set(rep.oracle) == face_of(A.value([0.3, 0.3]), [1, -1])


def bundled_checks(*theorem_ids):
    from monoface.cli import gallery_configs
    return [pytest.param(cfg, c, id=f"{cfg.name}-{c['id']}")
            for _, cfg in gallery_configs() for c in cfg.checks
            if c["theorem_id"] in theorem_ids]


@pytest.mark.parametrize("cfg,check", bundled_checks("estimate_limsup_face", "minnorm_limsup_face",
                                                     "support_via_minnorm", "decompose",
                                                     "constructive_face_sequence"))
def test_bundled_invariants(cfg, check):
    from monoface.runner import run_check
    rep = run_check(cfg, check)
    d = rep.diagnostics or {}
    tid = check["theorem_id"]
    assert rep.status == "pass"
    if tid == "estimate_limsup_face":
        assert rep.distance <= 1e-6
    if "weak_equals_strong" in d:
        assert d["weak_equals_strong"] is True
    if tid == "support_via_minnorm" and "lower_bound_violation" in d:
        assert d["lower_bound_violation"] <= 1e-9
        assert d["lhs_violation"] <= 1e-6
    if tid == "decompose":
        assert rep.distance <= 1e-6
    if tid == "constructive_face_sequence":
        assert d["max_membership_residual"] <= 1e-8
        assert all(r <= 0.9 for r in d["tail_ratios"])


@pytest.mark.parametrize("kind", SelectionPolicy.KINDS)
def test_generic_dense_set_keeps_domain_boundary(kind):
    # box corner, boundary-class direction along a facet
    pol = SelectionPolicy(kind, (0.0, 1.0)) if kind == "support_argmax" else SelectionPolicy(kind)
    A = Sum([box_op(), tri_op()])
    rep = support_via_selection(A, [1.0, 1.0], [0.0, -1.0], LimitProbe(policy=pol))
    assert rep.diagnostics["dense_set"] == "generic"
    assert rep.diagnostics["tangent_class"] == "boundary"
    assert rep.status == "pass"


def test_face_estimate_ignores_dense_set():
    # the limsup runs over all of D(A): breakpoint samples must stay in
    reps = [estimate_limsup_face(tri_op(), [0.0, 0.0], [1.0, 1.0], LimitProbe(dense_set=d))
            for d in ("generic", "domain")]
    assert reps[0].estimated == reps[1].estimated == PolyhedralSet([[1, 0], [0, 1]])
