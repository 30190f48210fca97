"""Limit analysis: estimate Limsup sets and liminf values along shrinking probes
and compare them with exact polyhedral oracles.

Every check returns a :class:`VerificationReport` whose ``status`` is one of
``pass``, ``fail``, ``premise_failed`` (a hypothesis of the checked statement
does not hold, so nothing was claimed) or ``inconclusive`` (no feasible probe
point).
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import convex_sets as cs
from .convex_sets import PolyhedralSet, SupportValue
from .operators import (AffineMonotone, DomainError, DualityMapOp, MaxAffineFunction,
                        Operator, SelectionPolicy, SubdiffMaxAffine, constant,
                        graph_membership, halton_ball, min_norm_selection, monotonicity_probe)
from .operators import Sum as OpSum
from .resolvent import ResolventError, Schedule, min_norm_via_yosida, resolvent
from .space import SpaceSpec, as_coords, lp_duality, lp_norm

STATUSES = ("pass", "fail", "premise_failed", "inconclusive")


@dataclass(frozen=True)
class Tolerances:
    """Every tolerance used by the checks, in one place."""

    face: float = 1e-6
    support: float = 1e-6
    boundary: float = 1e-5
    decomposition: float = 1e-6
    cluster: float = 1e-7
    tangent: float = 1e-9
    membership: float = 1e-8
    constructive: float = 1e-5
    minnorm_agree: float = 1e-9
    set_agree: float = 1e-8
    lipschitz: float = 1e-9
    monotone: float = 1e-9
    # ties at probe points y = x + t w are decided relative to |x| + |y|;
    # an absolute window would swallow the O(t * delta) offsets near x = 0
    probe_activity: float = 1e-14
    # solver-produced points near kinks are off by the solver residual, so
    # their ties are decided relative to the step t instead
    minty_activity: float = 1e-6

    def to_dict(self):
        return asdict(self)

    def updated(self, overrides=None):
        overrides = dict(overrides or {})
        unknown = sorted(set(overrides) - set(self.to_dict()))
        if unknown:
            raise ValueError(f"unknown tolerance name(s): {', '.join(unknown)}")
        return replace(self, **{k: float(v) for k, v in overrides.items()})


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class LimitProbe:
    """Sampling protocol for limits along y = x + t w, t -> 0, w -> v.

    Scales are t_n = t0 * ratio**n. At each scale the directions are v itself
    and ``jitter_count`` seeded low-discrepancy perturbations of radius
    ``jitter * t_n``. ``dense_set`` picks the dense set D used by the
    selection checks: ``"generic"`` shifts directions by an irrational offset
    and drops points on max-affine breakpoint hyperplanes; ``"domain"`` takes
    D = D(A). Face and min-norm checks always sample all of D(A).
    """

    t0: float = 1e-2
    ratio: float = 0.5
    steps: int = 25
    jitter: float = 1.0
    jitter_count: int = 8
    tail: int = 5
    dense_set: str = "generic"
    policy: SelectionPolicy = SelectionPolicy()
    seed: int = 0

    def __post_init__(self):
        if not (self.t0 > 0 and 0 < self.ratio < 1 and self.steps >= self.tail >= 1):
            raise ValueError("invalid probe schedule")
        if self.dense_set not in ("domain", "generic"):
            raise ValueError("dense_set must be 'domain' or 'generic'")

    def scales(self):
        return self.t0 * self.ratio ** np.arange(self.steps)

    def jitters(self, dim):
        if self.jitter_count == 0:
            return np.zeros((0, dim))
        return halton_ball(self.jitter_count, dim, 1.0, seed=self.seed)

    def to_dict(self):
        return {"t0": self.t0, "ratio": self.ratio, "steps": self.steps,
                "jitter": self.jitter, "jitter_count": self.jitter_count,
                "tail": self.tail, "dense_set": self.dense_set,
                "policy": self.policy.to_dict(), "seed": self.seed}

    @classmethod
    def from_dict(cls, d):
        d = dict(d or {})
        if "policy" in d:
            d["policy"] = SelectionPolicy.from_dict(d["policy"])
        return cls(**d)


@dataclass
class LimsupEstimate:
    cluster_points: np.ndarray
    cluster_rays: np.ndarray
    stabilized: bool
    per_scale: list = field(default_factory=list)

    def as_set(self, dim):
        if len(self.cluster_points) == 0:
            return PolyhedralSet.empty(dim)
        return cs.reduce_generators(PolyhedralSet(self.cluster_points, self.cluster_rays, dim=dim))


@dataclass
class VerificationReport:
    theorem_id: str
    status: str
    estimated: object = None
    oracle: object = None
    distance: float = float("nan")
    tolerance: float = float("nan")
    diagnostics: dict = field(default_factory=dict)
    trace: list = field(default_factory=list)
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")

    @property
    def passed(self):
        return self.status == "pass"

    @property
    def ok(self):
        """Not contradicted: pass or premise_failed."""
        return self.status in ("pass", "premise_failed")

    def to_dict(self):
        return {"theorem_id": self.theorem_id, "status": self.status, "pass": self.passed,
                "distance": self.distance, "tolerance": self.tolerance,
                "estimated": _jsonable(self.estimated), "oracle": _jsonable(self.oracle),
                "diagnostics": _jsonable(self.diagnostics), "trace": _jsonable(self.trace),
                "tolerances": self.tolerances}

    def trace_csv_rows(self):
        if not self.trace:
            return []
        keys = sorted(self.trace[0])
        return [keys] + [[row.get(k) for k in keys] for row in self.trace]


def _jsonable(obj):
    if isinstance(obj, (PolyhedralSet, SupportValue)):
        return obj.to_dict()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


# ---------------------------------------------------------------------------
# probing helpers

GENERIC_SHIFT_BASE = np.sqrt(2.0) / 10.0


def _generic_shift(dim):
    # irrational, pairwise incommensurable offsets
    primes = np.array([2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0])[:dim]
    return GENERIC_SHIFT_BASE * np.sqrt(primes) / np.sqrt(2.0)


def _nonzero(v, dim):
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.shape != (dim,) or not np.all(np.isfinite(v)):
        raise ValueError(f"direction must have length {dim}")
    if not np.any(v):
        raise ValueError("direction must be nonzero")
    return v


def _in_domain(A, x):
    x = as_coords(A.space, x)
    if not A.domain.contains(x):
        raise DomainError(f"x = {x.tolist()} is outside D(A)")
    return x


def _probe_atol(x, y, tol):
    return tol.probe_activity * (np.abs(x).max() + np.abs(y).max())


def _kinked_terms(A):
    terms = A.terms if isinstance(A, OpSum) else (A,)
    return [t for t in terms if isinstance(t, SubdiffMaxAffine)]


def _in_dense(A, x, y, probe, tol, dense=False):
    """Value at y, or None when y is outside cl D(A) or (for ``dense``) outside D.

    The generic dense set misses the breakpoint hyperplanes of every
    max-affine term; normal-cone boundaries stay in.
    """
    if not A.domain.contains(y, 0.0):
        return None
    atol = _probe_atol(x, y, tol)
    if dense and probe.dense_set == "generic":
        if any(len(f.value(y, atol).vertices) != 1 for f in _kinked_terms(A)):
            return None
    return A.value(y, atol)


def _probe_points(A, x, v, probe, tol, scale_idx=None, dense=False):
    """Feasible (t, w, y, value) samples per scale, plus skip counts.

    Infeasible points are retracted onto cl D(A); the retracted direction is
    kept when it stays within 2(delta + t) + t**gamma of v. The extra term
    vanishes as t -> 0 and absorbs the curvature of an l^p ball boundary,
    whose retraction error is of order t**(p - 1) when p < 2.
    """
    n = A.dim
    U = probe.jitters(n)
    generic = dense and probe.dense_set == "generic"
    shift = _generic_shift(n) if generic else np.zeros(n)
    scales = probe.scales()
    idx = range(len(scales)) if scale_idx is None else scale_idx
    gamma = 0.5 * (min(A.space.p, 2.0) - 1.0)
    out = []
    for k in idx:
        t = scales[k]
        delta = probe.jitter * t
        ws = [v + delta * shift] + [v + delta * (u + shift) for u in U]
        samples, skipped = [], 0
        for w in ws:
            y = x + t * w
            if not A.domain.contains(y, 0.0):
                y = A.domain.retract(y)
                if np.linalg.norm((y - x) / t - v) > 2.0 * (delta + t) + t ** gamma:
                    skipped += 1
                    continue
            # the realized direction, exact up to rounding of y
            w = (y - x) / t
            val = _in_dense(A, x, y, probe, tol, dense)
            if val is None:
                skipped += 1
                continue
            samples.append((t, w, y, val))
        out.append({"t": t, "samples": samples, "skipped": skipped})
    return out


def _cluster(points, radius, weak=False):
    """Greedy agglomeration; representatives come from the latest samples.

    With ``weak`` the test uses the coordinate functionals instead of the
    norm (the weak topology in finite dimension).
    """
    reps = []
    for z in reversed(list(points)):
        for r in reps:
            d = np.abs(z - r).max() * np.sqrt(len(z)) if weak else np.linalg.norm(z - r)
            if d <= radius:
                break
        else:
            reps.append(np.asarray(z, dtype=float))
    return reps


def _clusters_with_check(points, radius):
    strong = _cluster(points, radius)
    weak = _cluster(points, radius, weak=True)
    same = len(strong) == len(weak) and all(np.array_equal(a, b) for a, b in zip(strong, weak))
    return strong, same


def _stabilized(tail_sets, reps, radius):
    """Every tail scale sees every cluster and nothing else."""
    if not reps:
        return False
    for pts in tail_sets:
        if not pts:
            return False
        for r in reps:
            if min(np.linalg.norm(p - r) for p in pts) > radius:
                return False
    return True


def _limsup_of_values(scales, tail, tol, dim):
    pts, rays, tail_pts = [], [], []
    for rec in scales[-tail:]:
        here = []
        for (_, _, _, val) in rec["samples"]:
            pts.extend(val.vertices)
            rays.extend(val.rays)
            here.extend(val.vertices)
        tail_pts.append(here)
    reps, same = _clusters_with_check(pts, tol.cluster)
    rreps = _cluster(rays, tol.cluster)
    est = LimsupEstimate(np.array(reps).reshape(-1, dim), np.array(rreps).reshape(-1, dim),
                         _stabilized(tail_pts, reps, tol.cluster))
    return est, same


def _scale_trace(scales, stat=None):
    rows = []
    for rec in scales:
        row = {"t": rec["t"], "feasible": len(rec["samples"]), "skipped": rec["skipped"]}
        if stat is not None:
            row["stat"] = stat(rec)
        rows.append(row)
    return rows


def _report(theorem_id, status, tol, **kw):
    return VerificationReport(theorem_id, status, tolerances=tol.to_dict(), **kw)


# ---------------------------------------------------------------------------
# faces


def estimate_limsup_face(A: Operator, x, v, probe: LimitProbe = LimitProbe(),
                         tol: Tolerances = DEFAULT_TOL) -> VerificationReport:
    """Limsup of A(x + t w) as w -> v, t -> 0, against the face A(x; v)."""
    x = _in_domain(A, x)
    v = _nonzero(v, A.dim)
    oracle = cs.face_of(A.value(x), v)
    scales = _probe_points(A, x, v, probe, tol)
    est, same = _limsup_of_values(scales, probe.tail, tol, A.dim)
    trace = _scale_trace(scales, lambda r: len(r["samples"]))
    estimated = est.as_set(A.dim)
    diag = {"stabilized": est.stabilized, "weak_equals_strong": same,
            "weak_limsup": "not applicable (finite dimension)"}
    if oracle.is_empty:
        status = "pass" if estimated.is_empty else "fail"
        dist = 0.0 if estimated.is_empty else float("inf")
        diag["note"] = "empty face: sigma is +inf in direction v"
        return _report("estimate_limsup_face", status, tol, estimated=estimated, oracle=oracle,
                       distance=dist, tolerance=tol.face, diagnostics=diag, trace=trace)
    if estimated.is_empty:
        return _report("estimate_limsup_face", "inconclusive", tol, estimated=estimated,
                       oracle=oracle, tolerance=tol.face, diagnostics=diag, trace=trace)
    h, ang = cs.set_distance_components(estimated, oracle)
    dist = max(h, ang)
    diag.update(hausdorff=h, angular=ang)
    return _report("estimate_limsup_face", "pass" if dist <= tol.face else "fail", tol,
                   estimated=estimated, oracle=oracle, distance=dist, tolerance=tol.face,
                   diagnostics=diag, trace=trace)


def minnorm_limsup_face(A: Operator, x, v, probe: LimitProbe = LimitProbe(),
                        tol: Tolerances = DEFAULT_TOL) -> VerificationReport:
    """Cluster points of A°(x + t w) lie in the face A(x; v); strictness recorded."""
    x = _in_domain(A, x)
    v = _nonzero(v, A.dim)
    oracle = cs.face_of(A.value(x), v)
    if oracle.is_empty:
        raise ValueError("the face A(x; v) is empty; the min-norm face statement needs it nonempty")
    scales = _probe_points(A, x, v, probe, tol)
    q = A.space.q
    per_scale = []
    for rec in scales:
        per_scale.append([cs.min_norm_point(val, q=q) for (_, _, _, val) in rec["samples"]])
    pts = [z for row in per_scale[-probe.tail:] for z in row]
    reps, same = _clusters_with_check(pts, tol.cluster)
    trace = _scale_trace(scales)
    diag = {"weak_equals_strong": same,
            "stabilized": _stabilized(per_scale[-probe.tail:], reps, tol.cluster)}
    if not reps:
        return _report("minnorm_limsup_face", "inconclusive", tol, oracle=oracle,
                       tolerance=tol.face, diagnostics=diag, trace=trace)
    estimated = cs.convex_hull(reps)
    gap = max(cs.euclidean_distance(z, oracle) for z in reps)
    full = cs.set_distance(estimated, oracle)
    diag.update(containment_gap=gap, strict=bool(full > tol.face), gap_to_face=full)
    return _report("minnorm_limsup_face", "pass" if gap <= tol.face else "fail", tol,
                   estimated=estimated, oracle=oracle, distance=gap, tolerance=tol.face,
                   diagnostics=diag, trace=trace)


# ---------------------------------------------------------------------------
# support functions


def _support_report(theorem_id, est_value, oracle_sv, tol, diag, trace, extra_ok=True):
    sigma = oracle_sv.as_float()
    if np.isinf(est_value) or np.isinf(sigma):
        dist = 0.0 if est_value == sigma else float("inf")
    else:
        dist = abs(est_value - sigma)
    estimated = (SupportValue("finite", float(est_value)) if np.isfinite(est_value)
                 else SupportValue("plus_infinity"))
    status = "pass" if (dist <= tol.support and extra_ok) else "fail"
    return _report(theorem_id, status, tol, estimated=estimated, oracle=oracle_sv,
                   distance=dist, tolerance=tol.support, diagnostics=diag, trace=trace)


def _liminf_pairs(A, x, v, probe, tol, pick, sigma_of, dense=False):
    """Per-scale min of <pick(y), w>, the one-sided bound against sigma(w)."""
    scales = _probe_points(A, x, v, probe, tol, dense=dense)
    mins, lower_viol = [], 0.0
    for rec in scales:
        vals = []
        for (_, w, y, val) in rec["samples"]:
            s = float(pick(val, y) @ w)
            vals.append(s)
            sw = sigma_of(w)
            if np.isfinite(sw):
                lower_viol = max(lower_viol, sw - s)
        mins.append(min(vals) if vals else np.inf)
    return scales, mins, lower_viol


def _running_liminf(mins, tail):
    # estimate after truncating the sequence at each depth of the tail window
    n = len(mins)
    return [min(mins[k:]) for k in range(n - tail, n)]


def support_via_minnorm(A: Operator, x, v, probe: LimitProbe = LimitProbe(),
                        tol: Tolerances = DEFAULT_TOL) -> VerificationReport:
    """sigma_Ax(v) = liminf <A°(x + t w), w> for v in T(x; cl D(A)), else +inf."""
    x = _in_domain(A, x)
    v = _nonzero(v, A.dim)
    val_x = A.value(x)
    oracle = cs.support_function(val_x, v)
    cls = A.domain.classify_direction(x, v, tol.tangent)
    diag = {"tangent_class": cls}
    if cls == "outside":
        return _support_report("support_via_minnorm", np.inf, oracle, tol, diag, [])
    q = A.space.q
    sigma_of = lambda w: cs.support_function(val_x, w).as_float()
    scales, mins, lower = _liminf_pairs(
        A, x, v, probe, tol, lambda val, y: cs.min_norm_point(val, q=q), sigma_of)
    trace = _scale_trace(scales)
    for row, m in zip(trace, mins):
        row["min_pairing"] = m
    tail_min = min(mins[-probe.tail:])
    if not np.isfinite(tail_min):
        return _report("support_via_minnorm", "inconclusive", tol, oracle=oracle,
                       tolerance=tol.support, diagnostics=diag, trace=trace)
    running = _running_liminf(mins, probe.tail)
    sigma = oracle.as_float()
    lhs_gap = max(0.0, max(sigma - r for r in running)) if np.isfinite(sigma) else 0.0
    diag.update(lower_bound_violation=lower, lhs_violation=lhs_gap, running_liminf=running)
    ok = lower <= tol.monotone and lhs_gap <= tol.support
    return _support_report("support_via_minnorm", tail_min, oracle, tol, diag, trace, ok)


def support_via_selection(A: Operator, x, v, probe: LimitProbe = LimitProbe(),
                          tol: Tolerances = DEFAULT_TOL) -> VerificationReport:
    """Support function from an arbitrary selection on a dense set D.

    int T: <xi, v> for cluster points xi of the selection (all must agree);
    bd T: liminf <A~(x + t w), w>; otherwise +inf.
    """
    if not A.domain.interior_nonempty:
        raise ValueError("int D(A) is empty; the dense-selection formula needs it nonempty")
    x = _in_domain(A, x)
    v = _nonzero(v, A.dim)
    val_x = A.value(x)
    oracle = cs.support_function(val_x, v)
    cls = A.domain.classify_direction(x, v, tol.tangent)
    diag = {"tangent_class": cls, "policy": probe.policy.to_dict(), "dense_set": probe.dense_set}
    if cls == "outside":
        return _support_report("support_via_selection", np.inf, oracle, tol, diag, [])
    pick = lambda val, y: probe.policy.select(val, y, A.space)
    if cls == "interior":
        scales = _probe_points(A, x, v, probe, tol, dense=True)
        per_scale = [[pick(val, y) for (_, _, y, val) in rec["samples"]] for rec in scales]
        pts = [z for row in per_scale[-probe.tail:] for z in row]
        reps, same = _clusters_with_check(pts, tol.cluster)
        trace = _scale_trace(scales)
        if not reps:
            return _report("support_via_selection", "inconclusive", tol, oracle=oracle,
                           tolerance=tol.support, diagnostics=diag, trace=trace)
        pairings = [float(xi @ v) for xi in reps]
        spread = max(pairings) - min(pairings)
        diag.update(xi=[r.tolist() for r in reps], pairings=pairings, spread=spread,
                    weak_equals_strong=same)
        sigma = oracle.as_float()
        worst = max(pairings, key=lambda s: abs(s - sigma))
        return _support_report("support_via_selection", worst, oracle, tol, diag, trace,
                               spread <= tol.support)
    sigma_of = lambda w: cs.support_function(val_x, w).as_float()
    scales, mins, lower = _liminf_pairs(A, x, v, probe, tol, pick, sigma_of, dense=True)
    trace = _scale_trace(scales)
    for row, m in zip(trace, mins):
        row["min_pairing"] = m
    tail_min = min(mins[-probe.tail:])
    if not np.isfinite(tail_min):
        return _report("support_via_selection", "inconclusive", tol, oracle=oracle,
                       tolerance=tol.support, diagnostics=diag, trace=trace)
    diag.update(lower_bound_violation=lower)
    return _support_report("support_via_selection", tail_min, oracle, tol, diag, trace,
                           lower <= tol.monotone)


# ---------------------------------------------------------------------------
# boundary


def direction_net(dim, count=None, seed=0):
    """Unit directions: +-1 in R, equally spaced angles in R^2, Fibonacci sphere in R^3."""
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        count = count or 720
        # irrational phase keeps the net off axis-aligned kinks
        ang = 2.0 * np.pi * (np.arange(count) + (np.sqrt(2.0) - 1.0)) / count
        return np.column_stack([np.cos(ang), np.sin(ang)])
    if dim == 3:
        count = count or 2000
        k = np.arange(count) + 0.5
        z = 1.0 - 2.0 * k / count
        phi = np.pi * (1.0 + np.sqrt(5.0)) * k
        r = np.sqrt(1.0 - z * z)
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    count = count or 4000
    g = np.random.default_rng(seed).standard_normal((count, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _boundary_oracle(val, tol):
    """Faces covering bd(val): exact facets plus the faces of a direction net."""
    if val.affine_dim() < val.dim:
        return [val]
    faces = []
    A, _ = val.halfspaces
    for a in A:
        faces.append(cs.face_of(val, a))
    for d in direction_net(val.dim):
        F = cs.face_of(val, d)
        if not F.is_empty:
            faces.append(F)
    return _dedup_sets(faces, tol.cluster)


def _dedup_sets(sets, radius):
    out = []
    for S in sets:
        if S.is_empty:
            continue
        if not any(_contained(S, T, radius) and _contained(T, S, radius) for T in out):
            out.append(S)
    return out


def _contained(P, Q, tol=1e-9):
    if P.dim != Q.dim:
        return False
    if any(cs.euclidean_distance(z, Q) > tol for z in P.vertices):
        return False
    return all(cs.euclidean_distance(Q.vertices[0] + r, Q) <= tol * 10 for r in P.rays)


def _sample_polytope(P, n, seed=0):
    V = cs.truncated_vertices(P, 10.0)
    rng = np.random.default_rng(seed)
    W = rng.dirichlet(np.ones(len(V)), size=n) if len(V) > 1 else np.ones((n, 1))
    mids = [(V[i] + V[j]) / 2 for i in range(len(V)) for j in range(i + 1, len(V))]
    return np.vstack([V, np.array(mids).reshape(-1, P.dim), W @ V])


def union_distance(U1, U2, n_samples=64):
    """Hausdorff distance between two finite unions of polyhedra.

    A piece contained in a single piece of the other union contributes 0;
    other pieces are measured by dense sampling.
    """
    def directed(Ua, Ub):
        worst = 0.0
        for P in Ua:
            if any(_contained(P, Q) for Q in Ub):
                continue
            for z in _sample_polytope(P, n_samples):
                worst = max(worst, min(cs.euclidean_distance(z, Q) for Q in Ub))
        return worst

    if not U1 or not U2:
        return 0.0 if (not U1 and not U2) else float("inf")
    return max(directed(U1, U2), directed(U2, U1))


def _frozen(A, x):
    """A with its continuous single-valued terms frozen at their value at x.

    The frozen operator has the same kinks as A, and its values differ from
    those of A by O(|y - x|); it keeps the resolvent in closed or polyhedral
    form when A mixes a max-affine term with a non-gradient affine map.
    """
    terms = list(A.terms) if isinstance(A, OpSum) else [A]
    smooth = [T for T in terms if isinstance(T, (AffineMonotone, DualityMapOp))]
    if not smooth or len(smooth) == len(terms):
        return A
    shift = sum(T.value(x).vertices[0] for T in smooth)
    rest = [T for T in terms if T not in smooth]
    return OpSum(rest + [constant(shift, A.space)], A.space)


def _minty_points(A, x, val, t, count):
    """Points y = x + t (J_q(xi) - J_q(eta)) near x whose values contain boundary points.

    For xi on a dual sphere around A x, the resolvent of A at x + t J_q(xi)
    returns y with eta in A(y); as xi varies, eta sweeps bd(A x) and y visits
    the kinks where A(y) is a whole face.
    """
    q = A.space.q
    B = _frozen(A, x)
    c = val.vertices.mean(axis=0)
    rad = 1.0 + max(np.linalg.norm(val.vertices - c, axis=1).max(), 0.0)
    ys = []
    for s in direction_net(A.dim, count):
        xi = c + rad * s
        try:
            it = resolvent(B, x + t * lp_duality(xi, q), t)
        except (ResolventError, DomainError):
            continue
        ys.append(it.x_lambda)
    return ys


def boundary_estimate(A: Operator, x, probe: LimitProbe = LimitProbe(),
                      tol: Tolerances = DEFAULT_TOL, sphere_count=64,
                      minty_count=None) -> VerificationReport:
    """bd(A x) from the values A(y) at points y -> x, y != x."""
    x = _in_domain(A, x)
    val = A.value(x)
    oracle = _boundary_oracle(val, tol)
    n = A.dim
    minty_count = minty_count or {1: 2, 2: 180, 3: 400}.get(n, 600)
    sphere = direction_net(n, sphere_count) if n > 1 else direction_net(1)
    scales = probe.scales()[-probe.tail:]
    pieces, trace, skipped = [], [], 0
    for t in scales:
        ys = [(A.domain.retract(x + t * w), None) for w in sphere]
        ys += [(y, tol.minty_activity * t) for y in _minty_points(A, x, val, t, minty_count)]
        here = 0
        for y, atol in ys:
            if np.linalg.norm(y - x) == 0.0 or not A.domain.contains(y, 0.0):
                skipped += 1
                continue
            pieces.append(A.value(y, _probe_atol(x, y, tol) if atol is None else atol))
            here += 1
        trace.append({"t": t, "feasible": here})
    estimated = _dedup_sets(pieces, tol.cluster)
    diag = {"interior_empty": bool(val.affine_dim() < val.dim), "n_pieces": len(estimated),
            "n_oracle_faces": len(oracle), "skipped": skipped}
    if not estimated:
        return _report("boundary_estimate", "inconclusive", tol, oracle=oracle,
                       tolerance=tol.boundary, diagnostics=diag, trace=trace)
    dist = union_distance(estimated, oracle)
    return _report("boundary_estimate", "pass" if dist <= tol.boundary else "fail", tol,
                   estimated=estimated, oracle=oracle, distance=dist,
                   tolerance=tol.boundary, diagnostics=diag, trace=trace)


# ---------------------------------------------------------------------------
# constructive sequence


def constructive_face_sequence(A: Operator, x, xstar, v, n_max: int = 40,
                               tol: Tolerances = DEFAULT_TOL) -> VerificationReport:
    """Sequences t_n = 1/n, w_n -> v, a_n* -> x* with a_n* in A(x + t_n w_n).

    Built from the resolvents of B = A - J(v) - x*, exactly as in the
    existence argument for the face representation.
    """
    x = _in_domain(A, x)
    v = _nonzero(v, A.dim)
    xstar = as_coords(A.space, xstar, "xstar")
    face = cs.face_of(A.value(x), v)
    if face.is_empty or not cs.membership(xstar, face, 1e-9):
        raise ValueError("x* is not in the face A(x; v); the construction needs it")
    p, q = A.space.p, A.space.q
    Jv = lp_duality(v, p)
    B = OpSum([A, constant(-Jv - xstar, A.space)], A.space)
    rows, werr, aerr, resid = [], [], [], []
    hint = None
    for n in range(1, n_max + 1):
        t = 1.0 / n
        it = resolvent(B, x, t, hint=hint)
        hint = it.support
        w = -lp_duality(it.yosida_value, q)
        a = it.yosida_value + Jv + xstar
        try:
            r = cs.euclidean_distance(a, A.value(it.x_lambda))
        except DomainError:
            r = float("inf")
        werr.append(lp_norm(w - v, p))
        aerr.append(lp_norm(a - xstar, q))
        resid.append(r)
        rows.append({"n": n, "t": t, "w": w.tolist(), "a": a.tolist(), "membership": r,
                     "w_error": werr[-1], "a_error": aerr[-1]})
    tail = [e for e in werr[-6:]]
    ratios = [tail[i + 1] / tail[i] for i in range(len(tail) - 1) if tail[i] > 1e-14]
    geometric = all(r <= 0.9 for r in ratios)
    final = max(werr[-1], aerr[-1])
    ok = max(resid) <= tol.membership and final <= tol.constructive
    diag = {"max_membership_residual": max(resid), "final_w_error": werr[-1],
            "final_a_error": aerr[-1], "tail_ratios": ratios, "geometric": geometric}
    return _report("constructive_face_sequence", "pass" if ok else "fail", tol,
                   estimated={"w": rows[-1]["w"], "a": rows[-1]["a"]},
                   oracle={"v": v.tolist(), "xstar": xstar.tolist()},
                   distance=final, tolerance=tol.constructive, diagnostics=diag, trace=rows)


# ---------------------------------------------------------------------------
# decompositions


def _support_gap(S, T, directions):
    worst, matched = 0.0, True
    for d in directions:
        a, b = cs.support_function(S, d), cs.support_function(T, d)
        if a.is_finite != b.is_finite:
            matched = False
            worst = float("inf")
        elif a.is_finite:
            worst = max(worst, abs(a.value - b.value))
    return worst, matched


def decompose(A: Operator, x, probe: LimitProbe = LimitProbe(), variant: str = "m5",
              tol: Tolerances = DEFAULT_TOL, n_directions: int = 200,
              sphere_count=None) -> VerificationReport:
    """A x = cl co{cluster points of A~ near x through D} + N(x; cl D(A)).

    ``m5`` approaches x along all directions; ``m4`` only along directions
    into the interior of the domain, each with its own jittered probe.
    """
    if not A.domain.interior_nonempty:
        raise ValueError("int D(A) is empty; the global decomposition needs it nonempty")
    if variant not in ("m4", "m5"):
        raise ValueError("variant must be 'm4' or 'm5'")
    x = as_coords(A.space, x)
    n = A.dim
    if not A.domain.contains(x):
        return _report("decompose", "pass", tol, estimated=PolyhedralSet.empty(n),
                       oracle=PolyhedralSet.empty(n), distance=0.0,
                       tolerance=tol.decomposition,
                       diagnostics={"note": "x outside D(A): both sides empty"})
    val = A.value(x)
    pick = lambda val_, y: probe.policy.select(val_, y, A.space)
    net = direction_net(n, sphere_count or {1: 2, 2: 96, 3: 300}.get(n, 600))
    shift = _generic_shift(n) if probe.dense_set == "generic" else np.zeros(n)
    pts, trace = [], []
    tail_scales = probe.scales()[-probe.tail:]
    if variant == "m5":
        for t in tail_scales:
            here = 0
            for w in net:
                y = A.domain.retract(x + t * (w + 1e-3 * shift))
                val_y = _in_dense(A, x, y, probe, tol, dense=True)
                if val_y is None or np.array_equal(y, x):
                    continue
                pts.append(pick(val_y, y))
                here += 1
            trace.append({"t": t, "feasible": here})
    else:
        inner = [w for w in net if A.domain.classify_direction(x, w, tol.tangent) == "interior"]
        idx = list(range(probe.steps - probe.tail, probe.steps))
        for w in inner:
            for rec in _probe_points(A, x, w, probe, tol, idx, dense=True):
                pts.extend(pick(val_y, y) for (_, _, y, val_y) in rec["samples"])
        trace.append({"directions": len(inner), "samples": len(pts)})
    reps = _cluster(pts, tol.cluster)
    if not reps:
        return _report("decompose", "inconclusive", tol, oracle=val,
                       tolerance=tol.decomposition, trace=trace)
    N = A.domain.normal_cone(x)
    rhs = cs.minkowski_sum(cs.convex_hull(reps), N)
    rng = np.random.default_rng(probe.seed)
    D = rng.standard_normal((n_directions, n))
    D /= np.linalg.norm(D, axis=1, keepdims=True)
    gap, matched = _support_gap(rhs, val, D)
    diag = {"variant": variant, "n_clusters": len(reps), "matched_infinity": matched,
            "policy": probe.policy.to_dict(), "dense_set": probe.dense_set}
    ok = matched and gap <= tol.decomposition
    return _report("decompose", "pass" if ok else "fail", tol, estimated=rhs, oracle=val,
                   distance=gap, tolerance=tol.decomposition, diagnostics=diag, trace=trace)


# ---------------------------------------------------------------------------
# premise-conditional corollaries


def _region_sample(A, center, radius, n, seed, include_center=True):
    center = as_coords(A.space, center, "center")
    pts = halton_ball(n, A.dim, radius, seed=seed, p=A.space.p, center=center)
    if include_center:
        pts = np.vstack([center[None, :], pts])
    return [y for y in pts if A.domain.contains(y, 0.0)]


def local_bound_check(A: Operator, x, r: float, rho: float, n_samples: int = 64, seed=0,
                      tol: Tolerances = DEFAULT_TOL) -> VerificationReport:
    """If |A°y| <= rho on B(x; r) then A y lies in N(y; cl D(A)) + rho B*."""
    if r <= 0 or rho < 0:
        raise ValueError("need r > 0 and rho >= 0")
    x = as_coords(A.space, x)
    ys = _region_sample(A, x, r, n_samples, seed)
    if not ys:
        raise ValueError("no feasible samples in B(x; r) ∩ D(A)")
    q = A.space.q
    norms = [lp_norm(min_norm_selection(A, y), q) for y in ys]
    diag = {"n_samples": len(ys), "max_minnorm": max(norms)}
    if max(norms) > rho + tol.minnorm_agree:
        diag["note"] = "premise |A°y| <= rho violated on the sample"
        return _report("local_bound_check", "premise_failed", tol, distance=max(norms),
                       tolerance=rho, diagnostics=diag)
    inside = A.domain.contains_ball(x, r, A.space.p)
    worst = 0.0
    for y in ys:
        Ay = A.value(y)
        N = A.domain.normal_cone(y)
        for u in Ay.vertices:
            d = lp_norm(cs.minimize_over_hull(N.vertices - u, N.rays, q).z, q) \
                if len(N.rays) else lp_norm(u, q)
            worst = max(worst, d - rho)
        for ray in Ay.rays:
            # recession directions of A y must lie in the normal cone
            if cs.euclidean_distance(ray, N) > tol.membership:
                worst = float("inf")
        if inside:
            worst = max(worst, max(lp_norm(u, q) for u in Ay.vertices) - rho)
            if len(Ay.rays):
                worst = float("inf")
    diag.update(ball_inside_domain=bool(inside), worst_excess=worst)
    return _report("local_bound_check", "pass" if worst <= tol.membership else "fail", tol,
                   distance=max(worst, 0.0), tolerance=tol.membership, diagnostics=diag)


def _sets_intersect(S, T, tol):
    V = (S.vertices[:, None, :] - T.vertices[None, :, :]).reshape(-1, S.dim)
    R = np.vstack([S.rays, -T.rays])
    return np.linalg.norm(cs.minimize_over_hull(V, R, 2.0).z) <= tol


def unique_determination_check(A1: Operator, A2: Operator, center, radius: float,
                               n_samples: int = 64, mode: str = "minnorm", seed=0,
                               tol: Tolerances = DEFAULT_TOL) -> VerificationReport:
    """Equal min-norm selections (or pairwise-intersecting values on a dense set)
    on a region force equal operators there."""
    if mode not in ("minnorm", "intersection"):
        raise ValueError("mode must be 'minnorm' or 'intersection'")
    if A1.space != A2.space:
        raise ValueError("operators live on different spaces")
    center = as_coords(A1.space, center, "center")
    raw = halton_ball(n_samples, A1.dim, radius, seed=seed, p=A1.space.p, center=center)
    for y in raw:
        if A1.domain.contains(y, 0.0) != A2.domain.contains(y, 0.0):
            raise ValueError("domain mismatch detected on the region sample")
    premise_pts = [y for y in raw if A1.domain.contains(y, 0.0)]
    if mode == "intersection":
        # D: points where both operators are single-valued off breakpoints
        shift = _generic_shift(A1.dim) * radius * 1e-3
        premise_pts = [y + shift for y in premise_pts if A1.domain.contains(y + shift, 0.0)]
    premise_gap = 0.0
    for y in premise_pts:
        if mode == "minnorm":
            gap = np.linalg.norm(min_norm_selection(A1, y) - min_norm_selection(A2, y))
        else:
            gap = 0.0 if _sets_intersect(A1.value(y), A2.value(y), tol.minnorm_agree) else np.inf
        premise_gap = max(premise_gap, gap)
    diag = {"mode": mode, "n_premise": len(premise_pts), "premise_gap": premise_gap}
    if premise_gap > tol.minnorm_agree:
        return _report("unique_determination_check", "premise_failed", tol,
                       distance=premise_gap, tolerance=tol.minnorm_agree, diagnostics=diag)
    val_raw = halton_ball(n_samples, A1.dim, radius, seed=seed + 1, p=A1.space.p, center=center)
    val_pts = [center] + [y for y in val_raw if A1.domain.contains(y, 0.0)]
    val_pts = [y for y in val_pts if A1.domain.contains(y, 0.0)]
    worst = 0.0
    for y in val_pts:
        worst = max(worst, cs.set_distance(A1.value(y), A2.value(y)))
    diag["n_validation"] = len(val_pts)
    return _report("unique_determination_check", "pass" if worst <= tol.set_agree else "fail",
                   tol, distance=worst, tolerance=tol.set_agree, diagnostics=diag)


def lipschitz_bound(f: MaxAffineFunction, space: SpaceSpec, ell: float, n_dense: int = 256,
                    n_pairs: int = 500, seed=0, box: float = 2.0,
                    tol: Tolerances = DEFAULT_TOL) -> VerificationReport:
    """If every sampled subdifferential meets ell B*, f is ell-Lipschitz."""
    if ell < 0:
        raise ValueError("ell must be nonnegative")
    A = SubdiffMaxAffine(f, space)
    q, p = space.q, space.p
    shift = _generic_shift(space.dim)
    dense = halton_ball(n_dense, space.dim, box, seed=seed) + shift
    mins = [lp_norm(min_norm_selection(A, y), q) for y in dense]
    diag = {"max_minnorm_on_D": max(mins)}
    if max(mins) > ell + tol.lipschitz:
        diag["note"] = "premise violated: a subdifferential misses the ball ell B*"
        return _report("lipschitz_bound", "premise_failed", tol, distance=max(mins),
                       tolerance=ell, diagnostics=diag)
    rng = np.random.default_rng(seed)
    X = rng.uniform(-box, box, size=(n_pairs, 2, space.dim))
    worst = -np.inf
    for a, b in X:
        worst = max(worst, abs(f(a) - f(b)) - ell * lp_norm(a - b, p))
    # every subgradient met on the sample, kinks included, has dual norm <= ell
    sub = max(lp_norm(u, q) for y in list(dense) + [np.zeros(space.dim)]
              for u in A.value(y).vertices)
    diag.update(worst_excess=worst, max_subgradient_norm=sub)
    ok = worst <= tol.lipschitz and sub <= ell + tol.lipschitz
    return _report("lipschitz_bound", "pass" if ok else "fail", tol,
                   distance=max(worst, 0.0), tolerance=tol.lipschitz, diagnostics=diag)


# ---------------------------------------------------------------------------
# resolvent-side checks wrapped as reports


def resolvent_nonexpansive(A: Operator, lam: float = 1.0, n_pairs: int = 100, seed=0,
                           box: float = 2.0, tol: float = 1e-10) -> VerificationReport:
    """|x_lam - y_lam| <= |x - y| on seeded pairs; Hilbert case only."""
    if A.space.p != 2.0:
        raise ValueError("nonexpansiveness of the resolvent is a Hilbert-space (p = 2) property")
    rng = np.random.default_rng(seed)
    X = rng.uniform(-box, box, size=(n_pairs, 2, A.dim))
    worst = -np.inf
    for a, b in X:
        ra, rb = resolvent(A, a, lam).x_lambda, resolvent(A, b, lam).x_lambda
        worst = max(worst, np.linalg.norm(ra - rb) - np.linalg.norm(a - b))
    return _report("resolvent_nonexpansive", "pass" if worst <= tol else "fail", DEFAULT_TOL,
                   distance=max(worst, 0.0), tolerance=tol,
                   diagnostics={"n_pairs": n_pairs, "lambda": lam, "worst_excess": worst})


def min_norm_via_yosida_report(A: Operator, x, schedule=None, tol: float = 1e-5):
    schedule = schedule or Schedule()
    val, conv = min_norm_via_yosida(A, x, schedule)
    lams = schedule.values()
    trace = [{"lambda": lam, "error": e} for lam, e in zip(lams, conv.errors)]
    return _report("min_norm_via_yosida", "pass" if conv.final_error <= tol else "fail", DEFAULT_TOL,
                   estimated=val, oracle=conv.exact, distance=conv.final_error, tolerance=tol,
                   diagnostics={"final_lambda": float(lams[-1])}, trace=trace)


def graph_membership_report(A: Operator, x, xstar, radius=0.1, n_samples=64, seed=0):
    g = graph_membership(A, x, xstar, radius, n_samples, seed)
    return _report("graph_membership", "pass" if g.agree else "fail", DEFAULT_TOL,
                   estimated=g.sampled, oracle=g.exact, distance=0.0 if g.agree else 1.0,
                   tolerance=0.0, diagnostics=g.to_dict())


def monotonicity_report(A: Operator, n_pairs=100, seed=0):
    m = monotonicity_probe(A, n_pairs, seed)
    return _report("monotonicity_probe", "pass" if m.passed else "fail", DEFAULT_TOL,
                   distance=max(0.0, -m.min_value), tolerance=1e-10, diagnostics=m.to_dict())
