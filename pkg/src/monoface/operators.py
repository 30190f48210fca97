"""Maximal monotone operators with exactly computable values.

Every operator carries its :class:`~monoface.space.SpaceSpec`; values are
:class:`~monoface.convex_sets.PolyhedralSet` objects in dual coordinates.
"""
from __future__ import annotations

import itertools
import zlib
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import qmc

from . import convex_sets as cs
from .convex_sets import PolyhedralSet
from .space import SpaceSpec, as_coords, lp_duality, lp_norm

ACTIVITY_TOL = 1e-9


class DomainError(ValueError):
    """The point lies outside the domain of the operator."""


# ---------------------------------------------------------------------------
# domains


class WholeSpace:
    kind = "whole"
    interior_nonempty = True

    def __init__(self, dim):
        self.dim = int(dim)

    def contains(self, y, tol=1e-9):
        return True

    def is_interior(self, y, tol=1e-9):
        return True

    def normal_cone(self, y, atol=ACTIVITY_TOL):
        return PolyhedralSet.point(np.zeros(self.dim))

    def classify_direction(self, x, v, tol=1e-9):
        return "interior"

    def retract(self, y):
        return np.asarray(y, dtype=float)

    def contains_ball(self, x, r, p):
        return True

    def as_set(self):
        eye = np.eye(self.dim)
        return PolyhedralSet(np.zeros((1, self.dim)), np.vstack([eye, -eye]))

    def to_dict(self):
        return {"kind": self.kind, "dim": self.dim, "interior_nonempty": True}


class PolyhedralDomain:
    """Closed polyhedral domain, stored with both representations."""

    kind = "polyhedral"

    def __init__(self, C: PolyhedralSet):
        if C.is_empty:
            raise ValueError("operator domain must be nonempty")
        self.C = C
        self.dim = C.dim
        self.A, self.b = C.halfspaces
        self.interior_nonempty = C.affine_dim() == C.dim

    def contains(self, y, tol=1e-9):
        y = np.asarray(y, dtype=float)
        return bool(len(self.A) == 0 or np.all(self.A @ y - self.b <= tol))

    def is_interior(self, y, tol=1e-9):
        y = np.asarray(y, dtype=float)
        return bool(len(self.A) == 0 or np.all(self.A @ y - self.b < -tol))

    def active(self, y, atol=ACTIVITY_TOL):
        y = np.asarray(y, dtype=float)
        return self.A[np.abs(self.A @ y - self.b) <= atol]

    def normal_cone(self, y, atol=ACTIVITY_TOL):
        act = self.active(y, atol)
        if len(act) == 0:
            return PolyhedralSet.point(np.zeros(self.dim))
        return cs.reduce_generators(PolyhedralSet(np.zeros((1, self.dim)), act))

    def classify_direction(self, x, v, tol=1e-9):
        """Position of v relative to T(x; C): interior, boundary or outside."""
        act = self.active(x)
        if len(act) == 0:
            return "interior"
        v = np.asarray(v, dtype=float)
        s = act @ (v / np.linalg.norm(v))
        if s.max() > tol:
            return "outside"
        if s.max() < -tol and self.interior_nonempty:
            return "interior"
        return "boundary"

    def retract(self, y):
        y = np.asarray(y, dtype=float)
        if self.contains(y, 0.0):
            return y
        return cs.project(y, self.C)

    def contains_ball(self, x, r, p):
        # the support of r * (unit l^p ball) in direction a is r * ||a||_q
        q = p / (p - 1.0)
        x = np.asarray(x, dtype=float)
        return all(a @ x + r * lp_norm(a, q) <= bb + 1e-12 for a, bb in zip(self.A, self.b))

    def as_set(self):
        return self.C

    def to_dict(self):
        return {"kind": self.kind, "set": self.C.to_dict(),
                "interior_nonempty": self.interior_nonempty}


class BallDomain:
    """Closed unit ball of l^p."""

    kind = "ball"
    interior_nonempty = True

    def __init__(self, space: SpaceSpec):
        self.space = space
        self.dim = space.dim

    def contains(self, y, tol=1e-9):
        return lp_norm(y, self.space.p) <= 1.0 + tol

    def is_interior(self, y, tol=1e-9):
        return lp_norm(y, self.space.p) < 1.0 - tol

    def normal_cone(self, y, atol=ACTIVITY_TOL):
        ny = lp_norm(y, self.space.p)
        if abs(ny - 1.0) <= atol:
            return PolyhedralSet(np.zeros((1, self.dim)), [lp_duality(y, self.space.p)])
        return PolyhedralSet.point(np.zeros(self.dim))

    def classify_direction(self, x, v, tol=1e-9):
        if lp_norm(x, self.space.p) < 1.0 - ACTIVITY_TOL:
            return "interior"
        g = lp_duality(x, self.space.p)
        v = np.asarray(v, dtype=float)
        s = g @ v / (np.linalg.norm(g) * np.linalg.norm(v))
        if s > tol:
            return "outside"
        if s < -tol:
            return "interior"
        return "boundary"

    def retract(self, y):
        y = np.asarray(y, dtype=float)
        ny = lp_norm(y, self.space.p)
        return y / ny if ny > 1.0 else y

    def contains_ball(self, x, r, p):
        return lp_norm(x, self.space.p) + r <= 1.0

    def as_set(self):
        raise TypeError("the l^p ball is not polyhedral")

    def to_dict(self):
        return {"kind": self.kind, "p": self.space.p, "interior_nonempty": True}


def _intersect_domains(domains, dim):
    rest = [d for d in domains if d.kind != "whole"]
    if not rest:
        return WholeSpace(dim)
    kinds = {d.kind for d in rest}
    if kinds == {"ball"}:
        return rest[0]
    if kinds == {"polyhedral"}:
        if len(rest) == 1:
            return rest[0]
        A = np.vstack([d.A for d in rest])
        b = np.concatenate([d.b for d in rest])
        C = PolyhedralSet.from_halfspaces(A, b)
        if C.is_empty:
            raise ValueError("summand domains do not intersect")
        return PolyhedralDomain(C)
    raise ValueError("sums mixing the l^p ball with polyhedral domains are not supported")


# ---------------------------------------------------------------------------
# operators


@dataclass(frozen=True)
class MaxAffineFunction:
    """f(y) = max_i <a_i, y> + b_i."""

    slopes: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        S = np.atleast_2d(np.asarray(self.slopes, dtype=float))
        b = np.atleast_1d(np.asarray(self.offsets, dtype=float))
        if S.shape[0] == 0 or S.shape[0] != b.shape[0]:
            raise ValueError("need at least one piece and one offset per slope")
        if not (np.all(np.isfinite(S)) and np.all(np.isfinite(b))):
            raise ValueError("coefficients must be finite")
        S.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "slopes", S)
        object.__setattr__(self, "offsets", b)

    @classmethod
    def from_pieces(cls, pieces):
        return cls([p[0] for p in pieces], [p[1] for p in pieces])

    @property
    def dim(self):
        return self.slopes.shape[1]

    def pieces_values(self, y):
        return self.slopes @ np.asarray(y, dtype=float) + self.offsets

    def __call__(self, y):
        return float(self.pieces_values(y).max())

    def active(self, y, atol=ACTIVITY_TOL):
        vals = self.pieces_values(y)
        return np.flatnonzero(vals >= vals.max() - atol)

    def to_dict(self):
        return {"pieces": [{"slope": a.tolist(), "offset": float(b)}
                           for a, b in zip(self.slopes, self.offsets)]}

    @classmethod
    def from_dict(cls, d):
        return cls([p["slope"] for p in d["pieces"]], [p["offset"] for p in d["pieces"]])


class Operator:
    """Base class: subclasses define ``value`` and ``domain``."""

    variant = "operator"

    def value(self, x, atol=ACTIVITY_TOL) -> PolyhedralSet:
        raise NotImplementedError

    @property
    def dim(self):
        return self.space.dim

    def contains(self, x, tol=1e-9):
        return self.domain.contains(x, tol)

    def _check(self, x):
        x = as_coords(self.space, x)
        if not self.domain.contains(x):
            raise DomainError(f"x = {x.tolist()} is outside D(A)")
        return x

    def to_dict(self):
        raise NotImplementedError


class SubdiffMaxAffine(Operator):
    """Subdifferential of a max-affine function: conv of the active slopes."""

    variant = "SubdiffMaxAffine"

    def __init__(self, f: MaxAffineFunction, space: SpaceSpec = None):
        self.f = f
        self.space = space or SpaceSpec(f.dim)
        if self.space.dim != f.dim:
            raise ValueError("function and space dimensions differ")
        self.domain = WholeSpace(f.dim)

    def value(self, x, atol=ACTIVITY_TOL):
        x = self._check(x)
        S = self.f.slopes[self.f.active(x, atol)]
        if len(S) == 1:
            return PolyhedralSet(S)
        return cs.reduce_generators(PolyhedralSet(S))

    def to_dict(self):
        return {"variant": self.variant, **self.f.to_dict()}


class NormalConeMap(Operator):
    """x -> N(x; C) for a polyhedron C; D(A) = C."""

    variant = "NormalConeMap"

    def __init__(self, C: PolyhedralSet, space: SpaceSpec = None):
        self.C = C
        self.space = space or SpaceSpec(C.dim)
        self.domain = PolyhedralDomain(C)

    def value(self, x, atol=ACTIVITY_TOL):
        x = self._check(x)
        return self.domain.normal_cone(x, atol)

    def to_dict(self):
        return {"variant": self.variant, "set": self.C.to_dict()}


class UnitBallNormalCone(Operator):
    """Normal cone of the closed unit l^p ball: R+ J(x) on the sphere, {0} inside."""

    variant = "UnitBallNormalCone"

    def __init__(self, space: SpaceSpec):
        self.space = space
        self.domain = BallDomain(space)

    def value(self, x, atol=ACTIVITY_TOL):
        x = self._check(x)
        return self.domain.normal_cone(x, atol)

    def to_dict(self):
        return {"variant": self.variant}


class AffineMonotone(Operator):
    """x -> {M x + c} with M + M^T positive semidefinite."""

    variant = "AffineMonotone"

    def __init__(self, M, c=None, space: SpaceSpec = None):
        M = np.atleast_2d(np.asarray(M, dtype=float))
        n = M.shape[0]
        if M.shape != (n, n) or not np.all(np.isfinite(M)):
            raise ValueError("M must be a finite square matrix")
        c = np.zeros(n) if c is None else np.atleast_1d(np.asarray(c, dtype=float))
        if c.shape != (n,):
            raise ValueError("c has the wrong length")
        if np.linalg.eigvalsh(M + M.T).min() < -1e-10:
            raise ValueError("M + M^T is not positive semidefinite; the map is not monotone")
        M.setflags(write=False)
        c.setflags(write=False)
        self.M, self.c = M, c
        self.space = space or SpaceSpec(n)
        self.domain = WholeSpace(n)

    @property
    def is_constant(self):
        return not np.any(self.M)

    def apply(self, x):
        return self.M @ x + self.c

    def value(self, x, atol=ACTIVITY_TOL):
        x = self._check(x)
        return PolyhedralSet.point(self.apply(x))

    def to_dict(self):
        return {"variant": self.variant, "M": self.M.tolist(), "c": self.c.tolist()}


class DualityMapOp(Operator):
    """x -> {J(x)}."""

    variant = "DualityMapOp"

    def __init__(self, space: SpaceSpec):
        self.space = space
        self.domain = WholeSpace(space.dim)

    def value(self, x, atol=ACTIVITY_TOL):
        x = self._check(x)
        return PolyhedralSet.point(lp_duality(x, self.space.p))

    def to_dict(self):
        return {"variant": self.variant}


def constant(c, space: SpaceSpec):
    """The constant operator x -> {c}."""
    return AffineMonotone(np.zeros((space.dim, space.dim)), c, space)


class Sum(Operator):
    """Pointwise Minkowski sum of operators on a common domain."""

    variant = "Sum"

    def __init__(self, terms, space: SpaceSpec = None):
        flat = []
        for t in terms:
            flat.extend(t.terms if isinstance(t, Sum) else [t])
        terms = flat
        if not terms:
            raise ValueError("Sum needs at least one term")
        self.space = space or terms[0].space
        for t in terms:
            if t.space != self.space:
                raise ValueError("all summands must live on the same space")
        self.terms = tuple(terms)
        self.domain = _intersect_domains([t.domain for t in terms], self.space.dim)
        self._qualification()

    def _qualification(self):
        """Sampled interior condition on the summand domains.

        All-polyhedral sums need none (polyhedral qualification); otherwise at
        least one sampled point of the common domain must be interior to every
        non-polyhedral summand domain.
        """
        doms = [t.domain for t in self.terms if t.domain.kind != "whole"]
        if len(doms) <= 1 or all(d.kind == "polyhedral" for d in doms):
            return
        pts = halton_ball(64, self.dim, 1.0, seed=7, p=self.space.p)
        ok = any(all(d.is_interior(y) for d in doms) for y in pts)
        if not ok:
            raise ValueError("domain qualification failed: no common interior point sampled")

    def value(self, x, atol=ACTIVITY_TOL):
        x = self._check(x)
        vals = [t.value(x, atol) for t in self.terms]
        out = vals[0]
        for v in vals[1:]:
            out = cs.minkowski_sum(out, v)
        return out

    def to_dict(self):
        return {"variant": self.variant, "terms": [t.to_dict() for t in self.terms]}


def domain_closure(A: Operator):
    """cl D(A) as a domain descriptor carrying an ``interior_nonempty`` flag."""
    return A.domain


# ---------------------------------------------------------------------------
# selections


@dataclass(frozen=True)
class SelectionPolicy:
    """How to pick one element of a value set.

    ``kind`` is one of min_norm, vertex_lexicographic, support_argmax (needs
    ``direction``) and seeded_random_vertex (uses ``seed``).
    """

    kind: str = "min_norm"
    direction: Optional[tuple] = None
    seed: int = 0

    KINDS = ("min_norm", "vertex_lexicographic", "support_argmax", "seeded_random_vertex")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown selection policy {self.kind!r}")
        if self.kind == "support_argmax":
            if self.direction is None or not np.any(self.direction):
                raise ValueError("support_argmax needs a nonzero direction")
            object.__setattr__(self, "direction", tuple(float(t) for t in self.direction))

    def select(self, S: PolyhedralSet, x, space: SpaceSpec):
        if self.kind == "min_norm":
            return cs.min_norm_point(S, q=space.q)
        if self.kind == "vertex_lexicographic":
            return S.vertices[0].copy()
        if self.kind == "support_argmax":
            F = cs.face_of(S, self.direction)
            # unbounded face: fall back to the lexicographic vertex of the value
            return (F if not F.is_empty else S).vertices[0].copy()
        key = zlib.crc32(np.ascontiguousarray(x, dtype=float).tobytes())
        rng = np.random.default_rng([self.seed, key])
        return S.vertices[rng.integers(len(S.vertices))].copy()

    def to_dict(self):
        d = {"kind": self.kind}
        if self.direction is not None:
            d["direction"] = list(self.direction)
        if self.kind == "seeded_random_vertex":
            d["seed"] = self.seed
        return d

    @classmethod
    def from_dict(cls, d):
        if isinstance(d, str):
            return cls(d)
        return cls(d.get("kind", "min_norm"), d.get("direction"), int(d.get("seed", 0)))


def selection(A: Operator, x, policy: SelectionPolicy = SelectionPolicy(), atol=ACTIVITY_TOL):
    x = as_coords(A.space, x)
    return policy.select(A.value(x, atol), x, A.space)


def min_norm_selection(A: Operator, x, atol=ACTIVITY_TOL):
    """A°(x), the least dual-norm element of Ax."""
    return cs.min_norm_point(A.value(x, atol), q=A.space.q)


# ---------------------------------------------------------------------------
# sampling and graph checks


def halton_ball(n, dim, radius=1.0, seed=0, p=2.0, center=None):
    """n scrambled-Halton points in the closed l^p ball of the given radius."""
    sampler = qmc.Halton(d=dim, scramble=True, seed=seed)
    pts = []
    while len(pts) < n:
        u = 2.0 * sampler.random(max(2 * n, 16)) - 1.0
        pts.extend(z for z in u if lp_norm(z, p) <= 1.0)
    out = radius * np.array(pts[:n])
    return out if center is None else out + np.asarray(center, dtype=float)


@dataclass
class MonotonicityReport:
    n_pairs: int
    min_value: float
    passed: bool

    def to_dict(self):
        return {"n_pairs": self.n_pairs, "min_value": self.min_value, "pass": self.passed}


def _domain_sample(A, n, seed, scale=2.0):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-scale, scale, size=(n, A.dim))
    return np.array([A.domain.retract(y) for y in pts])


def monotonicity_probe(A: Operator, n_pairs: int = 100, seed=0) -> MonotonicityReport:
    """Check <x* - y*, x - y> >= -1e-10 on random graph pairs."""
    pts = _domain_sample(A, 2 * n_pairs, seed)
    pol = SelectionPolicy("seeded_random_vertex", seed=seed)
    worst = np.inf
    for i in range(n_pairs):
        x, y = pts[2 * i], pts[2 * i + 1]
        xs, ys = selection(A, x, pol), selection(A, y, pol)
        worst = min(worst, float((xs - ys) @ (x - y)))
    return MonotonicityReport(n_pairs, worst, bool(worst >= -1e-10))


@dataclass
class GraphMembershipResult:
    """Monotone-neighbourhood test of (x, x*) against exact membership."""

    sampled: bool
    exact: bool
    n_feasible: int
    worst: float

    @property
    def agree(self):
        return self.sampled == self.exact

    def __bool__(self):
        return self.sampled and self.agree

    def to_dict(self):
        return {"sampled": self.sampled, "exact": self.exact, "agree": self.agree,
                "n_feasible": self.n_feasible, "worst": self.worst}


def _kink_projectors(A: Operator, x):
    """Affine sets through x on which the max-affine terms are multi-valued.

    Each entry (G, h) describes {z : G z = h}: a subset of the pieces active
    at x held equal. Subsets have at most dim pieces, so the sets range over
    every codimension below the space dimension.
    """
    terms = A.terms if isinstance(A, Sum) else (A,)
    out = []
    for t in terms:
        if not isinstance(t, SubdiffMaxAffine):
            continue
        act = t.f.active(x)
        for k in range(2, min(len(act), A.dim) + 1):
            for idx in itertools.combinations(act, k):
                a, b = t.f.slopes[list(idx)], t.f.offsets[list(idx)]
                out.append((a[1:] - a[0], b[0] - b[1:]))
    return out


def _neighbourhood(A: Operator, x, radius, n_samples, seed):
    """Low-discrepancy points of B(x; radius) carried into cl D(A).

    Besides each Halton point y the sample holds a copy shrunk towards x,
    the projections of y onto the breakpoint sets through x, and the
    retraction of anything outside the domain. Without these points a
    nonmember x* close to Ax is missed: the violating directions then form a
    thin cone around the boundary or a breakpoint set.
    """
    pts = []
    proj = [(G, h, np.linalg.pinv(G)) for G, h in _kink_projectors(A, x)]
    for y in halton_ball(n_samples, A.dim, radius, seed=seed, p=A.space.p, center=x):
        cand = [y, x + 1e-3 * (y - x)]
        cand += [y - P @ (G @ y - h) for G, h, P in proj]
        for z in cand:
            if not A.domain.contains(z, 0.0):
                z = A.domain.retract(z)
            if lp_norm(z - x, A.space.p) <= radius and A.domain.contains(z):
                pts.append(z)
    return pts


def graph_membership(A: Operator, x, xstar, radius: float = 0.1, n_samples: int = 64,
                     seed=0) -> GraphMembershipResult:
    """Decide x* in Ax from <x* - A°y, x - y> >= 0 on a neighbourhood sample."""
    x = A._check(x)
    xstar = as_coords(A.space, xstar, "xstar")
    if radius <= 0:
        raise ValueError("radius must be positive")
    worst = np.inf
    pts = _neighbourhood(A, x, radius, n_samples, seed)
    for y in pts:
        worst = min(worst, float((xstar - min_norm_selection(A, y)) @ (x - y)))
    sampled = bool(worst >= -1e-9)
    exact = cs.membership(xstar, A.value(x))
    return GraphMembershipResult(sampled, exact, len(pts), worst)


# ---------------------------------------------------------------------------
# serialization

_VARIANTS = ("SubdiffMaxAffine", "NormalConeMap", "UnitBallNormalCone",
             "AffineMonotone", "DualityMapOp", "Sum")


def operator_from_dict(d, space: SpaceSpec) -> Operator:
    v = d.get("variant")
    if v == "SubdiffMaxAffine":
        return SubdiffMaxAffine(MaxAffineFunction.from_dict(d), space)
    if v == "NormalConeMap":
        return NormalConeMap(PolyhedralSet.from_dict(d["set"]), space)
    if v == "UnitBallNormalCone":
        return UnitBallNormalCone(space)
    if v == "AffineMonotone":
        return AffineMonotone(d["M"], d.get("c"), space)
    if v == "DualityMapOp":
        return DualityMapOp(space)
    if v == "Sum":
        return Sum([operator_from_dict(t, space) for t in d["terms"]], space)
    raise ValueError(f"unknown operator variant {v!r}; expected one of {_VARIANTS}")


def operator_to_dict(A: Operator):
    return A.to_dict()
