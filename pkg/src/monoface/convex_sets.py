"""Exact polyhedral convex geometry.

Sets are stored as V-representations conv(vertices) + cone(rays), with an
optional H-representation {z : <a, z> <= b}. All conversions between the
two forms are brute-force enumerations, which is exact and fast at the
dimensions this package targets (1 to 4).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial import ConvexHull

from ._hullmin import minimize_over_hull
from .space import SpaceSpec, lp_norm

VERTEX_TOL = 1e-9
RAY_TOL = 1e-12


class EmptySetError(ValueError):
    pass


def _as_matrix(rows, dim=None):
    arr = np.asarray(rows, dtype=float)
    if arr.size == 0:
        if dim is None:
            raise ValueError("cannot infer dimension of an empty generator list")
        return np.zeros((0, dim))
    arr = np.atleast_2d(arr)
    if arr.ndim != 2 or (dim is not None and arr.shape[1] != dim):
        raise ValueError(f"generator array has shape {arr.shape}, expected (*, {dim})")
    if not np.all(np.isfinite(arr)):
        raise ValueError("generators must be finite")
    return arr


def _snap(X):
    # enumeration round-off: pull entries within 1e-13 of a 12-digit decimal onto it
    X = np.asarray(X, dtype=float)
    r = np.round(X, 12)
    return np.where(np.abs(X - r) < 1e-13, r, X) + 0.0


def _lexsort_rows(X):
    if len(X) == 0:
        return X
    order = np.lexsort(X.T[::-1])
    return X[order]


def _dedup(X, tol):
    kept = []
    for row in _lexsort_rows(X):
        if not any(np.linalg.norm(row - k) <= tol for k in kept):
            kept.append(row)
    return np.array(kept).reshape(-1, X.shape[1])


class PolyhedralSet:
    """Generalized polyhedron conv(vertices) + cone(rays).

    The generator lists are put into canonical form on construction: rays are
    scaled to unit Euclidean length, and both lists are deduplicated within
    1e-9 and sorted lexicographically. ``halfspaces`` is an optional pair
    ``(A, b)`` describing the same set as ``A z <= b``; it is checked for
    consistency against the generators.
    """

    def __init__(self, vertices, rays=(), halfspaces=None, dim=None, check=True):
        V = _as_matrix(vertices, dim)
        dim = V.shape[1] if dim is None else dim
        R = _as_matrix(rays, dim)
        if len(R):
            lens = np.linalg.norm(R, axis=1)
            R = R[lens > RAY_TOL] / lens[lens > RAY_TOL, None] + 0.0
        self.dim = int(dim)
        self.vertices = _dedup(V + 0.0, VERTEX_TOL)
        self.rays = _dedup(R, VERTEX_TOL) if len(self.vertices) else np.zeros((0, dim))
        self._halfspaces = None
        if halfspaces is not None:
            A, b = halfspaces
            A = _as_matrix(A, dim)
            b = np.asarray(b, dtype=float).reshape(-1)
            nrm = np.linalg.norm(A, axis=1)
            keep = nrm > 0
            self._halfspaces = (A[keep] / nrm[keep, None], b[keep] / nrm[keep])
            if check and len(self.vertices):
                self._check_consistency()
        self.vertices.setflags(write=False)
        self.rays.setflags(write=False)

    # construction helpers -------------------------------------------------
    @classmethod
    def empty(cls, dim):
        return cls(np.zeros((0, dim)), dim=dim)

    @classmethod
    def point(cls, z):
        z = np.atleast_1d(np.asarray(z, dtype=float))
        return cls([z])

    @classmethod
    def cone(cls, rays, dim=None):
        R = _as_matrix(rays, dim)
        return cls(np.zeros((1, R.shape[1])), R)

    @classmethod
    def box(cls, lo, hi):
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        n = lo.shape[0]
        verts = np.array(list(itertools.product(*zip(lo, hi))), dtype=float)
        A = np.vstack([np.eye(n), -np.eye(n)])
        b = np.concatenate([hi, -lo])
        return cls(verts, halfspaces=(A, b))

    @classmethod
    def interval(cls, lo, hi):
        return cls.box([lo], [hi])

    @classmethod
    def from_halfspaces(cls, A, b):
        """Polyhedron {z : A z <= b}; half-spaces that are never tight are dropped."""
        A = _as_matrix(A)
        b = np.asarray(b, dtype=float).reshape(-1)
        V, R = halfspaces_to_generators(A, b)
        if len(V) == 0:
            return cls.empty(A.shape[1])
        nrm = np.linalg.norm(A, axis=1)
        tight = np.abs((V @ A.T - b).max(axis=0)) <= 1e-9 * np.maximum(nrm, 1.0)
        return cls(V, R, halfspaces=(A[tight], b[tight]), dim=A.shape[1])

    # basic properties -----------------------------------------------------
    @property
    def is_empty(self):
        return len(self.vertices) == 0

    @property
    def is_bounded(self):
        return len(self.rays) == 0

    @property
    def halfspaces(self):
        """H-representation, computed from the generators when not supplied."""
        if self._halfspaces is None:
            if self.is_empty:
                raise EmptySetError("empty set has no H-representation")
            A, b = generators_to_halfspaces(self.vertices, self.rays)
            self._halfspaces = (A, b)
        return self._halfspaces

    @property
    def has_halfspaces(self):
        return self._halfspaces is not None

    def affine_dim(self):
        if self.is_empty:
            return -1
        D = np.vstack([self.vertices[1:] - self.vertices[0], self.rays])
        if len(D) == 0:
            return 0
        return int(np.linalg.matrix_rank(D, tol=1e-10))

    def _check_consistency(self):
        A, b = self._halfspaces
        if len(A) == 0:
            return
        viol = self.vertices @ A.T - b
        if viol.max() > 1e-9:
            raise ValueError("vertices violate the supplied half-spaces")
        if len(self.rays) and (self.rays @ A.T).max() > 1e-9:
            raise ValueError("rays violate the supplied half-spaces")
        # rays satisfy <a, r> <= 0, so the supremum over the set is attained at a vertex
        if np.any(viol.max(axis=0) < -1e-9):
            raise ValueError("a supplied half-space is not tight for the generators")

    def __repr__(self):
        return (f"PolyhedralSet(dim={self.dim}, vertices={self.vertices.tolist()}, "
                f"rays={self.rays.tolist()})")

    def __eq__(self, other):
        if not isinstance(other, PolyhedralSet) or other.dim != self.dim:
            return NotImplemented
        if self.is_empty or other.is_empty:
            return self.is_empty and other.is_empty
        return set_distance(self, other) <= 1e-9

    __hash__ = None

    # serialization --------------------------------------------------------
    def to_dict(self):
        d = {"dim": self.dim,
             "vertices": self.vertices.tolist(),
             "rays": self.rays.tolist()}
        if self._halfspaces is not None:
            A, b = self._halfspaces
            d["halfspaces"] = [{"a": (a + 0.0).tolist(), "b": float(bb) + 0.0}
                               for a, bb in zip(A, b)]
        return d

    @classmethod
    def from_dict(cls, d):
        dim = d.get("dim")
        hs = d.get("halfspaces")
        verts = d.get("vertices", [])
        if hs is not None:
            A = [h["a"] for h in hs]
            b = [h["b"] for h in hs]
            if not verts:
                return cls.from_halfspaces(A, b)
            return cls(verts, d.get("rays", []), halfspaces=(A, b), dim=dim)
        return cls(verts, d.get("rays", []), dim=dim)


@dataclass(frozen=True)
class SupportValue:
    """Value of a support function: finite, or +inf with a certifying ray."""

    kind: str
    value: float = float("nan")
    certificate: Optional[np.ndarray] = None

    @property
    def is_finite(self):
        return self.kind == "finite"

    def as_float(self):
        return self.value if self.is_finite else float("inf")

    def to_dict(self):
        d = {"kind": self.kind}
        if self.is_finite:
            d["value"] = self.value
        elif self.certificate is not None:
            d["certificate"] = np.asarray(self.certificate).tolist()
        return d


# ---------------------------------------------------------------------------
# H <-> V conversion by brute-force cone enumeration


def cone_generators(G, tol=1e-10):
    """Generators (unit rays) of the cone {x : G x <= 0}."""
    G = np.asarray(G, dtype=float)
    N = G.shape[1]
    if G.shape[0] == 0:
        basis = np.eye(N)
        return np.vstack([basis, -basis])
    G = G / np.maximum(np.linalg.norm(G, axis=1), 1e-300)[:, None]
    _, S, Vt = np.linalg.svd(G)
    r = int(np.sum(S > 1e-10))
    lineal = Vt[r:]
    P = Vt[:r]
    Gp = G @ P.T
    cands = []
    if r == 1:
        cands = [np.array([1.0]), np.array([-1.0])]
    elif r > 1:
        for rows in itertools.combinations(range(G.shape[0]), r - 1):
            sub = Gp[list(rows)]
            _, s, vt = np.linalg.svd(sub)
            if np.sum(s > 1e-10) != r - 1:
                continue
            c = vt[-1]
            cands.extend([c, -c])
    rays = []
    for c in cands:
        if np.all(Gp @ c <= tol):
            ray = c @ P
            ray = ray / np.linalg.norm(ray)
            if not any(np.linalg.norm(ray - k) <= 1e-9 for k in rays):
                rays.append(ray)
    for l in lineal:
        rays.extend([l, -l])
    return _snap(np.array(rays).reshape(-1, N))


def halfspaces_to_generators(A, b):
    """V-representation (vertices, rays) of {z : A z <= b}."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).reshape(-1)
    N = A.shape[1]
    G = np.vstack([np.hstack([A, -b[:, None]]),
                   np.hstack([np.zeros((1, N)), [[-1.0]]])])
    gens = cone_generators(G)
    verts, rays = [], []
    for g in gens:
        s = g[-1]
        if s > 1e-10:
            verts.append(g[:-1] / s)
        elif abs(s) <= 1e-10 and np.linalg.norm(g[:-1]) > 1e-10:
            rays.append(g[:-1])
    V = np.array(verts).reshape(-1, N)
    R = np.array(rays).reshape(-1, N)
    if len(V):
        # clean round-off on tight constraints
        V = V[np.all(V @ A.T - b <= 1e-8, axis=1)]
    return _snap(V), _snap(R)


def generators_to_halfspaces(V, R):
    """Irredundant H-representation (A, b) of conv(V) + cone(R)."""
    V = np.asarray(V, dtype=float)
    N = V.shape[1]
    R = np.asarray(R, dtype=float).reshape(-1, N)
    G = np.vstack([np.hstack([V, -np.ones((len(V), 1))]),
                   np.hstack([R, np.zeros((len(R), 1))])])
    gens = cone_generators(G)
    A, b = [], []
    for g in gens:
        a, beta = g[:-1], g[-1]
        na = np.linalg.norm(a)
        if na <= 1e-10:
            continue
        A.append(a / na)
        b.append(beta / na)
    return _snap(np.array(A).reshape(-1, N)), _snap(np.array(b))


# ---------------------------------------------------------------------------
# operations


def _direction(d, dim):
    d = np.atleast_1d(np.asarray(d, dtype=float))
    if d.shape != (dim,):
        raise ValueError(f"direction must have length {dim}")
    if not np.any(d):
        raise ValueError("direction must be nonzero")
    return d


def _nonempty(*sets):
    for s in sets:
        if s.is_empty:
            raise EmptySetError("operation undefined on the empty set")


def support_function(S: PolyhedralSet, d) -> SupportValue:
    """sigma_S(d) = sup{<d, s> : s in S}."""
    _nonempty(S)
    d = _direction(d, S.dim)
    if len(S.rays):
        dots = S.rays @ d
        j = int(np.argmax(dots))
        if dots[j] > RAY_TOL:
            return SupportValue("plus_infinity", certificate=S.rays[j].copy())
    vals = S.vertices @ d
    j = int(np.argmax(vals))
    return SupportValue("finite", float(vals[j]), S.vertices[j].copy())


def face_of(S: PolyhedralSet, d) -> PolyhedralSet:
    """Maximizers of <d, .> over S; empty when the supremum is infinite."""
    sv = support_function(S, d)
    d = np.asarray(d, dtype=float).reshape(-1)
    if not sv.is_finite:
        return PolyhedralSet.empty(S.dim)
    vals = S.vertices @ d
    top = vals.max()
    V = S.vertices[vals >= top - VERTEX_TOL]
    R = S.rays[np.abs(S.rays @ d) <= RAY_TOL] if len(S.rays) else S.rays
    return PolyhedralSet(V, R, dim=S.dim)


def min_norm_point(S: PolyhedralSet, space: SpaceSpec = None, q: float = None) -> np.ndarray:
    """Unique element of S with least dual (l^q) norm."""
    _nonempty(S)
    if q is None:
        q = 2.0 if space is None else space.q
    if len(S.vertices) == 1 and not len(S.rays):
        return S.vertices[0].copy()
    return minimize_over_hull(S.vertices, S.rays, q).z


def euclidean_distance(z, S: PolyhedralSet) -> float:
    _nonempty(S)
    z = np.asarray(z, dtype=float)
    res = minimize_over_hull(S.vertices - z, S.rays, 2.0)
    return float(np.linalg.norm(res.z))


def project(z, S: PolyhedralSet) -> np.ndarray:
    """Euclidean projection onto S."""
    z = np.asarray(z, dtype=float)
    return z + minimize_over_hull(S.vertices - z, S.rays, 2.0).z


def membership(z, S: PolyhedralSet, tol: float = 1e-9) -> bool:
    if S.is_empty:
        return False
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if S.has_halfspaces:
        A, b = S.halfspaces
        if len(A) == 0 or np.all(A @ z - b <= 0.0):
            return True
    return euclidean_distance(z, S) <= tol


def active_normals(x, S, atol=1e-9):
    A, b = S.halfspaces
    return A[np.abs(A @ x - b) <= atol]


def normal_cone(x, S: PolyhedralSet, atol: float = 1e-9) -> PolyhedralSet:
    """N(x; S), generated by the outward normals of constraints active at x."""
    _nonempty(S)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not membership(x, S):
        raise ValueError("normal cone requested at a point outside the set")
    act = active_normals(x, S, atol)
    if len(act) == 0:
        return PolyhedralSet.point(np.zeros(S.dim))
    return PolyhedralSet(np.zeros((1, S.dim)), act, halfspaces=_polar_halfspaces(act, S.dim),
                         check=False)


def _polar_halfspaces(rays, dim):
    """H-rep of the polar of cone(rays) is simply <r, v> <= 0."""
    return (np.asarray(rays, dtype=float).reshape(-1, dim), np.zeros(len(rays)))


def polar_cone(K: PolyhedralSet) -> PolyhedralSet:
    """Polar {y : <y, k> <= 0 for all k in K} of a cone given by its rays."""
    A = K.rays if len(K.rays) else np.zeros((0, K.dim))
    R = cone_generators(A)
    return PolyhedralSet(np.zeros((1, K.dim)), R, halfspaces=(A, np.zeros(len(A))), check=False)


def tangent_cone(x, S: PolyhedralSet, atol: float = 1e-9) -> PolyhedralSet:
    """T(x; S), the polar of the normal cone at x."""
    return polar_cone(normal_cone(x, S, atol))


def reduce_generators(S: PolyhedralSet) -> PolyhedralSet:
    """Drop vertices and rays that are generated by the others."""
    if S.is_empty:
        return S
    V, R = S.vertices, S.rays
    origin = np.zeros((1, S.dim))
    keep_r = []
    for j in range(len(R)):
        others = np.delete(R, j, axis=0)
        if len(others):
            gap = np.linalg.norm(minimize_over_hull(origin - R[j], others, 2.0).z)
            if gap <= 1e-10:
                continue
        keep_r.append(j)
    R = R[keep_r]
    if len(V) > 1:
        V = _extreme_points(V, R)
    return PolyhedralSet(V, R, halfspaces=S._halfspaces, dim=S.dim, check=False)


def _extreme_points(V, R):
    n = V.shape[1]
    if len(R) == 0 and n == 1:
        return np.array([V.min(axis=0), V.max(axis=0)])
    if len(R) == 0 and len(V) > n + 1:
        try:
            return V[np.sort(ConvexHull(V).vertices)]
        except Exception:
            pass  # flat point cloud, qhull refuses it; enumerate instead
    keep = []
    for i in range(len(V)):
        others = np.delete(V, i, axis=0)
        gap = np.linalg.norm(minimize_over_hull(others - V[i], R, 2.0).z)
        if gap > 1e-10:
            keep.append(i)
    return V[keep]


def minkowski_sum(a: PolyhedralSet, b: PolyhedralSet) -> PolyhedralSet:
    _nonempty(a, b)
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    V = (a.vertices[:, None, :] + b.vertices[None, :, :]).reshape(-1, a.dim)
    R = np.vstack([a.rays, b.rays])
    return reduce_generators(PolyhedralSet(V, R, dim=a.dim))


def convex_hull(points) -> PolyhedralSet:
    P = np.asarray(points, dtype=float)
    if P.size == 0:
        raise EmptySetError("convex hull of an empty list")
    return reduce_generators(PolyhedralSet(np.atleast_2d(P)))


def truncated_vertices(S: PolyhedralSet, radius: float) -> np.ndarray:
    """Vertices of conv(V + {0} U radius * rays), a bounded subset of S."""
    if not len(S.rays):
        return S.vertices
    ext = (S.vertices[:, None, :] + radius * S.rays[None, :, :]).reshape(-1, S.dim)
    return np.vstack([S.vertices, ext])


def _ray_angle(r, K_rays, dim):
    if not len(K_rays):
        return np.pi
    proj = minimize_over_hull(np.zeros((1, dim)) - r, K_rays, 2.0).z + r
    pn = np.linalg.norm(proj)
    if pn > 1e-12:
        # arctan2 stays accurate for nearly parallel rays where arccos does not
        return float(np.arctan2(np.linalg.norm(r - proj), pn))
    return float(np.arccos(np.clip(np.max(K_rays @ r), -1.0, 1.0)))


def set_distance_components(a: PolyhedralSet, b: PolyhedralSet, radius: float = 10.0):
    """(hausdorff, angular) discrepancy between two polyhedra.

    For bounded sets the first entry is the exact Euclidean Hausdorff
    distance. With rays, each set is truncated to conv(V + radius * rays) and
    measured against the other (untruncated) set, and the second entry is the
    largest angle between a ray of one set and the recession cone of the
    other.
    """
    _nonempty(a, b)
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    h = 0.0
    for P, Q in ((a, b), (b, a)):
        for v in truncated_vertices(P, radius):
            h = max(h, euclidean_distance(v, Q))
    ang = 0.0
    for P, Q in ((a, b), (b, a)):
        for r in P.rays:
            ang = max(ang, _ray_angle(r, Q.rays, a.dim))
    return h, ang


def set_distance(a: PolyhedralSet, b: PolyhedralSet, radius: float = 10.0) -> float:
    h, ang = set_distance_components(a, b, radius)
    return max(h, ang)


def q_ball_membership(z, center_set: PolyhedralSet, rho: float, q: float, tol: float = 1e-8) -> bool:
    """Whether z lies in center_set + rho * (closed unit l^q ball)."""
    z = np.asarray(z, dtype=float)
    d = lp_norm(minimize_over_hull(center_set.vertices - z, center_set.rays, q).z, q)
    return d <= rho + tol
