"""Resolvents and Yosida approximations.

The resolvent of A at x with parameter lam is the unique x_lam with
0 in J(x_lam - x) + lam A(x_lam); the Yosida value is lam^-1 J(x - x_lam),
an element of A(x_lam).

All solvers work with the Yosida value eta directly and set
x_lam = x - lam J^-1(eta). Recovering eta from x - x_lam instead would lose
every significant digit once lam is below about 1e-8.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import convex_sets as cs
from ._hullmin import HullMinError, minimize_over_hull
from .operators import (AffineMonotone, DomainError, DualityMapOp, NormalConeMap,
                        Operator, SubdiffMaxAffine, Sum, UnitBallNormalCone,
                        min_norm_selection)
from .jsonio import fmt_float
from .space import as_coords, lp_duality, lp_duality_jacobian, lp_norm

RESIDUAL_TOL = 1e-10
MAX_NEWTON = 200


class ResolventError(RuntimeError):
    """Solver failure; ``iterate`` holds the best point found."""

    def __init__(self, msg, iterate=None):
        super().__init__(msg)
        self.iterate = iterate


@dataclass
class YosidaIterate:
    lam: float
    x_lambda: np.ndarray
    yosida_value: np.ndarray
    residual: float
    converged: bool = True
    steps: int = 0
    support: tuple = field(default=None, repr=False)

    def recompute(self, x, p):
        """lam^-1 J(x - x_lam) from the primal data (loses accuracy for tiny lam)."""
        return lp_duality(np.asarray(x, dtype=float) - self.x_lambda, p) / self.lam

    def to_dict(self):
        return {"lambda": self.lam, "x_lambda": self.x_lambda.tolist(),
                "yosida_value": self.yosida_value.tolist(), "residual": self.residual,
                "converged": self.converged}


@dataclass(frozen=True)
class Schedule:
    """Geometric parameter sequence lambda0 * ratio**n, n = 0..steps-1."""

    lambda0: float = 0.1
    ratio: float = 0.5
    steps: int = 30

    def __post_init__(self):
        if not self.lambda0 > 0:
            raise ValueError("lambda0 must be positive")
        if not 0.0 < self.ratio < 1.0:
            raise ValueError("ratio must lie in (0, 1)")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError("steps must be a positive integer")
        if self.lambda0 * self.ratio ** (self.steps - 1) < 1e-300:
            raise ValueError("schedule underflows the floating-point range")

    def values(self):
        return self.lambda0 * self.ratio ** np.arange(self.steps)

    def to_dict(self):
        return {"lambda0": self.lambda0, "ratio": self.ratio, "steps": self.steps}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d.get("lambda0", 0.1)), float(d.get("ratio", 0.5)),
                   int(d.get("steps", 30)))


# ---------------------------------------------------------------------------
# operator normal forms


def _terms(A):
    return list(A.terms) if isinstance(A, Sum) else [A]


def _polyhedral_form(A):
    """(slopes, offsets, G, h, c) with A = d(max-affine) + N({G y <= h}) + c, or None."""
    n = A.dim
    slopes, offsets = np.zeros((1, n)), np.zeros(1)
    G, h = np.zeros((0, n)), np.zeros(0)
    c = np.zeros(n)
    for t in _terms(A):
        if isinstance(t, SubdiffMaxAffine):
            S, b = t.f.slopes, t.f.offsets
            slopes = (slopes[:, None, :] + S[None, :, :]).reshape(-1, n)
            offsets = (offsets[:, None] + b[None, :]).reshape(-1)
        elif isinstance(t, NormalConeMap):
            G = np.vstack([G, t.domain.A])
            h = np.concatenate([h, t.domain.b])
        elif isinstance(t, AffineMonotone) and t.is_constant:
            c = c + t.c
        else:
            return None
    return slopes, offsets, G, h, c


def _smooth_form(A):
    """(M, c, kappa) with A y = M y + c + kappa J(y), or None."""
    n = A.dim
    M, c, kappa = np.zeros((n, n)), np.zeros(n), 0
    for t in _terms(A):
        if isinstance(t, AffineMonotone):
            M, c = M + t.M, c + t.c
        elif isinstance(t, DualityMapOp):
            kappa += 1
        else:
            return None
    return M, c, kappa


def _ball_form(A):
    """Constant shift k with A = N(unit ball) + k, or None."""
    k = np.zeros(A.dim)
    balls = 0
    for t in _terms(A):
        if isinstance(t, UnitBallNormalCone):
            balls += 1
        elif isinstance(t, AffineMonotone) and t.is_constant:
            k = k + t.c
        else:
            return None
    return k if balls >= 1 else None


# ---------------------------------------------------------------------------
# solvers


def _residual(A, y, eta, lam):
    try:
        val = A.value(y)
    except DomainError:
        return np.inf
    return lam * cs.euclidean_distance(eta, val)


def _solve_polyhedral(A, form, x, lam, start=None, hint=None):
    slopes, offsets, G, h, c = form
    n, q = A.dim, A.space.q
    fv = slopes @ x + offsets
    beta = (fv - fv.max()) / lam
    V = np.hstack([slopes + c, -beta[:, None]])
    R = np.hstack([G, ((h - G @ x) / lam)[:, None]]) if len(G) else np.zeros((0, n + 1))
    if hint is None and start is not None:
        # warm start: the pieces and constraints active at the guess
        fs = slopes @ start + offsets
        hv = tuple(np.flatnonzero(fs >= fs.max() - 1e-9)[: n + 1])
        hr = tuple(np.flatnonzero(np.abs(G @ start - h) <= 1e-9)) if len(G) else ()
        hint = (hv, hr)
    lin = np.zeros(n + 1)
    lin[n] = 1.0
    res = minimize_over_hull(V, R, q, n=n, lin=lin, hint=hint)
    eta = res.z[:n]
    return eta, res.newton_steps, (res.vertex_support, res.ray_support)


def _newton_system(F, J, u0, scale):
    u = u0.copy()
    r = F(u)
    for k in range(1, MAX_NEWTON + 1):
        nr = np.linalg.norm(r)
        if nr <= 1e-15 * scale:
            return u, k
        try:
            step = -np.linalg.solve(J(u), r)
        except np.linalg.LinAlgError:
            step = -np.linalg.lstsq(J(u), r, rcond=None)[0]
        t = 1.0
        for _ in range(50):
            un = u + t * step
            rn = F(un)
            if np.linalg.norm(rn) < (1.0 - 1e-4 * t) * nr:
                break
            t *= 0.5
        else:
            return u, k
        u, r = un, rn
    return u, MAX_NEWTON


def _solve_smooth(A, form, x, lam, start=None):
    M, c, kappa = form
    p, q = A.space.p, A.space.q
    n = A.dim
    eye = np.eye(n)

    def T(y):
        out = M @ y + c
        return out + kappa * lp_duality(y, p) if kappa else out

    def DT(y):
        return M + kappa * lp_duality_jacobian(y, p) if kappa else M

    if kappa == 0 and p == 2.0:
        y = np.linalg.solve(eye + lam * M, x - lam * c)
        return M @ y + c, 0
    if kappa and not np.any(M) and not np.any(c):
        # J(y - x) + lam * kappa * J(y) = 0 is solved by y = x / (1 + lam kappa)
        return kappa * lp_duality(x, p) / (1.0 + lam * kappa), 0
    eta0 = T(x if start is None else start)
    scale = 1.0 + np.linalg.norm(eta0)
    if p >= 2.0:
        # unknown d with x_lam = x + lam d; D J_p is bounded for p >= 2
        F = lambda d: lp_duality(d, p) + T(x + lam * d)
        J = lambda d: lp_duality_jacobian(d, p) + lam * DT(x + lam * d)
        d, k = _newton_system(F, J, -lp_duality(eta0, q), scale)
        return -lp_duality(d, p), k
    # unknown eta; D J_q is bounded since q > 2

    def F(eta):
        return eta - T(x - lam * lp_duality(eta, q))

    def J(eta):
        return eye + lam * DT(x - lam * lp_duality(eta, q)) @ lp_duality_jacobian(eta, q)

    eta, k = _newton_system(F, J, eta0, scale)
    return eta, k


def _solve_ball(A, k, x, lam):
    p = A.space.p
    if not np.any(k):
        nx = lp_norm(x, p)
        if nx <= 1.0:
            return np.zeros_like(x), x.copy()
        # metric projection onto the l^p ball is radial
        return (nx - 1.0) / lam * lp_duality(x, p) / nx, x / nx
    if p == 2.0:
        z = x - lam * k
        nz = np.linalg.norm(z)
        if nz <= 1.0:
            return k.copy(), z
        return k + (nz - 1.0) / (lam * nz) * z, z / nz
    # no closed form: constrained smooth minimization, checked through the residual
    obj = lambda y: 0.5 * lp_norm(y - x, p) ** 2 + lam * (k @ y)
    jac = lambda y: lp_duality(y - x, p) + lam * k
    cons = {"type": "ineq", "fun": lambda y: 1.0 - lp_norm(y, p) ** p,
            "jac": lambda y: -p * np.abs(y) ** (p - 1.0) * np.sign(y)}
    y0 = x / max(1.0, lp_norm(x, p))
    res = minimize(obj, y0, jac=jac, constraints=[cons], method="SLSQP",
                   options={"ftol": 1e-15, "maxiter": 500})
    y = res.x / max(1.0, lp_norm(res.x, p))
    return lp_duality(x - y, p) / lam, y


def resolvent(A: Operator, x, lam: float, tol: float = RESIDUAL_TOL, start=None,
              hint=None) -> YosidaIterate:
    """Solve 0 in J(x_lam - x) + lam A(x_lam).

    ``start`` is an optional initial guess for x_lam (used to seed the
    active-set enumeration or the Newton iteration).
    """
    x = as_coords(A.space, x)
    if not lam > 0 or not np.isfinite(lam):
        raise ValueError("lambda must be positive and finite")
    q = A.space.q
    steps, support, y = 0, None, None
    poly = _polyhedral_form(A)
    try:
        if poly is not None:
            eta, steps, support = _solve_polyhedral(A, poly, x, lam, start, hint)
        elif (smooth := _smooth_form(A)) is not None:
            eta, steps = _solve_smooth(A, smooth, x, lam, start)
        elif (k := _ball_form(A)) is not None:
            eta, y = _solve_ball(A, k, x, lam)
        else:
            raise ResolventError(f"no resolvent solver for operator {A.to_dict()['variant']}")
    except HullMinError as e:
        raise ResolventError(str(e)) from e
    if y is None:
        y = x - lam * lp_duality(eta, q)
    it = YosidaIterate(float(lam), y, eta, 0.0, True, steps, support)
    it.residual = float(_residual(A, y, eta, lam))
    if not it.residual <= tol:
        it.converged = False
        raise ResolventError(f"resolvent residual {it.residual:.3e} exceeds {tol:.1e}", it)
    return it


def resolvent_map(A: Operator, x, lam: float):
    """x -> x_lam."""
    return resolvent(A, x, lam).x_lambda


def yosida_approximation(A: Operator, x, lam: float):
    """A_lam(x) = lam^-1 J(x - x_lam)."""
    return resolvent(A, x, lam).yosida_value


# ---------------------------------------------------------------------------
# trajectories


@dataclass
class YosidaTrajectory:
    x: np.ndarray
    iterates: list
    in_domain: bool
    exact: np.ndarray = None
    errors: list = field(default_factory=list)
    failed: list = field(default_factory=list)

    @property
    def final_error(self):
        return self.errors[-1] if self.errors else float("nan")

    def csv_rows(self):
        n = len(self.x)
        header = (["lambda"] + [f"x_lambda_{i}" for i in range(n)]
                  + [f"yosida_{i}" for i in range(n)]
                  + ["residual", "error_vs_exact", "outside_domain", "failed"])
        rows = [header]
        for k, it in enumerate(self.iterates):
            err = self.errors[k] if self.errors else float("nan")
            rows.append([it.lam, *it.x_lambda, *it.yosida_value, it.residual, err,
                         int(not self.in_domain), int(self.failed[k])])
        return rows

    def to_csv(self, fmt=fmt_float):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for i, row in enumerate(self.csv_rows()):
            w.writerow(row if i == 0 else [fmt(float(v)) for v in row])
        return buf.getvalue()


def yosida_trajectory(A: Operator, x, schedule: Schedule = Schedule()) -> YosidaTrajectory:
    """Resolvent iterates for every lambda of the schedule.

    Failed steps keep their best iterate and are marked in ``failed``.
    Errors against A°x are filled in when x is in the domain.
    """
    x = as_coords(A.space, x)
    inside = A.domain.contains(x)
    exact = min_norm_selection(A, x) if inside else None
    iterates, failed = [], []
    hint = None
    for lam in schedule.values():
        try:
            it = resolvent(A, x, lam, hint=hint)
            failed.append(False)
        except ResolventError as e:
            it = e.iterate
            if it is None:
                nanv = np.full(A.dim, np.nan)
                it = YosidaIterate(float(lam), nanv, nanv, float("inf"), False)
            failed.append(True)
        hint = it.support
        iterates.append(it)
    errors = []
    if exact is not None:
        errors = [lp_norm(it.yosida_value - exact, A.space.q) for it in iterates]
    return YosidaTrajectory(x, iterates, inside, exact, errors, failed)


@dataclass
class MinNormConvergence:
    value: np.ndarray
    exact: np.ndarray
    errors: list
    final_error: float
    tolerance: float
    passed: bool

    def to_dict(self):
        return {"value": self.value.tolist(), "exact": self.exact.tolist(),
                "final_error": self.final_error, "tolerance": self.tolerance,
                "pass": self.passed}


def min_norm_via_yosida(A: Operator, x, schedule: Schedule = Schedule(), tol: float = 1e-5):
    """Approximate A°x by the Yosida value at the last lambda of the schedule."""
    x = as_coords(A.space, x)
    if not A.domain.contains(x):
        raise DomainError("min_norm_via_yosida requires x in D(A)")
    traj = yosida_trajectory(A, x, schedule)
    if any(traj.failed):
        raise ResolventError("resolvent failed along the schedule")
    val = traj.iterates[-1].yosida_value
    fe = float(traj.final_error)
    return val, MinNormConvergence(val, traj.exact, traj.errors, fe, tol, bool(fe <= tol))
