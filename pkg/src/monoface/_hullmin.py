"""Exact minimization of 1/2 ||z_head||_q^2 + <lin, z> over conv(V) + cone(R).

The minimizer lies in the relative interior of some face, hence minimizes
the objective over the affine hull of an affinely independent subset of
generators. Subsets are enumerated smallest first; each affine subproblem
is solved by Newton's method, in primal form when q >= 2 and in the
(smooth) dual form when q < 2, and the first feasible candidate passing the
global first-order test is returned.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .space import conjugate_exponent, lp_duality, lp_duality_jacobian, lp_norm

MAX_NEWTON = 200


class HullMinError(RuntimeError):
    pass


@dataclass
class HullMinResult:
    z: np.ndarray
    vertex_support: tuple
    ray_support: tuple
    certified: bool
    newton_steps: int


def _orth_split(M, tol=1e-11):
    U, S, Vt = np.linalg.svd(M, full_matrices=True)
    scale = S[0] if S.size and S[0] > 0 else 1.0
    rank = int(np.sum(S > tol * max(scale, 1.0)))
    return U, S, Vt, rank


def _newton(grad_hess, x0, merit, maximize=False):
    """Damped Newton on a smooth convex (or concave) function of few variables."""
    x = x0.copy()
    steps = 0
    for steps in range(1, MAX_NEWTON + 1):
        g, H = grad_hess(x)
        gn = np.linalg.norm(g)
        if not np.isfinite(gn):
            raise HullMinError("non-finite gradient")
        if gn <= 1e-15 * (1.0 + np.linalg.norm(x)):
            break
        sign = -1.0 if maximize else 1.0
        Hs = sign * H
        ridge = 1e-14 * max(1.0, np.trace(Hs) / max(len(x), 1))
        try:
            step = -np.linalg.solve(Hs + ridge * np.eye(len(x)), sign * g)
        except np.linalg.LinAlgError:
            step = -np.linalg.lstsq(Hs, sign * g, rcond=None)[0]
        f0 = sign * merit(x)
        t = 1.0
        accepted = False
        for _ in range(40):
            xn = x + t * step
            fn = sign * merit(xn)
            if fn <= f0 + 1e-4 * t * sign * float(g @ step) or \
                    np.linalg.norm(grad_hess(xn)[0]) < gn:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        x = xn
        if np.linalg.norm(t * step) <= 1e-16 * (1.0 + np.linalg.norm(x)):
            break
    return x, steps


def affine_argmin(z0, B, q, n, lin):
    """Minimize 1/2 ||(z0 + B c)[:n]||_q^2 + <lin, z0 + B c> over c.

    Returns ``(z, steps)`` or ``None`` when the objective is unbounded below
    on the affine set.
    """
    k = B.shape[1]
    if k == 0:
        return z0.copy(), 0
    M = B[:n]
    a = z0[:n]
    b = B.T @ lin
    U, S, Vt, rank = _orth_split(M)
    null_c = Vt[rank:].T
    if null_c.shape[1] and np.linalg.norm(null_c.T @ b) > 1e-10 * (1.0 + np.linalg.norm(b)):
        return None
    Rc = Vt[:rank].T                      # c = Rc t
    Mr = M @ Rc
    br = Rc.T @ b
    if rank == 0:
        return z0.copy(), 0
    # Euclidean solution: exact for q == 2 and the starting point otherwise
    t0 = -np.linalg.solve(Mr.T @ Mr, Mr.T @ a + br)
    if q == 2.0:
        return z0 + B @ (Rc @ t0), 0
    if q > 2.0:
        def gh(t):
            eta = a + Mr @ t
            return Mr.T @ lp_duality(eta, q) + br, Mr.T @ lp_duality_jacobian(eta, q) @ Mr

        def merit(t):
            return 0.5 * lp_norm(a + Mr @ t, q) ** 2 + float(br @ t)

        t, steps = _newton(gh, t0, merit)
        return z0 + B @ (Rc @ t), steps
    # q < 2: maximize <y, a> - 1/2 ||y||_p^2 subject to M^T y = -b
    p = conjugate_exponent(q)
    y0 = np.linalg.lstsq(M.T, -b, rcond=None)[0]
    Ny = U[:, rank:]
    if Ny.shape[1] == 0:
        y = y0
        steps = 0
    else:
        s0 = Ny.T @ (a - y0)
        if np.linalg.norm(y0 + Ny @ s0) == 0.0:
            # 0 lies on the affine set
            eta = np.zeros_like(a)
            c = np.linalg.lstsq(Mr, eta - a, rcond=None)[0]
            return z0 + B @ (Rc @ c), 0

        def gh(s):
            y = y0 + Ny @ s
            return Ny.T @ (a - lp_duality(y, p)), -Ny.T @ lp_duality_jacobian(y, p) @ Ny

        def merit(s):
            y = y0 + Ny @ s
            return float(y @ a) - 0.5 * lp_norm(y, p) ** 2

        s, steps = _newton(gh, s0, merit, maximize=True)
        y = y0 + Ny @ s
    eta = lp_duality(y, p)
    t = np.linalg.lstsq(Mr, eta - a, rcond=None)[0]
    return z0 + B @ (Rc @ t), steps


def _objective(z, q, n, lin):
    return 0.5 * lp_norm(z[:n], q) ** 2 + float(lin @ z)


def _gradient(z, q, n, lin):
    g = lin.copy()
    g[:n] += lp_duality(z[:n], q)
    return g


def _subsets(m, k, dim, hint):
    seen = set()
    if hint is not None:
        hv, hr = tuple(sorted(hint[0])), tuple(sorted(hint[1]))
        if hv and all(i < m for i in hv) and all(j < k for j in hr):
            seen.add((hv, hr))
            yield hv, hr
    for size in range(1, dim + 2):
        for nv in range(1, size + 1):
            nr = size - nv
            if nv > m or nr > k:
                continue
            for vs in itertools.combinations(range(m), nv):
                for rs in itertools.combinations(range(k), nr):
                    if (vs, rs) in seen:
                        continue
                    yield vs, rs


def minimize_over_hull(V, R, q, n=None, lin=None, hint=None, tol=1e-10):
    """Minimize 1/2 ||z[:n]||_q^2 + <lin, z> over conv(V) + cone(R).

    ``n`` defaults to the full dimension and ``lin`` to zero, which gives the
    q-norm minimal point of the set.
    """
    V = np.atleast_2d(np.asarray(V, dtype=float))
    m, N = V.shape
    if m == 0:
        raise HullMinError("empty generator set")
    R = np.asarray(R, dtype=float).reshape(-1, N)
    k = R.shape[0]
    n = N if n is None else n
    lin = np.zeros(N) if lin is None else np.asarray(lin, dtype=float)
    scale = 1.0 + np.abs(V).max()

    best = None
    total_steps = 0
    for vs, rs in _subsets(m, k, N, hint):
        v0 = V[vs[0]]
        cols = [V[i] - v0 for i in vs[1:]] + [R[j] for j in rs]
        B = np.array(cols).T if cols else np.zeros((N, 0))
        if B.shape[1]:
            sv = np.linalg.svd(B, compute_uv=False)
            if sv[-1] <= 1e-10 * max(sv[0], 1.0):
                continue
        sol = affine_argmin(v0, B, q, n, lin)
        if sol is None:
            continue
        z, steps = sol
        total_steps += steps
        if B.shape[1]:
            c = np.linalg.lstsq(B, z - v0, rcond=None)[0]
            nv = len(vs) - 1
            wv = np.concatenate([[1.0 - c[:nv].sum()], c[:nv]])
            wr = c[nv:]
            if wv.min(initial=0.0) < -tol or wr.min(initial=0.0) < -tol * scale:
                continue
        g = _gradient(z, q, n, lin)
        gn = np.linalg.norm(g)
        slack_v = (V - z) @ g
        slack_r = R @ g if k else np.zeros(0)
        # relative to |g| |V - z| so tiny sets are not certified by the floor alone
        thr = 1e-9 * gn * np.linalg.norm(V - z, axis=1) + 1e-15 * (1.0 + gn) * scale
        ok = np.all(slack_v >= -thr) and np.all(slack_r >= -1e-9 * gn - 1e-15)
        val = _objective(z, q, n, lin)
        if ok:
            return HullMinResult(z, vs, rs, True, total_steps)
        if best is None or val < best[0]:
            best = (val, z, vs, rs)
    if best is None:
        raise HullMinError("no feasible affine-hull minimizer found")
    return HullMinResult(best[1], best[2], best[3], False, total_steps)
