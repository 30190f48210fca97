"""Finite-dimensional l^p spaces and their duality mappings.

The ambient space is R^n with the l^p norm for 1 < p < inf; its dual is
R^n with the conjugate l^q norm. Both are uniformly convex, so the
duality mapping J is single-valued and continuous with a continuous
inverse (the duality mapping of the dual space).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SpaceSpec:
    """An l^p model of the primal space.

    Parameters
    ----------
    dim : int
        Dimension n >= 1.
    p : float
        Norm exponent, strictly between 1 and infinity.
    """

    dim: int
    p: float = 2.0

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim!r}")
        p = float(self.p)
        if not np.isfinite(p) or p <= 1.0:
            raise ValueError(
                f"p must satisfy 1 < p < inf (l^1 and l^inf are not uniformly "
                f"convex), got {self.p!r}")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "p", p)

    @property
    def q(self) -> float:
        """Conjugate exponent, 1/p + 1/q = 1."""
        return conjugate_exponent(self.p)

    def dual(self) -> "SpaceSpec":
        return SpaceSpec(self.dim, self.q)

    def to_dict(self):
        return {"dim": self.dim, "p": self.p}

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["dim"]), float(d.get("p", 2.0)))


def conjugate_exponent(p: float) -> float:
    if p == 2.0:
        return 2.0
    return p / (p - 1.0)


def as_coords(space: SpaceSpec, x, name="x") -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1 or x.shape[0] != space.dim:
        raise ValueError(
            f"{name} must have length {space.dim}, got shape {np.shape(x)}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} has non-finite entries")
    return x


def lp_norm(x: np.ndarray, r: float) -> float:
    # max-factored to keep |x_i|^r from overflowing for large entries
    a = np.abs(np.asarray(x, dtype=float))
    m = a.max(initial=0.0)
    if m == 0.0:
        return 0.0
    if r == 2.0:
        return float(m * np.sqrt(np.sum((a / m) ** 2)))
    return float(m * np.sum((a / m) ** r) ** (1.0 / r))


def lp_duality(x: np.ndarray, r: float) -> np.ndarray:
    """Duality mapping of l^r: ||x||^(2-r) |x|^(r-1) sign(x), with J(0) = 0."""
    x = np.asarray(x, dtype=float)
    if r == 2.0:
        return x.copy()
    a = np.abs(x)
    m = a.max(initial=0.0)
    if m == 0.0:
        return np.zeros_like(x)
    u = a / m
    nu = np.sum(u ** r) ** (1.0 / r)
    # J(x) = m * nu^(2-r) * u^(r-1) * sign(x), homogeneous of degree one
    return m * nu ** (2.0 - r) * u ** (r - 1.0) * np.sign(x)


def lp_duality_jacobian(x: np.ndarray, r: float) -> np.ndarray:
    """Derivative of the l^r duality mapping (Hessian of half the squared norm).

    Bounded near coordinate hyperplanes only for r >= 2; callers pick the
    exponent accordingly.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if r == 2.0:
        return np.eye(n)
    a = np.abs(x)
    m = a.max(initial=0.0)
    if m == 0.0:
        return np.eye(n)
    u = a / m
    s = np.sign(x)
    nu = np.sum(u ** r) ** (1.0 / r)
    with np.errstate(divide="ignore"):
        d = np.where(u > 0, u ** (r - 2.0), 0.0 if r > 2.0 else np.inf)
    g = u ** (r - 1.0) * s
    # scale-free form: DJ is homogeneous of degree zero
    H = (r - 1.0) * nu ** (2.0 - r) * np.diag(d) \
        + (2.0 - r) * nu ** (2.0 - 2.0 * r) * np.outer(g, g)
    return H


def norm(space: SpaceSpec, x) -> float:
    """Primal l^p norm."""
    return lp_norm(as_coords(space, x), space.p)


def dual_norm(space: SpaceSpec, xstar) -> float:
    """Dual l^q norm."""
    return lp_norm(as_coords(space, xstar, "xstar"), space.q)


def pairing(xstar, x) -> float:
    return float(np.dot(np.asarray(xstar, dtype=float), np.asarray(x, dtype=float)))


def duality_map(space: SpaceSpec, x) -> np.ndarray:
    """J(x), the unique covector with <J(x), x> = ||x||^2 = ||J(x)||_*^2."""
    return lp_duality(as_coords(space, x), space.p)


def duality_map_inverse(space: SpaceSpec, xstar) -> np.ndarray:
    """J^{-1}(x*), which is the duality mapping of the dual space."""
    return lp_duality(as_coords(space, xstar, "xstar"), space.q)
