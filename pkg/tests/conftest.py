import numpy as np
import pytest
from scipy.optimize import linprog

from monoface.convex_sets import PolyhedralSet
from monoface.operators import (AffineMonotone, MaxAffineFunction, NormalConeMap,
                                SubdiffMaxAffine, UnitBallNormalCone)
from monoface.space import SpaceSpec

# filled by tests/test_acceptance.py, printed after the run
ACCEPTANCE_LINES = {}


def linprog_support(V, R, d):
    """max <d, z> over conv(V) + cone(R) as an LP in the generator weights."""
    V = np.atleast_2d(V)
    R = np.zeros((0, V.shape[1])) if R is None or len(R) == 0 else np.atleast_2d(R)
    c = -np.concatenate([V @ d, R @ d])
    A_eq = np.concatenate([np.ones(len(V)), np.zeros(len(R))])[None]
    res = linprog(c, A_eq=A_eq, b_eq=[1.0], bounds=(0, None), method="highs")
    if res.status == 3:
        return np.inf
    assert res.status == 0
    return -res.fun


def sign_op(p=2.0):
    return SubdiffMaxAffine(MaxAffineFunction([[1.0], [-1.0]], [0.0, 0.0]), SpaceSpec(1, p))


def tri_op(p=2.0):
    f = MaxAffineFunction([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]], [0.0, 0.0, 0.0])
    return SubdiffMaxAffine(f, SpaceSpec(2, p))


def box_op(p=2.0, lo=(-1.0, -1.0), hi=(1.0, 1.0)):
    return NormalConeMap(PolyhedralSet.box(lo, hi), SpaceSpec(len(lo), p))


def ball_op(p=2.0, dim=2):
    return UnitBallNormalCone(SpaceSpec(dim, p))


def affine_op(M, c, p=2.0):
    return AffineMonotone(M, c, SpaceSpec(len(c), p))


@pytest.fixture
def sign():
    return sign_op()


@pytest.fixture
def tri():
    return tri_op()


@pytest.fixture
def box():
    return box_op()


@pytest.fixture
def ball():
    return ball_op()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
