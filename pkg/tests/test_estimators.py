import numpy as np
import pytest
from conftest import ball_op, sign_op, tri_op
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from monoface import MinimalNormSelection, ResolventMap, YosidaApproximation
from monoface.operators import DomainError


def test_resolvent_map_is_soft_threshold():
    X = np.array([[-2.0], [-0.3], [0.0], [0.4], [3.0]])
    out = ResolventMap(sign_op(), lam=0.5).fit_transform(X)
    expected = np.sign(X[:, 0]) * np.maximum(np.abs(X[:, 0]) - 0.5, 0)
    np.testing.assert_allclose(out[:, 0], expected, atol=1e-12)


def test_yosida_values_bounded_by_value_set():
    X = np.random.default_rng(0).uniform(-2, 2, (20, 2))
    out = YosidaApproximation(tri_op(), lam=0.1).fit(X).transform(X)
    assert out.shape == (20, 2)
    assert np.all(out >= -1e-12) and np.all(out.sum(axis=1) <= 1 + 1e-12)


def test_minimal_norm_selection_policies():
    X = np.array([[1.0, 1.0], [0.0, 0.0]])
    np.testing.assert_allclose(MinimalNormSelection(tri_op()).fit_transform(X),
                               [[0.5, 0.5], [0.0, 0.0]])
    lex = MinimalNormSelection(tri_op(), policy="vertex_lexicographic").fit_transform(X)
    np.testing.assert_allclose(lex, [[0, 1], [0, 0]])
    with pytest.raises(DomainError):
        MinimalNormSelection(ball_op()).fit_transform(np.array([[2.0, 0.0]]))


def test_params_clone_and_pipeline():
    est = ResolventMap(ball_op(), lam=2.0)
    assert est.get_params()["lam"] == 2.0
    c = clone(est)
    assert c.lam == 2.0 and type(c.operator) is type(est.operator)
    pipe = make_pipeline(ResolventMap(ball_op(), lam=1.0), MinimalNormSelection(ball_op()))
    out = pipe.fit_transform(np.array([[3.0, 4.0], [0.1, 0.2]]))
    np.testing.assert_allclose(out, 0.0, atol=1e-12)


def test_validation():
    with pytest.raises(ValueError, match="columns"):
        ResolventMap(tri_op()).fit(np.zeros((3, 3)))
    with pytest.raises(TypeError):
        ResolventMap(None).fit(np.zeros((3, 2)))
    with pytest.raises(NotFittedError):
        ResolventMap(tri_op()).transform(np.zeros((1, 2)))
    est = ResolventMap(tri_op()).fit(np.zeros((1, 2)))
    with pytest.raises(ValueError, match="expected 2 columns"):
        est.transform(np.zeros((1, 3)))
