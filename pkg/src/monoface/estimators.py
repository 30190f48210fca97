"""scikit-learn style transformers over rows of points.

The operators are fixed analytic objects, so ``fit`` learns nothing beyond the
input width; it validates that the rows match the operator's dimension. The
wrappers exist so resolvents and selections compose with sklearn pipelines.
"""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .operators import Operator, SelectionPolicy
from .resolvent import resolvent


class _PointwiseOperatorTransformer(TransformerMixin, BaseEstimator):
    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        if not isinstance(self.operator, Operator):
            raise TypeError("operator must be a monoface Operator")
        if X.shape[1] != self.operator.dim:
            raise ValueError(f"X has {X.shape[1]} columns, operator acts on R^{self.operator.dim}")
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        return np.array([self._row(x) for x in X]).reshape(len(X), -1)


class ResolventMap(_PointwiseOperatorTransformer):
    """x -> x_lam, the resolvent point at parameter ``lam``."""

    def __init__(self, operator=None, lam=1.0):
        self.operator = operator
        self.lam = lam

    def _row(self, x):
        return resolvent(self.operator, x, self.lam).x_lambda


class YosidaApproximation(_PointwiseOperatorTransformer):
    """x -> A_lam(x) = lam^-1 J(x - x_lam), a single-valued monotone map."""

    def __init__(self, operator=None, lam=1.0):
        self.operator = operator
        self.lam = lam

    def _row(self, x):
        return resolvent(self.operator, x, self.lam).yosida_value


class MinimalNormSelection(_PointwiseOperatorTransformer):
    """x -> a selection of A x; the least dual-norm element by default.

    Points outside the domain raise ``DomainError``.
    """

    def __init__(self, operator=None, policy="min_norm"):
        self.operator = operator
        self.policy = policy

    def _row(self, x):
        pol = self.policy if isinstance(self.policy, SelectionPolicy) \
            else SelectionPolicy.from_dict(self.policy)
        val = self.operator.value(self.operator._check(x))
        return pol.select(val, x, self.operator.space)
