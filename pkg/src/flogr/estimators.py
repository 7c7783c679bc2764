"""scikit-learn compatible estimators.

Each classifier takes curves as rows of an ``n x m`` array sampled on a common
grid (``grid``, default ``linspace(0, 1, m)``), projects them on a cubic
B-spline basis and fits the corresponding functional logistic model. They can
be cloned, grid-searched and used inside pipelines.

>>> from flogr.simulate import SimConfig, generate_case2
>>> ds = generate_case2(SimConfig("case2", n=200, seed=3))
>>> clf = RobustFPLSClassifier(grid=ds.grid.points).fit(ds.data.values, ds.data.labels)
>>> clf.predict_proba(ds.data.values[:2]).shape
(2, 2)
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from flogr import baselines, rfpls
from flogr.basis import SamplingGrid, build_bspline_basis, fit_coefficients, gram_matrix
from flogr.exceptions import DataError
from flogr.rfpls import RfplsConfig
from flogr.wle import WleConfig


def _grid_for(grid, m) -> SamplingGrid:
    if grid is None:
        return SamplingGrid.uniform(0.0, 1.0, m)
    if isinstance(grid, SamplingGrid):
        g = grid
    else:
        g = SamplingGrid(np.asarray(grid, dtype=float))
    if len(g) != m:
        raise DataError(f"grid has {len(g)} points but X has {m} columns")
    return g


class BSplineSmoother(TransformerMixin, BaseEstimator):
    """Least-squares B-spline coefficients of each curve."""

    def __init__(self, n_basis=15, order=4, grid=None):
        self.n_basis = n_basis
        self.order = order
        self.grid = grid

    def fit(self, X, y=None):
        X = check_array(X)
        self.grid_ = _grid_for(self.grid, X.shape[1])
        self.basis_ = build_bspline_basis(self.grid_.domain, self.n_basis, self.order)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "basis_")
        X = check_array(X)
        return fit_coefficients(X, self.basis_, self.grid_)


class _FunctionalLogit(ClassifierMixin, TransformerMixin, BaseEstimator):
    def _fit_model(self, A, psi, y, basis):
        raise NotImplementedError

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        check_classification_targets(y)
        self.classes_ = np.unique(y)
        if self.classes_.size != 2:
            raise ValueError(f"{type(self).__name__} needs exactly two classes, got {self.classes_.size}")
        y01 = (y == self.classes_[1]).astype(int)
        self.n_features_in_ = X.shape[1]
        self.grid_ = _grid_for(self.grid, X.shape[1])
        self.basis_ = build_bspline_basis(self.grid_.domain, self.n_basis, self.order)
        self.psi_ = gram_matrix(self.basis_)
        A = fit_coefficients(X, self.basis_, self.grid_)
        self.model_ = self._fit_model(A, self.psi_, y01, self.basis_)
        self.coef_ = self.model_.beta_coefs
        self.intercept_ = float(self.model_.alpha_hat)
        self.n_components_ = int(self.model_.n_components)
        return self

    def _coefficients(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} columns, expected {self.n_features_in_}")
        return fit_coefficients(X, self.basis_, self.grid_)

    def decision_function(self, X):
        """Linear predictor ``alpha + int X(t) beta(t) dt`` in its basis form."""
        A = self._coefficients(X)
        return self.intercept_ + A @ (self.psi_ @ self.coef_)

    def predict_proba(self, X):
        eta = self.decision_function(X)
        p = 1.0 / (1.0 + np.exp(-np.clip(eta, -700, 700)))
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        p = self.predict_proba(X)[:, 1]
        return self.classes_[(p >= 0.5).astype(int)]

    def coef_function(self, t=None):
        """Estimated coefficient function on ``t`` (default: the training grid)."""
        check_is_fitted(self, "model_")
        t = self.grid_.points if t is None else np.asarray(t, dtype=float)
        return self.basis_(t) @ self.coef_


class RobustFPLSClassifier(_FunctionalLogit):
    """Robust functional PLS logistic regression.

    Parameters
    ----------
    n_basis : int, default=15
        Number of cubic B-spline basis functions.
    wald_alpha : float, default=0.05
        Level of the Wald test used to prune component loadings.
    max_components : int or None
        Cap on the number of components; ``None`` means ``min(n_basis, 8)``.
    raf : {"hellinger", "neg_exponential", "identity"}
        Residual adjustment function of the weighted likelihood.
    bandwidth : float or None
        Fixed smoothing bandwidth for the residual density; ``None`` uses a
        rule of thumb on each iteration's residuals.

    Attributes
    ----------
    model_ : RfplsModel
    coef_ : ndarray of shape (n_basis,)
        Basis coefficients of the coefficient function.
    obs_weights_ : ndarray of shape (n_samples,)
        Robustness weights of the training curves.
    """

    def __init__(
        self,
        n_basis=15,
        order=4,
        grid=None,
        wald_alpha=0.05,
        max_components=None,
        raf="hellinger",
        bandwidth=None,
        model_density="binomial",
        standardization="robust",
    ):
        self.n_basis = n_basis
        self.order = order
        self.grid = grid
        self.wald_alpha = wald_alpha
        self.max_components = max_components
        self.raf = raf
        self.bandwidth = bandwidth
        self.model_density = model_density
        self.standardization = standardization

    def _config(self):
        wle = WleConfig(raf_kind=self.raf, smoothing_bandwidth=self.bandwidth, model_density=self.model_density)
        return RfplsConfig(self.wald_alpha, self.max_components, wle, standardization=self.standardization)

    def _fit_model(self, A, psi, y, basis):
        model = rfpls.fit_rfpls(A, psi, y, basis, self._config())
        self.obs_weights_ = model.obs_weights
        return model

    def transform(self, X):
        """Component scores ``standardized(A Psi) @ V`` (no row weights)."""
        A = self._coefficients(X)
        return self.model_.scaler.transform(A @ self.psi_) @ self.model_.V


class FPLSClassifier(RobustFPLSClassifier):
    """Classical functional PLS logistic regression (mean/SD scaling, MLE fits)."""

    def __init__(self, n_basis=15, order=4, grid=None, wald_alpha=0.05, max_components=None):
        self.n_basis = n_basis
        self.order = order
        self.grid = grid
        self.wald_alpha = wald_alpha
        self.max_components = max_components

    def _config(self):
        return RfplsConfig(self.wald_alpha, self.max_components, standardization="classical")

    def _fit_model(self, A, psi, y, basis):
        return baselines.fit_fpls(A, psi, y, basis, self._config())


class FPCClassifier(_FunctionalLogit):
    """Functional principal component logistic regression."""

    def __init__(self, n_basis=15, order=4, grid=None, n_components=4, variance_threshold=None):
        self.n_basis = n_basis
        self.order = order
        self.grid = grid
        self.n_components = n_components
        self.variance_threshold = variance_threshold

    def _fit_model(self, A, psi, y, basis):
        return baselines.fit_fpc(A, psi, y, basis, self.n_components, self.variance_threshold)

    def transform(self, X):
        """Functional principal component scores."""
        A = self._coefficients(X)
        return baselines.fpc_scores(self.model_, A, self.psi_)
