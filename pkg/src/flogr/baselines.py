"""Classical comparison estimators: FPLS and FPC logistic regression."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from flogr.basis import BSplineBasis, CoefficientFunction
from flogr.exceptions import ConfigurationError, DataError
from flogr.rfpls import RfplsConfig, RfplsModel, _check_inputs, _fit_pls
from flogr.rfpls import predict as _predict_pls
from flogr.wle import WleConfig, fit_mle_logit, logistic

FplsModel = RfplsModel

_SQRT_JITTER = 1e-10


def fit_fpls(A, psi, y, basis: BSplineBasis, config: Optional[RfplsConfig] = None) -> FplsModel:
    """Classical logit FPLS.

    Runs the same component extraction as :func:`flogr.rfpls.fit_rfpls` with
    mean/SD standardization, unit observation weights and maximum-likelihood
    fits throughout. The ``standardization`` field of ``config`` is ignored.
    """
    config = replace(config or RfplsConfig(), standardization="classical")
    return _fit_pls(A, psi, y, basis, config, robust=False)


def predict_fpls(model: FplsModel, A_new, psi) -> np.ndarray:
    return _predict_pls(model, A_new, psi)


@dataclass(frozen=True)
class FpcModel:
    """Functional principal component logistic regression.

    ``component_basis`` holds the basis coefficients of the eigenfunctions
    (one per column, Psi-orthonormal).
    """

    component_basis: np.ndarray
    scores_mean: np.ndarray
    logit_coefs: np.ndarray
    beta_coefs: np.ndarray
    explained_variance: np.ndarray
    all_variance: np.ndarray
    alpha_hat: float
    basis: BSplineBasis
    n_components: int
    diagnostics: dict = field(default_factory=dict)
    kind: str = "fpc"

    @property
    def explained_variance_ratio(self) -> np.ndarray:
        return self.explained_variance / self.all_variance.sum()


def _sym_sqrt(psi):
    vals, vecs = np.linalg.eigh(psi)
    jittered = bool(np.any(vals <= 0))
    vals = np.where(vals > 0, vals, _SQRT_JITTER)
    root = (vecs * np.sqrt(vals)) @ vecs.T
    inv_root = (vecs / np.sqrt(vals)) @ vecs.T
    return root, inv_root, jittered


def fit_fpc(
    A,
    psi,
    y,
    basis: BSplineBasis,
    n_components: Optional[int] = 4,
    variance_threshold: Optional[float] = None,
    wle: Optional[WleConfig] = None,
) -> FpcModel:
    """Functional PCA on the basis coefficients, then an MLE logit on the scores.

    The eigenproblem is ``Psi^{1/2} Cov(A) Psi^{1/2} e = lambda e``; the
    eigenfunction coefficients are ``Psi^{-1/2} e``. With ``variance_threshold``
    set, the smallest number of components whose cumulative explained variance
    reaches it is used instead of ``n_components``.
    """
    A, psi, y = _check_inputs(A, psi, y, basis)
    K = basis.n_basis
    root, inv_root, jittered = _sym_sqrt(psi)
    mean = A.mean(axis=0)
    S = root @ np.cov(A, rowvar=False) @ root
    vals, vecs = np.linalg.eigh(0.5 * (S + S.T))
    order = np.argsort(vals)[::-1]
    vals = np.clip(vals[order], 0.0, None)
    vecs = vecs[:, order]
    # sign convention: largest-magnitude entry positive, for reproducible output
    flip = np.sign(vecs[np.argmax(np.abs(vecs), axis=0), np.arange(K)])
    vecs = vecs * np.where(flip == 0, 1.0, flip)

    if variance_threshold is not None:
        if not 0 < variance_threshold <= 1:
            raise ConfigurationError("variance_threshold must lie in (0, 1]")
        ratio = np.cumsum(vals) / vals.sum()
        L = int(np.searchsorted(ratio, variance_threshold - 1e-12) + 1)
    else:
        L = n_components
    if L is None or not 1 <= L <= K:
        raise ConfigurationError(f"n_components must lie in [1, {K}]")

    loadings = inv_root @ vecs[:, :L]
    scores = (A - mean) @ psi @ loadings
    fit = fit_mle_logit(scores, y, wle)
    slopes = fit.coefficients[1:]
    beta = loadings @ slopes
    alpha = float(fit.coefficients[0] - mean @ psi @ beta)
    return FpcModel(
        component_basis=loadings,
        scores_mean=mean,
        logit_coefs=fit.coefficients.copy(),
        beta_coefs=beta,
        explained_variance=vals[:L],
        all_variance=vals,
        alpha_hat=alpha,
        basis=basis,
        n_components=L,
        diagnostics={"psi_jitter": jittered, "logit_converged": fit.converged},
    )


def fpc_scores(model: FpcModel, A_new, psi) -> np.ndarray:
    A_new = np.atleast_2d(np.asarray(A_new, dtype=float))
    if A_new.shape[1] != model.basis.n_basis:
        raise DataError(f"expected {model.basis.n_basis} basis coefficients, got {A_new.shape[1]}")
    return (A_new - model.scores_mean) @ np.asarray(psi) @ model.component_basis


def predict_fpc(model: FpcModel, A_new, psi) -> np.ndarray:
    A_new = np.atleast_2d(np.asarray(A_new, dtype=float))
    if A_new.shape[1] != model.basis.n_basis:
        raise DataError(f"expected {model.basis.n_basis} basis coefficients, got {A_new.shape[1]}")
    return logistic(model.alpha_hat + A_new @ (np.asarray(psi) @ model.beta_coefs))


def coefficient_function(model) -> CoefficientFunction:
    return CoefficientFunction(model.beta_coefs, model.basis)
