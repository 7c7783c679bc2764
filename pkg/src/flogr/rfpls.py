"""Robust functional partial least squares for functional logistic regression.

Pipeline for curves with basis coefficients ``A`` and Gram matrix ``Psi``:

1. design ``H = A Psi``, centred by its L1 median and scaled by column MADs;
2. per-observation weights, the row-wise median of the robustness weights of
   ``K`` univariate weighted-likelihood logits (one per column), applied to
   the rows as ``sqrt(w_i)``;
3. logit-PLS components: per-column weighted-likelihood slopes, normalized,
   Wald-pruned, projected, followed by regression deflation of the columns;
4. a weighted-likelihood logit of ``y`` on the components;
5. ``beta = V theta`` mapped back to the unstandardized scale.

The classical FPLS baseline is the same pipeline with mean/SD scaling, unit
weights and maximum-likelihood fits; see :mod:`flogr.baselines`.
"""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import stats

from flogr.basis import BSplineBasis, CoefficientFunction
from flogr.exceptions import ConfigurationError, DataError, DomainError, EstimationError, FlogrError
from flogr.wle import LogitFit, WleConfig, fit_mle_logit, fit_wle_logit, logistic

MAD_CONSISTENCY = 1.4826
STOP_REASONS = ("all_pruned", "max_components", "degenerate")


@dataclass(frozen=True)
class RfplsConfig:
    """Settings for :func:`fit_rfpls`.

    ``max_components=None`` means ``min(K, 8)``. ``standardization`` is
    ``"robust"`` (L1 median / MAD) or ``"classical"`` (mean / SD).
    """

    wald_alpha: float = 0.05
    max_components: Optional[int] = None
    wle: WleConfig = field(default_factory=WleConfig)
    weiszfeld_tol: float = 1e-9
    weiszfeld_max_iter: int = 2000
    standardization: str = "robust"

    def __post_init__(self):
        if not 0 < self.wald_alpha < 1:
            raise ConfigurationError("wald_alpha must lie in (0, 1)")
        if self.max_components is not None and self.max_components < 1:
            raise ConfigurationError("max_components must be at least 1")
        if not self.weiszfeld_tol > 0 or self.weiszfeld_max_iter < 1:
            raise ConfigurationError("invalid Weiszfeld settings")
        if self.standardization not in ("robust", "classical"):
            raise ConfigurationError("standardization must be 'robust' or 'classical'")

    @property
    def z_crit(self) -> float:
        return float(stats.norm.ppf(1 - self.wald_alpha / 2))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RfplsConfig":
        d = dict(d)
        d["wle"] = WleConfig(**d.get("wle", {}))
        return cls(**d)


@dataclass(frozen=True)
class Scaler:
    """Column centring and scaling ``(H - center) / scale``."""

    center: np.ndarray
    scale: np.ndarray
    kind: str = "robust"

    def __post_init__(self):
        if np.any(~(self.scale > 0)):
            raise DataError("scales must be strictly positive")

    def transform(self, H) -> np.ndarray:
        return (np.asarray(H, dtype=float) - self.center) / self.scale

    def inverse_transform(self, H_std) -> np.ndarray:
        return np.asarray(H_std, dtype=float) * self.scale + self.center


# kept for readability at call sites that only deal with the robust variant
RobustScaler = Scaler


@dataclass(frozen=True)
class RfplsModel:
    V: np.ndarray
    theta: np.ndarray
    alpha_hat: float
    beta_coefs: np.ndarray
    scaler: Scaler
    obs_weights: np.ndarray
    basis: BSplineBasis
    n_components: int
    stop_reason: str
    alpha_std: float
    fallback: bool = False
    config: RfplsConfig = field(default_factory=RfplsConfig)
    theta_se: Optional[np.ndarray] = None
    kind: str = "rfpls"

    @property
    def beta_std(self) -> np.ndarray:
        return self.V @ self.theta


def l1_median(X, tol: float = 1e-9, max_iter: int = 2000) -> np.ndarray:
    """Spatial median ``argmin_mu sum_i ||x_i - mu||`` by Weiszfeld iteration.

    Uses the Vardi-Zhang modification, so iterates landing on a data row keep
    moving when that row is not the minimizer. Stops once the step norm falls
    below ``tol`` times the data scale; on hitting ``max_iter`` the last
    iterate is returned with a ``RuntimeWarning``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 0:
        raise DataError("l1_median needs at least one row")
    if X.shape[0] == 1:
        return X[0].copy()
    mu = np.median(X, axis=0)
    spread = max(np.max(np.ptp(X, axis=0)), 1e-300)
    for _ in range(max_iter):
        diff = X - mu
        d = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        zero = d <= 1e-12 * spread
        inv = np.zeros_like(d)
        inv[~zero] = 1.0 / d[~zero]
        if not np.any(~zero):
            return mu
        T = inv @ X / inv.sum()
        eta = int(zero.sum())
        if eta:
            R = inv @ diff
            r = np.linalg.norm(R)
            gamma = min(1.0, eta / r) if r > 0 else 1.0
            new = (1.0 - gamma) * T + gamma * mu
        else:
            new = T
        step = np.linalg.norm(new - mu)
        mu = new
        if step < tol * spread:
            return mu
    warnings.warn("Weiszfeld iteration did not converge", RuntimeWarning, stacklevel=2)
    return mu


def mad_scale(X) -> np.ndarray:
    """Per-column ``1.4826 * median |x - median(x)|``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    med = np.median(X, axis=0)
    mad = MAD_CONSISTENCY * np.median(np.abs(X - med), axis=0)
    bad = np.flatnonzero(~(mad > 0))
    if bad.size:
        raise DataError(f"zero MAD in column(s) {bad.tolist()}")
    return mad


def robust_scaler(H, tol: float = 1e-9, max_iter: int = 2000) -> Scaler:
    return Scaler(l1_median(H, tol, max_iter), mad_scale(H), "robust")


def classical_scaler(H) -> Scaler:
    H = np.asarray(H, dtype=float)
    sd = H.std(axis=0, ddof=1)
    bad = np.flatnonzero(~(sd > 0))
    if bad.size:
        raise DataError(f"zero standard deviation in column(s) {bad.tolist()}")
    return Scaler(H.mean(axis=0), sd, "classical")


def _wle_fitter(config: RfplsConfig) -> Callable[..., LogitFit]:
    def fit(x, y):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return fit_wle_logit(x, y, config.wle)

    return fit


def _mle_fitter(config: RfplsConfig) -> Callable[..., LogitFit]:
    def fit(x, y):
        return fit_mle_logit(x, y, config.wle)

    return fit


def observation_weights(H_std, y, config: Optional[RfplsConfig] = None) -> np.ndarray:
    """Row-wise median of the robustness weights of per-column WLE logits."""
    config = config or RfplsConfig()
    H_std = np.asarray(H_std, dtype=float)
    fitter = _wle_fitter(config)
    columns = []
    for j in range(H_std.shape[1]):
        try:
            columns.append(fitter(H_std[:, j], y).obs_weights)
        except FlogrError:
            continue
    if not columns:
        raise EstimationError("every per-column weighted-likelihood fit failed")
    return np.median(np.column_stack(columns), axis=1)


def weight_rows(H_std, w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        raise DomainError("observation weights must be non-negative")
    return np.asarray(H_std, dtype=float) * np.sqrt(w)[:, None]


@dataclass
class Extraction:
    V: np.ndarray
    T: np.ndarray
    stop_reason: str
    first_direction: Optional[np.ndarray] = None


def _column_slopes(M, y, fitter) -> Tuple[np.ndarray, np.ndarray]:
    K = M.shape[1]
    slopes = np.zeros(K)
    ses = np.full(K, np.inf)
    for j in range(K):
        try:
            fit = fitter(M[:, j], y)
        except FlogrError:
            continue
        slopes[j] = fit.coefficients[1]
        ses[j] = fit.standard_errors[1]
    return slopes, ses


def _extract(H_tilde, y, fitter, z_crit: float, max_components: int) -> Extraction:
    H_tilde = np.asarray(H_tilde, dtype=float)
    n, K = H_tilde.shape
    M = H_tilde.copy()
    # R maps original columns to the current deflated ones, up to centring
    R = np.eye(K)
    loadings, comps = [], []
    first = None
    stop = "max_components"
    for l in range(max_components):
        slopes, ses = _column_slopes(M, y, fitter)
        norm = np.linalg.norm(slopes)
        if not norm > 0:
            stop = "all_pruned"
            break
        v = slopes / norm
        if l == 0:
            first = v.copy()
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(np.isinf(ses), 0.0, np.abs(slopes) / ses)
        v[z <= z_crit] = 0.0
        if not np.any(v):
            stop = "all_pruned"
            break
        loading = R @ v
        t = H_tilde @ loading
        tc = t - t.mean()
        var_t = tc @ tc
        if not var_t > 1e-14 * max(1.0, n):
            stop = "degenerate"
            break
        loadings.append(loading)
        comps.append(t)
        Mc = M - M.mean(axis=0)
        b = Mc.T @ tc / var_t
        M = Mc - np.outer(tc, b)
        R = R @ (np.eye(K) - np.outer(v, b))
    V = np.column_stack(loadings) if loadings else np.zeros((K, 0))
    T = np.column_stack(comps) if comps else np.zeros((n, 0))
    return Extraction(V, T, stop, first)


def extract_components(H_tilde, y, config: Optional[RfplsConfig] = None):
    """Robust logit-PLS components of ``H_tilde``.

    Returns ``(V, T, stop_reason)`` with ``T = H_tilde @ V``. Each round fits a
    weighted-likelihood logit of ``y`` on every current column, keeps the
    normalized slopes whose Wald statistic exceeds ``z_{alpha/2}``, projects,
    and replaces every column by its residual from a simple regression on the
    new component. ``V`` is expressed against the columns of ``H_tilde``.
    """
    config = config or RfplsConfig()
    K = np.asarray(H_tilde).shape[1]
    max_comp = config.max_components or min(K, 8)
    ex = _extract(H_tilde, y, _wle_fitter(config), config.z_crit, max_comp)
    return ex.V, ex.T, ex.stop_reason


def _check_inputs(A, psi, y, basis):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    psi = np.asarray(psi, dtype=float)
    K = basis.n_basis
    if A.shape[1] != K or psi.shape != (K, K):
        raise DataError(f"coefficients {A.shape} and Gram matrix {psi.shape} do not match K={K}")
    y = np.asarray(y)
    if y.shape != (A.shape[0],) or not np.all((y == 0) | (y == 1)):
        raise DataError("y must be a binary vector with one entry per curve")
    return A, psi, y.astype(int)


def _fit_pls(A, psi, y, basis, config: RfplsConfig, robust: bool) -> RfplsModel:
    A, psi, y = _check_inputs(A, psi, y, basis)
    H = A @ psi
    if config.standardization == "robust":
        scaler = robust_scaler(H, config.weiszfeld_tol, config.weiszfeld_max_iter)
    else:
        scaler = classical_scaler(H)
    H_std = scaler.transform(H)
    fitter = _wle_fitter(config) if robust else _mle_fitter(config)
    if robust:
        w = observation_weights(H_std, y, config)
    else:
        w = np.ones(H.shape[0])
    H_tilde = weight_rows(H_std, w)
    K = H.shape[1]
    max_comp = config.max_components or min(K, 8)
    ex = _extract(H_tilde, y, fitter, config.z_crit, max_comp)
    V = ex.V
    fallback = False
    if V.shape[1] == 0:
        if ex.first_direction is None:
            raise EstimationError("no usable slope in the first extraction round")
        V = ex.first_direction[:, None]
        fallback = True
    gamma = H_tilde @ V
    final = fitter(gamma, y)
    alpha_std = float(final.coefficients[0])
    theta = final.coefficients[1:].copy()
    beta_std = V @ theta
    beta = beta_std / scaler.scale
    alpha = alpha_std - float(beta @ scaler.center)
    return RfplsModel(
        V=V,
        theta=theta,
        alpha_hat=alpha,
        beta_coefs=beta,
        scaler=scaler,
        obs_weights=w,
        basis=basis,
        n_components=V.shape[1],
        stop_reason=ex.stop_reason,
        alpha_std=alpha_std,
        fallback=fallback,
        config=config,
        theta_se=final.standard_errors[1:].copy(),
        kind="rfpls" if robust else "fpls",
    )


def fit_rfpls(A, psi, y, basis: BSplineBasis, config: Optional[RfplsConfig] = None) -> RfplsModel:
    """Fit the robust FPLS logistic model.

    Parameters
    ----------
    A : array of shape (n, K)
        Basis coefficients of the training curves.
    psi : array of shape (K, K)
        Gram matrix of ``basis``.
    y : array of shape (n,)
        Binary labels.

    Returns
    -------
    RfplsModel
        When every slope is pruned in the first round the model falls back to
        the unpruned first direction and sets ``fallback=True``.
    """
    return _fit_pls(A, psi, y, basis, config or RfplsConfig(), robust=True)


def linear_predictor(model: RfplsModel, A_new, psi) -> np.ndarray:
    A_new = np.atleast_2d(np.asarray(A_new, dtype=float))
    if A_new.shape[1] != model.basis.n_basis:
        raise DataError(f"expected {model.basis.n_basis} basis coefficients, got {A_new.shape[1]}")
    return model.alpha_hat + A_new @ (np.asarray(psi) @ model.beta_coefs)


def predict(model: RfplsModel, A_new, psi) -> np.ndarray:
    """Probabilities ``logistic(alpha + A_new Psi beta)``."""
    return logistic(linear_predictor(model, A_new, psi))


def predict_standardized(model: RfplsModel, A_new, psi) -> np.ndarray:
    """Same probabilities computed on the standardized scale."""
    A_new = np.atleast_2d(np.asarray(A_new, dtype=float))
    H_std = model.scaler.transform(A_new @ np.asarray(psi))
    return logistic(model.alpha_std + H_std @ model.beta_std)


def coefficient_function(model: RfplsModel) -> CoefficientFunction:
    return CoefficientFunction(model.beta_coefs, model.basis)
