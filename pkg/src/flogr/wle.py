"""Maximum- and weighted-likelihood logistic regression.

The weighted fit follows the usual two-step scheme: observation weights are
computed from Pearson residuals of the current fit, an IRLS solve is run with
those weights held fixed, and the two steps alternate until the weights stop
changing. Pearson residuals are built from Anscombe residuals, which are much
closer to Gaussian than raw binomial residuals.
"""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy import special

from flogr.exceptions import (
    ConfigurationError,
    DataError,
    DomainError,
    SeparationError,
    SingularFitError,
)

PROB_EPS = 1e-10
RAF_KINDS = ("hellinger", "neg_exponential", "identity")
MODEL_DENSITIES = ("binomial", "gaussian")

_TWO_THIRDS = 2.0 / 3.0
_SQRT_2PI = np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class WleConfig:
    """Settings shared by the MLE and WLE logistic fits.

    ``smoothing_bandwidth=None`` selects ``0.31 * n**(-1/5) * MAD(r)`` from the
    Anscombe residuals ``r`` of each iteration. ``model_density`` picks the
    reference density the residual KDE is compared against: ``"binomial"``
    smooths the exact two-point distribution of each observation's Anscombe
    residual under the fitted model, ``"gaussian"`` uses the limiting N(0, 1).
    """

    raf_kind: str = "hellinger"
    smoothing_bandwidth: Optional[float] = None
    irls_tol: float = 1e-8
    weight_tol: float = 1e-6
    max_irls_iter: int = 100
    max_weight_iter: int = 50
    model_density: str = "binomial"

    def __post_init__(self):
        if self.raf_kind not in RAF_KINDS:
            raise ConfigurationError(f"raf_kind must be one of {RAF_KINDS}, got {self.raf_kind!r}")
        if self.model_density not in MODEL_DENSITIES:
            raise ConfigurationError(f"model_density must be one of {MODEL_DENSITIES}")
        if self.smoothing_bandwidth is not None and not self.smoothing_bandwidth > 0:
            raise ConfigurationError("smoothing_bandwidth must be positive")
        if not (self.irls_tol > 0 and self.weight_tol > 0):
            raise ConfigurationError("tolerances must be positive")
        if self.max_irls_iter < 1 or self.max_weight_iter < 1:
            raise ConfigurationError("iteration caps must be at least 1")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class LogitFit:
    """Result of a (weighted) logistic fit.

    ``coefficients`` and ``standard_errors`` include the intercept first when
    the fit used one.
    """

    coefficients: np.ndarray
    standard_errors: np.ndarray
    covariance: np.ndarray
    fitted_probs: np.ndarray
    obs_weights: np.ndarray
    converged: bool
    n_iter: int
    intercept: bool = True
    diagnostics: dict = field(default_factory=dict)

    @property
    def slopes(self) -> np.ndarray:
        return self.coefficients[1:] if self.intercept else self.coefficients


def _design(H, intercept: bool) -> np.ndarray:
    H = np.asarray(H, dtype=float)
    if H.ndim == 1:
        H = H[:, None]
    if H.ndim != 2:
        raise DataError("design matrix must be 2-d")
    if not np.all(np.isfinite(H)):
        raise DataError("design matrix contains non-finite entries")
    if H.shape[1]:
        const = np.ptp(H, axis=0) == 0
        if intercept and np.any(const):
            raise DataError(f"zero-variance design columns: {np.flatnonzero(const).tolist()}")
    if intercept:
        H = np.column_stack([np.ones(H.shape[0]), H])
    return H


def _labels(y, n: int) -> np.ndarray:
    y = np.asarray(y)
    if y.shape != (n,):
        raise DataError(f"expected {n} labels, got shape {y.shape}")
    if not np.all((y == 0) | (y == 1)):
        raise DataError("labels must be 0 or 1")
    return y.astype(float)


def logistic(eta) -> np.ndarray:
    return special.expit(eta)


def _irls(H, y, w, beta, tol, max_iter):
    """Newton/IRLS for the weighted score ``sum_i w_i H_i (y_i - pi_i) = 0``.

    Returns ``(beta, converged, n_iter)``; raises on divergence.
    """
    active = w > 0
    if not np.any(y[active] == 1) or not np.any(y[active] == 0):
        raise SeparationError("only one class carries positive weight; no finite MLE", beta)

    def penalty(b):
        eta = H @ b
        # weighted negative log-likelihood, computed stably
        return np.sum(w * (np.logaddexp(0.0, eta) - y * eta))

    current = penalty(beta)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        eta = H @ beta
        pi = np.clip(logistic(eta), PROB_EPS, 1 - PROB_EPS)
        omega = pi * (1.0 - pi) * w
        # working response Z = eta + (y - pi) / Omega; the solve is written in
        # score form to avoid dividing by tiny Omega
        XtWX = H.T @ (H * omega[:, None])
        score = H.T @ (w * (y - pi))
        try:
            step = np.linalg.solve(XtWX, score)
        except np.linalg.LinAlgError as exc:
            raise SingularFitError("weighted information matrix is singular") from exc
        if not np.all(np.isfinite(step)):
            raise SingularFitError("non-finite IRLS step")
        new = beta + step
        new_pen = penalty(new)
        halvings = 0
        while new_pen > current + 1e-12 * max(1.0, abs(current)) and halvings < 30:
            step = step / 2.0
            new = beta + step
            new_pen = penalty(new)
            halvings += 1
        change = np.max(np.abs(new - beta))
        beta, current = new, new_pen
        if np.max(np.abs(beta)) > 1e6 or (current < 1e-8 * max(1.0, w.sum())):
            raise SeparationError("logistic coefficients diverge (separated classes)", beta)
        if change < tol:
            converged = True
            break
    return beta, converged, it


def _finish(H, y, w, beta, converged, n_iter, intercept, diagnostics) -> LogitFit:
    eta = H @ beta
    raw = logistic(eta)
    pi = np.clip(raw, PROB_EPS, 1 - PROB_EPS)
    omega = pi * (1.0 - pi) * w
    info = H.T @ (H * omega[:, None])
    try:
        cov = np.linalg.inv(info)
    except np.linalg.LinAlgError as exc:
        raise SingularFitError("information matrix is singular at the solution") from exc
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    diagnostics = dict(diagnostics)
    diagnostics["n_clamped"] = int(np.sum(raw != pi))
    return LogitFit(
        coefficients=beta,
        standard_errors=se,
        covariance=cov,
        fitted_probs=pi,
        obs_weights=w.copy(),
        converged=converged,
        n_iter=n_iter,
        intercept=intercept,
        diagnostics=diagnostics,
    )


def _check_rank(H):
    if H.shape[0] <= H.shape[1] or np.linalg.matrix_rank(H) < H.shape[1]:
        raise SingularFitError(f"design matrix of shape {H.shape} is not of full column rank")


def fit_mle_logit(H, y, config: Optional[WleConfig] = None, intercept: bool = True) -> LogitFit:
    """Maximum-likelihood logistic regression by IRLS.

    Parameters
    ----------
    H : array of shape (n, p)
        Design matrix without the constant column; one is prepended when
        ``intercept`` is true.
    y : array of shape (n,)
        Binary responses.

    Raises
    ------
    SeparationError
        When no finite maximizer exists.
    SingularFitError
        When ``H`` is rank deficient.
    """
    config = config or WleConfig()
    X = _design(H, intercept)
    y = _labels(y, X.shape[0])
    _check_rank(X)
    w = np.ones(X.shape[0])
    beta, converged, n_iter = _irls(X, y, w, np.zeros(X.shape[1]), config.irls_tol, config.max_irls_iter)
    return _finish(X, y, w, beta, converged, n_iter, intercept, {})


def incomplete_beta(z, a, b):
    """Unnormalized incomplete beta integral ``int_0^z t^(a-1) (1-t)^(b-1) dt``."""
    z = np.asarray(z, dtype=float)
    if np.any(~np.isfinite(z)) or np.any(z < 0) or np.any(z > 1):
        raise DomainError("incomplete beta requires 0 <= z <= 1")
    if not (np.all(np.asarray(a) > 0) and np.all(np.asarray(b) > 0)):
        raise DomainError("incomplete beta requires a, b > 0")
    out = special.betainc(a, b, z) * special.beta(a, b)
    return out if out.ndim else float(out)


def anscombe_residuals(y, pi, trials=1.0) -> np.ndarray:
    """Binomial Anscombe residuals; ``y`` is the observed proportion.

    Probabilities are clamped to ``[PROB_EPS, 1 - PROB_EPS]`` first.
    """
    y = np.asarray(y, dtype=float)
    pi = np.clip(np.asarray(pi, dtype=float), PROB_EPS, 1 - PROB_EPS)
    trials = np.asarray(trials, dtype=float)
    if np.any(trials < 1):
        raise DomainError("trials must be at least 1")
    diff = incomplete_beta(y, _TWO_THIRDS, _TWO_THIRDS) - incomplete_beta(pi, _TWO_THIRDS, _TWO_THIRDS)
    return np.sqrt(trials) * diff * (pi * (1.0 - pi)) ** (-1.0 / 6.0)


def default_bandwidth(r) -> float:
    """``0.31 * n**(-1/5)`` times the consistency-scaled MAD of ``r``."""
    r = np.asarray(r, dtype=float)
    mad = 1.4826 * np.median(np.abs(r - np.median(r)))
    if not mad > 0:
        mad = np.std(r) if np.std(r) > 0 else 1.0
    return 0.31 * r.size ** (-0.2) * mad


def _gauss(x, sd):
    return np.exp(-0.5 * (x / sd) ** 2) / (_SQRT_2PI * sd)


def _kernel_sum(x, centers, h, masses=None):
    """``sum_k masses[k] * phi_h(x_i - centers[k])`` for every ``x_i``."""
    d = np.subtract.outer(x, centers)
    d *= 1.0 / h
    np.square(d, out=d)
    d *= -0.5
    np.exp(d, out=d)
    s = d.sum(axis=1) if masses is None else d @ masses
    return s / (_SQRT_2PI * h)


def pearson_residuals_from_density(r, bandwidth: float, model_points=None, model_masses=None) -> np.ndarray:
    """Pearson residuals ``delta_i = f(r_i) / m(r_i) - 1``.

    ``f`` is a Gaussian kernel density estimate of the residual sample with
    bandwidth ``h``. Without ``model_points`` the model density ``m`` is the
    standard normal smoothed by the same kernel, i.e. N(0, 1 + h^2). With
    ``model_points`` (shape ``(n, s)``) and matching ``model_masses`` (rows
    summing to one), ``m`` is the kernel-smoothed mixture that puts mass
    ``model_masses[i, k] / n`` at ``model_points[i, k]``.
    """
    r = np.asarray(r, dtype=float).ravel()
    if r.size < 2:
        raise DataError("need at least 2 residuals for a density estimate")
    if not bandwidth > 0:
        raise ConfigurationError("bandwidth must be positive")
    h = float(bandwidth)
    f = _kernel_sum(r, r, h) / r.size
    if model_points is None:
        m = _gauss(r, np.sqrt(1.0 + h * h))
    else:
        pts = np.asarray(model_points, dtype=float).reshape(-1)
        mass = np.asarray(model_masses, dtype=float).reshape(-1)
        m = _kernel_sum(r, pts, h, mass) / r.size
    with np.errstate(divide="ignore", over="ignore"):
        delta = np.where(m > 0, f / np.where(m > 0, m, 1.0), np.inf) - 1.0
    return np.maximum(delta, -1.0)


def raf(delta, kind: str = "hellinger") -> np.ndarray:
    """Residual adjustment function; strictly increasing on ``[-1, inf)``."""
    delta = np.asarray(delta, dtype=float)
    if np.any(delta < -1):
        raise DomainError("Pearson residuals must be >= -1")
    if kind == "hellinger":
        return 2.0 * (np.sqrt(delta + 1.0) - 1.0)
    if kind == "neg_exponential":
        with np.errstate(over="ignore", invalid="ignore"):
            out = 2.0 - (2.0 + delta) * np.exp(-delta)
        return np.where(np.isinf(delta), 2.0, out)
    if kind == "identity":
        return delta.copy()
    raise ConfigurationError(f"unknown RAF kind {kind!r}")


def weights_from_residuals(delta, kind: str = "hellinger") -> np.ndarray:
    """``w = clip((A(delta) + 1) / (delta + 1), 0, 1)``.

    At ``delta = -1`` the ratio is replaced by its limit (0 for Hellinger,
    1 otherwise); at ``delta = inf`` by its limit 0.
    """
    delta = np.asarray(delta, dtype=float)
    if kind == "identity":
        if np.any(delta < -1):
            raise DomainError("Pearson residuals must be >= -1")
        return np.ones_like(delta)
    a = raf(delta, kind)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = (a + 1.0) / (delta + 1.0)
    at_floor = delta == -1.0
    w = np.where(at_floor, 0.0 if kind == "hellinger" else 1.0, w)
    w = np.where(np.isinf(delta), 0.0, w)
    return np.clip(w, 0.0, 1.0)


def _robustness_weights(y, pi, config: WleConfig) -> np.ndarray:
    r = anscombe_residuals(y, pi)
    h = config.smoothing_bandwidth or default_bandwidth(r)
    if config.model_density == "gaussian":
        delta = pearson_residuals_from_density(r, h)
    else:
        pc = np.clip(pi, PROB_EPS, 1 - PROB_EPS)
        points = np.column_stack([anscombe_residuals(np.ones_like(pc), pc), anscombe_residuals(np.zeros_like(pc), pc)])
        masses = np.column_stack([pc, 1.0 - pc])
        delta = pearson_residuals_from_density(r, h, points, masses)
    return weights_from_residuals(delta, config.raf_kind)


def fit_wle_logit(H, y, config: Optional[WleConfig] = None, intercept: bool = True) -> LogitFit:
    """Weighted-likelihood logistic regression.

    Starts from the MLE, then alternates (i) weights from the Pearson
    residuals of the current fit and (ii) IRLS with those weights fixed,
    until the largest weight change drops below ``config.weight_tol``.
    A fit that hits ``max_weight_iter`` is returned with ``converged=False``.
    """
    config = config or WleConfig()
    X = _design(H, intercept)
    y = _labels(y, X.shape[0])
    _check_rank(X)
    n = X.shape[0]
    w = np.ones(n)
    beta, ok, n_irls = _irls(X, y, w, np.zeros(X.shape[1]), config.irls_tol, config.max_irls_iter)
    if config.raf_kind == "identity":
        return _finish(X, y, w, beta, ok, n_irls, intercept, {"weight_iter": 0})

    converged = False
    it = 0
    for it in range(1, config.max_weight_iter + 1):
        pi = logistic(X @ beta)
        w_new = _robustness_weights(y, pi, config)
        beta, ok, k = _irls(X, y, w_new, beta, config.irls_tol, config.max_irls_iter)
        n_irls += k
        change = np.max(np.abs(w_new - w))
        w = w_new
        if change < config.weight_tol:
            converged = ok
            break
    if not converged:
        warnings.warn("weighted-likelihood iterations did not converge", RuntimeWarning, stacklevel=2)
    return _finish(X, y, w, beta, converged, n_irls, intercept, {"weight_iter": it})


def wald_abs_z(fit: LogitFit) -> np.ndarray:
    """``|coef / SE|`` per coefficient; a zero SE gives ``inf``."""
    coef, se = fit.coefficients, fit.standard_errors
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.abs(coef) / se
    return np.where(se == 0, np.inf, z)


def predict_prob(fit: LogitFit, H_new) -> np.ndarray:
    X = np.asarray(H_new, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    p = fit.coefficients.size - int(fit.intercept)
    if X.shape[1] != p:
        raise DataError(f"design has {X.shape[1]} columns, fit expects {p}")
    eta = X @ fit.coefficients[int(fit.intercept):]
    if fit.intercept:
        eta = eta + fit.coefficients[0]
    return logistic(eta)
