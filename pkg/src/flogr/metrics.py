"""Classification and estimation metrics."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata

from flogr.basis import integrate_product
from flogr.exceptions import ConfigurationError, DataError


@dataclass(frozen=True)
class EvalReport:
    ccr: float
    auc: float
    confusion: list  # [[TN, FP], [FN, TP]]
    n: int

    def to_dict(self) -> dict:
        return asdict(self)


def _pair(y, p):
    y = np.asarray(y)
    p = np.asarray(p, dtype=float)
    if y.shape != p.shape or y.ndim != 1:
        raise DataError(f"labels {y.shape} and scores {p.shape} must be equal-length vectors")
    if y.size == 0:
        raise DataError("metric undefined for empty input")
    if not np.all((y == 0) | (y == 1)):
        raise DataError("labels must be 0 or 1")
    return y.astype(int), p


def ccr(y, p, cut: float = 0.5) -> float:
    """Correct classification ratio; ``p >= cut`` predicts class 1."""
    if not 0 < cut < 1:
        raise ConfigurationError("cut must lie in (0, 1)")
    y, p = _pair(y, p)
    return float(np.mean((p >= cut).astype(int) == y))


def confusion(y, p, cut: float = 0.5) -> np.ndarray:
    y, p = _pair(y, p)
    pred = (p >= cut).astype(int)
    return np.array([[np.sum((y == a) & (pred == b)) for b in (0, 1)] for a in (0, 1)])


def auc(y, p) -> float:
    """Mann-Whitney AUC from mid-ranks; ties between classes count one half."""
    y, p = _pair(y, p)
    n1 = int(y.sum())
    n0 = y.size - n1
    if n1 == 0 or n0 == 0:
        raise DataError("AUC needs both classes present")
    ranks = rankdata(p, method="average")
    u = ranks[y == 1].sum() - n1 * (n1 + 1) / 2.0
    return float(u / (n1 * n0))


def imse(beta_true, beta_hat, grid) -> float:
    """``int (beta(t) - beta_hat(t))^2 dt`` by the trapezoid rule on ``grid``."""
    beta_true = np.asarray(beta_true, dtype=float)
    beta_hat = np.asarray(beta_hat, dtype=float)
    if beta_true.shape != beta_hat.shape:
        raise DataError(f"coefficient functions of shape {beta_true.shape} and {beta_hat.shape} differ")
    d = beta_true - beta_hat
    return float(integrate_product(d, d, grid))


def evaluate(y, p, cut: float = 0.5) -> EvalReport:
    y, p = _pair(y, p)
    return EvalReport(ccr(y, p, cut), auc(y, p), confusion(y, p, cut).tolist(), int(y.size))
