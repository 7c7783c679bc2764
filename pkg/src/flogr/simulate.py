"""Monte Carlo data generators for functional logistic regression.

Case 1 draws curves from a 13-function cubic B-spline basis on [0, 10] with
random coefficients ``C = Z U`` and labels from ``logistic(int X beta)`` with
``beta(t) = sin(t pi / 3)``. Case 2 draws triangular-bump curves on [1, 21]
whose shape depends on the class.

Contamination replaces selected rows by outlying curves and flips their labels.
Under the two-phase protocol (:func:`train_test_split`) a clean dataset is
split first and only training rows are contaminated.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import Optional, Tuple

import numpy as np

from flogr.basis import FunctionalDataset, SamplingGrid, build_bspline_basis
from flogr.exceptions import ConfigurationError
from flogr.wle import logistic

CASES = ("case1", "case2")
DEFAULT_GRID = {"case1": 256, "case2": 101}
CASE1_DOMAIN = (0.0, 10.0)
CASE2_DOMAIN = (1.0, 21.0)
CASE1_N_BASIS = 13

# independent streams derived from the seed
_STREAM_DATA, _STREAM_CONTAMINATION, _STREAM_SPLIT = 0, 1, 2


@dataclass(frozen=True)
class SimConfig:
    case: str = "case1"
    n: int = 1000
    contamination_rate: float = 0.0
    seed: int = 0
    n_grid: Optional[int] = None
    label_mode: str = "bernoulli"

    def __post_init__(self):
        if self.case not in CASES:
            raise ConfigurationError(f"case must be one of {CASES}")
        if self.n < 10:
            raise ConfigurationError("n must be at least 10")
        if not 0 <= self.contamination_rate < 1:
            raise ConfigurationError("contamination_rate must lie in [0, 1)")
        if self.label_mode not in ("bernoulli", "threshold"):
            raise ConfigurationError("label_mode must be 'bernoulli' or 'threshold'")
        if self.n_grid is None:
            object.__setattr__(self, "n_grid", DEFAULT_GRID[self.case])
        if self.n_grid < 4:
            raise ConfigurationError("n_grid must be at least 4")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SimulatedDataset:
    data: FunctionalDataset
    true_beta: Optional[np.ndarray]
    outlier_indices: np.ndarray
    config: SimConfig

    @property
    def grid(self) -> SamplingGrid:
        return self.data.grid

    def subset(self, index) -> "SimulatedDataset":
        index = np.asarray(index)
        pos = {int(j): i for i, j in enumerate(index)}
        outliers = np.array(sorted(pos[int(j)] for j in self.outlier_indices if int(j) in pos), dtype=int)
        return SimulatedDataset(self.data.subset(index), self.true_beta, outliers, self.config)


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & (2**64 - 1), stream])


def true_beta_case1(t) -> np.ndarray:
    return np.sin(np.asarray(t, dtype=float) * np.pi / 3.0)


def true_beta_out_case1(t) -> np.ndarray:
    return 2.0 * np.sin(4.0 * np.asarray(t, dtype=float) * np.pi / 3.0)


def h1(t) -> np.ndarray:
    return np.maximum(6.0 - np.abs(np.asarray(t, dtype=float) - 11.0), 0.0)


def h2(t) -> np.ndarray:
    return h1(np.asarray(t, dtype=float) - 4.0)


def h3(t) -> np.ndarray:
    return h1(np.asarray(t, dtype=float) + 4.0)


def h4(t) -> np.ndarray:
    return h1(np.asarray(t, dtype=float) + 50.0)


def _case1_curves(rng, n, grid, u_high):
    basis = build_bspline_basis(CASE1_DOMAIN, CASE1_N_BASIS, 4)
    U = rng.uniform(0.0, u_high, size=(CASE1_N_BASIS, CASE1_N_BASIS))
    Z = rng.standard_normal((n, CASE1_N_BASIS))
    return (Z @ U) @ basis(grid.points).T


def _case1_labels(rng, X, grid, beta, mode):
    l = np.trapezoid(X * beta, grid.points, axis=1)
    if mode == "threshold":
        return (l > 0).astype(int)
    return (rng.random(X.shape[0]) < logistic(l)).astype(int)


def _case2_curves(rng, labels, grid, contaminated=False):
    t = grid.points
    u = rng.uniform(0.0, 1.0, size=(labels.size, 1))
    other = np.where(labels[:, None] == 1, h3(t)[None, :], h2(t)[None, :])
    if contaminated:
        noise = rng.normal(5.0, 1.0, size=(labels.size, t.size))
        return u * h4(t)[None, :] + (1.0 - u) * other + noise
    noise = rng.standard_normal((labels.size, t.size))
    return u * h1(t)[None, :] + (1.0 - u) * other + noise


def _select_outliers(rng, y, count, stratified):
    if count == 0:
        return np.zeros(0, dtype=int)
    if not stratified:
        return np.sort(rng.choice(y.size, size=count, replace=False))
    ones = np.flatnonzero(y == 1)
    zeros = np.flatnonzero(y == 0)
    k1 = int(round(count * ones.size / y.size))
    k1 = min(max(k1, count - zeros.size), ones.size)
    k0 = count - k1
    picked = np.concatenate(
        [rng.choice(ones, size=k1, replace=False), rng.choice(zeros, size=k0, replace=False)]
    )
    return np.sort(picked.astype(int))


def contaminate(ds: SimulatedDataset, rate: float, rng: np.random.Generator) -> SimulatedDataset:
    """Replace ``round(rate * n)`` rows by outliers and flip their labels.

    Case 1 draws the rows stratified by class and regenerates them with
    ``U ~ uniform[0, 5]``; their labels are the flip of a Bernoulli draw from
    ``logistic(int X beta_out)``. Case 2 draws rows uniformly, regenerates them
    with the shifted-off bump ``h4`` and ``N(5, 1)`` noise, and flips labels.
    """
    if not 0 <= rate < 1:
        raise ConfigurationError("contamination rate must lie in [0, 1)")
    y = ds.data.labels.copy()
    X = ds.data.values.copy()
    grid = ds.grid
    count = int(round(rate * y.size))
    case = ds.config.case
    idx = _select_outliers(rng, y, count, stratified=case == "case1")
    if idx.size:
        if case == "case1":
            X_out = _case1_curves(rng, idx.size, grid, 5.0)
            y_draw = _case1_labels(rng, X_out, grid, true_beta_out_case1(grid.points), ds.config.label_mode)
            X[idx] = X_out
            y[idx] = 1 - y_draw
        else:
            X[idx] = _case2_curves(rng, y[idx], grid, contaminated=True)
            y[idx] = 1 - y[idx]
    outliers = np.union1d(ds.outlier_indices, idx).astype(int)
    return SimulatedDataset(FunctionalDataset(X, grid, y), ds.true_beta, outliers, ds.config)


def generate_case1(config: SimConfig, contaminate_now: bool = True) -> SimulatedDataset:
    if config.case != "case1":
        config = replace(config, case="case1", n_grid=None)
    rng = _rng(config.seed, _STREAM_DATA)
    grid = SamplingGrid.uniform(*CASE1_DOMAIN, config.n_grid)
    beta = true_beta_case1(grid.points)
    X = _case1_curves(rng, config.n, grid, 1.0)
    y = _case1_labels(rng, X, grid, beta, config.label_mode)
    ds = SimulatedDataset(FunctionalDataset(X, grid, y), beta, np.zeros(0, dtype=int), config)
    if contaminate_now and config.contamination_rate > 0:
        ds = contaminate(ds, config.contamination_rate, _rng(config.seed, _STREAM_CONTAMINATION))
    return ds


def generate_case2(config: SimConfig, contaminate_now: bool = True) -> SimulatedDataset:
    if config.case != "case2":
        config = replace(config, case="case2", n_grid=None)
    rng = _rng(config.seed, _STREAM_DATA)
    grid = SamplingGrid.uniform(*CASE2_DOMAIN, config.n_grid)
    n0 = config.n // 2
    y = np.concatenate([np.zeros(n0, dtype=int), np.ones(config.n - n0, dtype=int)])
    y = y[rng.permutation(config.n)]
    X = _case2_curves(rng, y, grid)
    ds = SimulatedDataset(FunctionalDataset(X, grid, y), None, np.zeros(0, dtype=int), config)
    if contaminate_now and config.contamination_rate > 0:
        ds = contaminate(ds, config.contamination_rate, _rng(config.seed, _STREAM_CONTAMINATION))
    return ds


def generate(config: SimConfig, contaminate_now: bool = True) -> SimulatedDataset:
    if config.case == "case1":
        return generate_case1(config, contaminate_now)
    return generate_case2(config, contaminate_now)


def train_test_split(
    ds: SimulatedDataset,
    n_train: int,
    n_test: int,
    seed: Optional[int] = None,
    rate: Optional[float] = None,
) -> Tuple[SimulatedDataset, SimulatedDataset]:
    """Split a clean dataset, then contaminate the training part only.

    ``rate`` defaults to ``ds.config.contamination_rate``; the number of
    contaminated training rows is ``round(rate * n_train)``.
    """
    if n_train < 1 or n_test < 1 or n_train + n_test > ds.data.n:
        raise ConfigurationError(f"cannot split {ds.data.n} rows into {n_train} + {n_test}")
    if ds.outlier_indices.size:
        raise ConfigurationError("two-phase splitting needs a clean dataset (generate with contaminate_now=False)")
    seed = ds.config.seed if seed is None else seed
    rate = ds.config.contamination_rate if rate is None else rate
    perm = _rng(seed, _STREAM_SPLIT).permutation(ds.data.n)
    train = ds.subset(np.sort(perm[:n_train]))
    test = ds.subset(np.sort(perm[n_train : n_train + n_test]))
    if rate > 0:
        train = contaminate(train, rate, _rng(seed, _STREAM_CONTAMINATION))
    return train, test
