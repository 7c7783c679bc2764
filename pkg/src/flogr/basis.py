"""B-spline bases, basis-expansion coefficients and quadrature on curves.

Curves are stored as an ``n x m`` matrix of values on a shared sampling grid.
Everything downstream works with the ``n x K`` coefficient matrix ``A`` of a
least-squares projection onto a B-spline basis and with the Gram matrix
``Psi[j, k] = int phi_j(t) phi_k(t) dt``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.interpolate import BSpline

from flogr.exceptions import ConfigurationError, DataError, DomainError, SingularFitError

# tolerance for grid points that sit on the domain boundary up to rounding
_DOMAIN_EPS = 1e-9


@dataclass(frozen=True)
class SamplingGrid:
    """Ordered observation points ``t_1 < ... < t_m`` inside ``domain``."""

    points: np.ndarray
    domain: Tuple[float, float] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).ravel()
        if pts.size < 2:
            raise DataError("a sampling grid needs at least 2 points")
        if not np.all(np.isfinite(pts)):
            raise DataError("sampling grid contains non-finite points")
        if np.any(np.diff(pts) <= 0):
            raise DataError("sampling grid must be strictly increasing")
        dom = self.domain
        if dom is None:
            dom = (float(pts[0]), float(pts[-1]))
        dom = (float(dom[0]), float(dom[1]))
        if not dom[0] < dom[1]:
            raise DataError(f"degenerate domain {dom}")
        if pts[0] < dom[0] - _DOMAIN_EPS or pts[-1] > dom[1] + _DOMAIN_EPS:
            raise DomainError(f"grid points fall outside domain {dom}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "domain", dom)

    @classmethod
    def uniform(cls, start: float, stop: float, num: int) -> "SamplingGrid":
        return cls(np.linspace(start, stop, num), (start, stop))

    def __len__(self):
        return self.points.size

    def same_as(self, other: "SamplingGrid", atol: float = 1e-9) -> bool:
        return (
            len(self) == len(other)
            and np.allclose(self.points, other.points, rtol=0, atol=atol)
            and np.allclose(self.domain, other.domain, rtol=0, atol=atol)
        )


@dataclass(frozen=True)
class FunctionalDataset:
    """``n`` curves sampled on a common grid, with optional binary labels."""

    values: np.ndarray
    grid: SamplingGrid
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        X = np.asarray(self.values, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2:
            raise DataError("curve values must be a 2-d array")
        if X.shape[1] != len(self.grid):
            raise DataError(
                f"curve matrix has {X.shape[1]} columns but the grid has {len(self.grid)} points"
            )
        bad = np.argwhere(~np.isfinite(X))
        if bad.size:
            i, j = bad[0]
            raise DataError(f"non-finite curve value at row {i}, column {j}")
        X.setflags(write=False)
        object.__setattr__(self, "values", X)
        if self.labels is not None:
            y = np.asarray(self.labels)
            if y.shape != (X.shape[0],):
                raise DataError("labels must be a vector with one entry per curve")
            if not np.all((y == 0) | (y == 1)):
                raise DataError("labels must contain only 0 and 1")
            y = y.astype(int)
            y.setflags(write=False)
            object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def subset(self, index) -> "FunctionalDataset":
        index = np.asarray(index)
        labels = None if self.labels is None else self.labels[index]
        return FunctionalDataset(self.values[index], self.grid, labels)


@dataclass(frozen=True)
class BSplineBasis:
    """B-spline basis of a given order with equally spaced interior knots.

    ``knots`` holds the interior knots only; the full knot vector repeats each
    domain endpoint ``order`` times.
    """

    order: int
    n_basis: int
    knots: np.ndarray
    domain: Tuple[float, float]
    _spline: BSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float).ravel()
        knots.setflags(write=False)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "domain", (float(self.domain[0]), float(self.domain[1])))
        if self.n_basis != knots.size + self.order:
            raise ConfigurationError("n_basis must equal the number of interior knots plus the order")
        full = self.knot_vector
        if np.any(np.diff(full) < 0):
            raise ConfigurationError("knot vector must be non-decreasing")
        spline = BSpline(full, np.eye(self.n_basis), self.order - 1, extrapolate=False)
        object.__setattr__(self, "_spline", spline)

    @property
    def knot_vector(self) -> np.ndarray:
        lo, hi = self.domain
        return np.concatenate([np.full(self.order, lo), self.knots, np.full(self.order, hi)])

    def __call__(self, t) -> np.ndarray:
        """Evaluate all basis functions; returns ``len(t) x K``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        lo, hi = self.domain
        if np.any(t < lo - _DOMAIN_EPS) or np.any(t > hi + _DOMAIN_EPS):
            raise DomainError(f"evaluation points outside basis domain {self.domain}")
        return self._spline(np.clip(t, lo, hi))

    def to_dict(self) -> dict:
        return {
            "order": int(self.order),
            "n_basis": int(self.n_basis),
            "knots": self.knots.tolist(),
            "domain": list(self.domain),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BSplineBasis":
        return cls(int(d["order"]), int(d["n_basis"]), np.asarray(d["knots"]), tuple(d["domain"]))


@dataclass(frozen=True)
class CoefficientFunction:
    """``beta(t) = sum_k coefs[k] * phi_k(t)``."""

    coefs: np.ndarray
    basis: BSplineBasis

    def __post_init__(self):
        c = np.asarray(self.coefs, dtype=float).ravel()
        if c.size != self.basis.n_basis:
            raise DataError(f"expected {self.basis.n_basis} coefficients, got {c.size}")
        object.__setattr__(self, "coefs", c)

    def __call__(self, t) -> np.ndarray:
        return self.basis(t) @ self.coefs


def build_bspline_basis(domain, n_basis: int, order: int = 4) -> BSplineBasis:
    """B-spline basis with ``n_basis - order`` equally spaced interior knots.

    >>> build_bspline_basis((0, 10), 13).knots.size
    9
    """
    lo, hi = float(domain[0]), float(domain[1])
    if not np.isfinite(lo) or not np.isfinite(hi) or not lo < hi:
        raise ConfigurationError(f"degenerate domain ({lo}, {hi})")
    if order < 1:
        raise ConfigurationError("order must be a positive integer")
    if n_basis < order:
        raise ConfigurationError(f"n_basis ({n_basis}) must be at least the order ({order})")
    n_interior = n_basis - order
    knots = np.linspace(lo, hi, n_interior + 2)[1:-1]
    return BSplineBasis(order, n_basis, knots, (lo, hi))


def evaluate_basis(basis: BSplineBasis, grid) -> np.ndarray:
    """``m x K`` matrix with entry ``(j, k) = phi_k(t_j)``."""
    points = grid.points if isinstance(grid, SamplingGrid) else grid
    return basis(points)


def fit_coefficients(dataset, basis: BSplineBasis, grid: Optional[SamplingGrid] = None) -> np.ndarray:
    """Least-squares basis coefficients for every curve.

    Parameters
    ----------
    dataset : FunctionalDataset or ndarray
        Curves; when a bare ``n x m`` array is given, ``grid`` is required.
    basis : BSplineBasis

    Returns
    -------
    ndarray of shape (n, K)
        Row ``i`` minimizes ``sum_j (X_i(t_j) - a_i' phi(t_j))^2``.
    """
    if isinstance(dataset, FunctionalDataset):
        X, grid = dataset.values, dataset.grid
    else:
        if grid is None:
            raise ConfigurationError("a sampling grid is required for raw curve arrays")
        X = np.atleast_2d(np.asarray(dataset, dtype=float))
        if X.shape[1] != len(grid):
            raise DataError("curve matrix columns do not match the grid length")
    Phi = evaluate_basis(basis, grid)
    m, K = Phi.shape
    if m < K:
        raise SingularFitError(f"{m} grid points cannot determine {K} basis coefficients")
    if np.linalg.matrix_rank(Phi) < K:
        raise SingularFitError("basis evaluation matrix is rank deficient on this grid")
    coef, *_ = np.linalg.lstsq(Phi, X.T, rcond=None)
    return coef.T


def _simpson_weights(a: float, b: float, panels: int) -> Tuple[np.ndarray, np.ndarray]:
    if panels % 2:
        panels += 1
    t = np.linspace(a, b, panels + 1)
    w = np.ones(panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return t, w * (b - a) / (3.0 * panels)


def gram_matrix(basis: BSplineBasis, resolution: Optional[int] = None) -> np.ndarray:
    """Inner-product matrix ``Psi`` of the basis by composite Simpson quadrature.

    ``resolution`` is the number of Simpson subintervals over the whole domain
    (rounded up to even); the default is ``10 * K * order``.
    """
    K = basis.n_basis
    if resolution is None:
        resolution = 10 * K * basis.order
    if resolution < 10 * K:
        raise ConfigurationError(f"resolution must be at least 10*K = {10 * K}")
    t, w = _simpson_weights(*basis.domain, int(resolution))
    Phi = basis(t)
    psi = (Phi * w[:, None]).T @ Phi
    return 0.5 * (psi + psi.T)


def integrate_product(f, g, grid) -> float:
    """Trapezoid approximation of ``int f(t) g(t) dt`` on the observation grid."""
    points = grid.points if isinstance(grid, SamplingGrid) else np.asarray(grid, dtype=float)
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape[-1] != points.size or g.shape[-1] != points.size:
        raise DataError(
            f"function values of length {f.shape[-1]} and {g.shape[-1]} "
            f"do not match a grid of {points.size} points"
        )
    return np.trapezoid(f * g, points, axis=-1)


def evaluate_coef_function(cf: CoefficientFunction, grid) -> np.ndarray:
    points = grid.points if isinstance(grid, SamplingGrid) else grid
    return cf(points)
