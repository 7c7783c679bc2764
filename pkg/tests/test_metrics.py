import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from flogr.basis import SamplingGrid
from flogr.exceptions import ConfigurationError, DataError
from flogr.metrics import auc, ccr, confusion, evaluate, imse


def brute_ccr(y, p, cut=0.5):
    hits = 0
    for yi, pi in zip(y, p):
        hits += int((1 if pi >= cut else 0) == yi)
    return hits / len(y)


def test_ccr_examples():
    y = np.array([0, 1, 1, 0, 1])
    assert ccr(y, y.astype(float)) == 1.0
    assert ccr(y, np.full(5, 0.5)) == y.mean()
    rng = np.random.default_rng(0)
    for _ in range(20):
        yy = rng.integers(0, 2, 40)
        pp = rng.random(40)
        assert ccr(yy, pp) == brute_ccr(yy, pp)
        assert ccr(yy, pp, 0.3) == brute_ccr(yy, pp, 0.3)


def test_ccr_plus_error_rate_is_one():
    rng = np.random.default_rng(1)
    y, p = rng.integers(0, 2, 100), rng.random(100)
    cm = confusion(y, p)
    assert cm.sum() == 100
    err = (cm[0, 1] + cm[1, 0]) / 100
    assert ccr(y, p) + err == 1.0
    assert ccr(y, p) == (cm[0, 0] + cm[1, 1]) / 100


def test_metric_errors():
    with pytest.raises(DataError):
        ccr(np.array([]), np.array([]))
    with pytest.raises(DataError):
        auc(np.ones(4, dtype=int), np.random.default_rng(0).random(4))
    with pytest.raises(DataError):
        auc(np.array([0, 1]), np.array([0.2, 0.3, 0.4]))
    with pytest.raises(ConfigurationError):
        ccr(np.array([0, 1]), np.array([0.2, 0.3]), cut=1.0)


def test_auc_examples():
    y = np.array([0, 0, 1, 1])
    assert auc(y, np.array([0.1, 0.2, 0.8, 0.9])) == 1.0
    assert auc(y, np.full(4, 0.3)) == 0.5
    assert auc(y, np.array([0.9, 0.8, 0.2, 0.1])) == 0.0


def test_auc_matches_brute_force_exactly():
    rng = np.random.default_rng(2)
    for i in range(100):
        y = rng.integers(0, 2, 50)
        y[0], y[1] = 0, 1
        # half the vectors carry ties
        s = rng.random(50) if i % 2 else np.round(rng.random(50), 1)
        assert auc(y, s) == oracles.brute_auc(y, s)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 1), st.integers(1, 999)), min_size=2, max_size=60))
def test_auc_monotone_invariance(pairs):
    # a lattice of scores keeps both transforms strictly increasing in floating point
    y = np.array([a for a, _ in pairs])
    p = np.array([b for _, b in pairs]) / 1000.0
    if y.min() == y.max():
        return
    base = auc(y, p)
    assert auc(y, np.log(p / (1 - p))) == base
    assert auc(y, np.exp(p)) == base
    assert base == oracles.brute_auc(y, p)


def test_imse_examples():
    g = SamplingGrid.uniform(0, 10, 256)
    b = np.sin(g.points * np.pi / 3)
    assert imse(b, b, g) == 0.0
    assert abs(imse(np.zeros(256), np.ones(256), g) - 10) < 1e-12
    exact = 5 - 3 / (4 * np.pi) * np.sin(20 * np.pi / 3)
    assert abs(imse(b, np.zeros(256), g) - exact) < 1e-3
    with pytest.raises(DataError):
        imse(b, b[:-1], g)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_imse_nonnegative_symmetric(seed):
    rng = np.random.default_rng(seed)
    g = SamplingGrid.uniform(0, 1, 50)
    a, b = rng.normal(size=50), rng.normal(size=50)
    assert imse(a, b, g) >= 0
    assert imse(a, b, g) == imse(b, a, g)


def test_evaluate_report():
    y = np.array([0, 1, 1, 0, 1, 0])
    p = np.array([0.2, 0.7, 0.4, 0.6, 0.9, 0.1])
    rep = evaluate(y, p)
    assert rep.n == 6
    assert rep.confusion == [[2, 1], [1, 2]]
    assert rep.ccr == 4 / 6
    assert rep.auc == oracles.brute_auc(y, p)
    assert set(rep.to_dict()) == {"ccr", "auc", "confusion", "n"}
