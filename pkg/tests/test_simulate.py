import numpy as np
import pytest
from scipy.special import expit

from flogr.exceptions import ConfigurationError
from flogr.simulate import (
    SimConfig,
    generate,
    generate_case1,
    generate_case2,
    h1,
    h2,
    h3,
    h4,
    train_test_split,
    true_beta_case1,
    true_beta_out_case1,
)


def test_shape_functions():
    assert h1(11.0) == 6 and h1(5.0) == 0 and h1(17.0) == 0
    assert h2(15.0) == 6 and h3(7.0) == 6
    assert np.all(h4(np.linspace(1, 21, 101)) == 0)
    assert true_beta_case1(0.0) == 0
    assert abs(true_beta_case1(1.5) - 1) < 1e-15
    assert abs(true_beta_case1(3.0)) < 1e-15
    assert true_beta_out_case1(0.0) == 0


def test_case1_layout():
    ds = generate_case1(SimConfig("case1", 120, 0.0, 1))
    assert ds.data.values.shape == (120, 256)
    assert ds.grid.domain == (0.0, 10.0)
    assert ds.outlier_indices.size == 0
    assert np.array_equal(ds.true_beta, true_beta_case1(ds.grid.points))
    assert set(np.unique(ds.data.labels)) <= {0, 1}


def test_case2_layout_and_balance():
    for n in (100, 101):
        ds = generate_case2(SimConfig("case2", n, 0.0, 2))
        assert ds.data.values.shape == (n, 101)
        assert ds.grid.domain == (1.0, 21.0)
        assert ds.true_beta is None
        assert sorted(np.bincount(ds.data.labels).tolist()) == sorted([n // 2, n - n // 2])


@pytest.mark.parametrize("case", ["case1", "case2"])
def test_determinism(case):
    cfg = SimConfig(case, 200, 0.1, 77)
    a, b = generate(cfg), generate(cfg)
    assert np.array_equal(a.data.values, b.data.values)
    assert np.array_equal(a.data.labels, b.data.labels)
    assert np.array_equal(a.outlier_indices, b.outlier_indices)
    c = generate(SimConfig(case, 200, 0.1, 78))
    assert not np.array_equal(a.data.values, c.data.values)


@pytest.mark.parametrize("case", ["case1", "case2"])
@pytest.mark.parametrize("rate", [0.0, 0.01, 0.05, 0.1])
def test_split_then_contaminate(case, rate):
    clean = generate(SimConfig(case, 1000, rate, 5), contaminate_now=False)
    train, test = train_test_split(clean, 700, 300, 5, rate)
    assert (train.data.n, test.data.n) == (700, 300)
    assert train.outlier_indices.size == round(rate * 700)
    assert test.outlier_indices.size == 0
    again = train_test_split(clean, 700, 300, 5, rate)
    assert np.array_equal(again[0].data.values, train.data.values)


def test_test_partition_is_clean_rows():
    clean = generate(SimConfig("case1", 300, 0.1, 6), contaminate_now=False)
    train, test = train_test_split(clean, 210, 90, 6)
    rows = {tuple(np.round(r, 12)) for r in clean.data.values}
    assert all(tuple(np.round(r, 12)) in rows for r in test.data.values)
    inliers = np.setdiff1d(np.arange(210), train.outlier_indices)
    assert all(tuple(np.round(r, 12)) in rows for r in train.data.values[inliers])
    assert not any(tuple(np.round(r, 12)) in rows for r in train.data.values[train.outlier_indices])


def test_split_errors():
    clean = generate(SimConfig("case1", 100, 0.0, 1))
    with pytest.raises(ConfigurationError):
        train_test_split(clean, 80, 30)
    dirty = generate(SimConfig("case1", 100, 0.1, 1))
    with pytest.raises(ConfigurationError):
        train_test_split(dirty, 50, 50)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        SimConfig("case3")
    with pytest.raises(ConfigurationError):
        SimConfig("case1", n=5)
    with pytest.raises(ConfigurationError):
        SimConfig("case1", contamination_rate=1.0)
    assert SimConfig("case2").n_grid == 101


def test_case1_contamination_amplitude_and_strata():
    ds = generate(SimConfig("case1", 1000, 0.1, 8))
    out = ds.outlier_indices
    assert out.size == 100
    clean = np.setdiff1d(np.arange(1000), out)
    sup = np.abs(ds.data.values).max(axis=1)
    assert sup[out].mean() > 2 * sup[clean].mean()
    base = generate(SimConfig("case1", 1000, 0.0, 8))
    # stratified: outliers drawn from each class in proportion
    frac1 = base.data.labels[out].mean()
    assert abs(frac1 - base.data.labels.mean()) < 0.02


def test_case2_contamination_level_and_flip():
    base = generate(SimConfig("case2", 1000, 0.0, 9))
    ds = generate(SimConfig("case2", 1000, 0.1, 9))
    out = ds.outlier_indices
    assert out.size == 100
    assert np.all(ds.data.labels[out] == 1 - base.data.labels[out])
    t = ds.grid.points
    free = (h2(t) == 0) & (h3(t) == 0) & (h1(t) == 0)
    assert free.any()
    shift = ds.data.values[np.ix_(out, free)].mean() - base.data.values[:, free].mean()
    assert abs(shift - 5) < 0.1


def test_case1_label_law():
    ds = generate(SimConfig("case1", 5000, 0.0, 10))
    l = np.trapezoid(ds.data.values * ds.true_beta, ds.grid.points, axis=1)
    edges = np.quantile(l, np.linspace(0, 1, 11))
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (l >= lo) & (l <= hi)
        expected = expit(l[sel]).mean()
        se = np.sqrt(expected * (1 - expected) / sel.sum())
        assert abs(ds.data.labels[sel].mean() - expected) <= 3 * se + 1e-12


def test_threshold_label_mode():
    ds = generate(SimConfig("case1", 300, 0.0, 11, label_mode="threshold"))
    l = np.trapezoid(ds.data.values * ds.true_beta, ds.grid.points, axis=1)
    assert np.array_equal(ds.data.labels, (l > 0).astype(int))


def test_subset_remaps_outliers():
    ds = generate(SimConfig("case2", 100, 0.1, 12))
    idx = np.arange(0, 100, 2)
    sub = ds.subset(idx)
    expected = [i for i, j in enumerate(idx) if j in set(ds.outlier_indices.tolist())]
    assert sub.outlier_indices.tolist() == expected
