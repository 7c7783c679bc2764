import doctest

import numpy as np
import pytest
from numpy.testing import assert_allclose
from sklearn.base import clone
from sklearn.model_selection import cross_val_score
from sklearn.pipeline import make_pipeline
from sklearn.linear_model import LogisticRegression

import flogr.estimators as est
from flogr.baselines import fit_fpls, predict_fpls
from flogr.basis import fit_coefficients, gram_matrix
from flogr.estimators import BSplineSmoother, FPCClassifier, FPLSClassifier, RobustFPLSClassifier
from flogr.exceptions import DataError
from flogr.rfpls import fit_rfpls, predict


def test_module_doctest():
    result = doctest.testmod(est)
    assert result.attempted > 0 and result.failed == 0


@pytest.mark.parametrize("cls", [RobustFPLSClassifier, FPLSClassifier, FPCClassifier])
def test_clone_and_params(cls):
    clf = cls(n_basis=12)
    params = clf.get_params()
    assert params["n_basis"] == 12
    twin = clone(clf)
    assert twin.get_params() == params
    clf.set_params(n_basis=10)
    assert clf.n_basis == 10


@pytest.mark.parametrize("cls", [RobustFPLSClassifier, FPLSClassifier, FPCClassifier])
def test_fit_predict_shapes(cls, case1_clean):
    d = case1_clean
    grid = d.train.data.grid.points
    clf = cls(grid=grid).fit(d.train.data.values, np.where(d.y == 1, "pos", "neg"))
    proba = clf.predict_proba(d.test.data.values)
    assert proba.shape == (d.test.data.n, 2)
    assert_allclose(proba.sum(axis=1), 1.0)
    labels = clf.predict(d.test.data.values)
    assert set(labels) <= {"neg", "pos"}
    assert np.array_equal(labels == "pos", proba[:, 1] >= 0.5)
    assert clf.transform(d.test.data.values).shape == (d.test.data.n, clf.n_components_)
    assert clf.coef_function().shape == grid.shape


def test_matches_functional_api(case1_dirty):
    d = case1_dirty
    clf = RobustFPLSClassifier(grid=d.train.data.grid.points).fit(d.train.data.values, d.y)
    model = fit_rfpls(d.A, d.psi, d.y, d.basis)
    assert_allclose(clf.coef_, model.beta_coefs, atol=1e-12)
    assert_allclose(clf.predict_proba(d.test.data.values)[:, 1], predict(model, d.A_test, d.psi), atol=1e-12)
    assert clf.obs_weights_.shape == (d.train.data.n,)

    fp = FPLSClassifier(grid=d.train.data.grid.points).fit(d.train.data.values, d.y)
    ref = fit_fpls(d.A, d.psi, d.y, d.basis)
    assert_allclose(fp.predict_proba(d.test.data.values)[:, 1], predict_fpls(ref, d.A_test, d.psi), atol=1e-12)


def test_smoother_in_pipeline(case1_clean):
    d = case1_clean
    smoother = BSplineSmoother(grid=d.train.data.grid.points).fit(d.train.data.values)
    assert_allclose(smoother.transform(d.train.data.values), d.A)
    pipe = make_pipeline(BSplineSmoother(grid=d.train.data.grid.points), LogisticRegression(max_iter=2000))
    pipe.fit(d.train.data.values, d.y)
    assert pipe.predict(d.test.data.values).shape == (d.test.data.n,)


def test_cross_validation_runs(case1_clean):
    d = case1_clean
    scores = cross_val_score(FPCClassifier(grid=d.train.data.grid.points), d.train.data.values, d.y, cv=3)
    assert scores.shape == (3,) and np.all((scores >= 0) & (scores <= 1))


def test_input_errors(case1_clean):
    d = case1_clean
    with pytest.raises(ValueError, match="two classes"):
        FPCClassifier().fit(d.train.data.values, np.zeros(d.train.data.n))
    with pytest.raises(DataError, match="grid"):
        FPCClassifier(grid=np.linspace(0, 1, 5)).fit(d.train.data.values, d.y)
    clf = FPCClassifier(grid=d.train.data.grid.points).fit(d.train.data.values, d.y)
    with pytest.raises(ValueError, match="columns"):
        clf.predict(d.test.data.values[:, :-1])
