import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from flogr.baselines import fit_fpc, fit_fpls, predict_fpc
from flogr.basis import FunctionalDataset, SamplingGrid
from flogr.exceptions import DataError
from flogr.io import load_model, read_curves, read_spectra, save_model, write_curves
from flogr.rfpls import fit_rfpls, predict


def small_dataset(labels=True):
    rng = np.random.default_rng(0)
    grid = SamplingGrid(np.array([0.0, 0.1, 0.35, 0.7, 1.0]))
    y = np.array([0, 1, 1]) if labels else None
    return FunctionalDataset(rng.normal(size=(3, 5)) / 3, grid, y)


def test_curve_round_trip(tmp_path):
    data = small_dataset()
    path = tmp_path / "c.csv"
    write_curves(path, data, ids=["a", "b", "c"])
    text = path.read_text().splitlines()
    assert text[0].startswith("#grid:0.0,0.1,0.35")
    assert text[1] == "id,t_1,t_2,t_3,t_4,t_5,label"
    back, ids = read_curves(path)
    assert ids == ["a", "b", "c"]
    assert np.array_equal(back.values, data.values)
    assert np.array_equal(back.grid.points, data.grid.points)
    assert np.array_equal(back.labels, data.labels)
    again = tmp_path / "d.csv"
    write_curves(again, back, ids)
    assert again.read_bytes() == path.read_bytes()


def test_curves_without_labels(tmp_path):
    path = tmp_path / "c.csv"
    write_curves(path, small_dataset(labels=False))
    back, _ = read_curves(path)
    assert back.labels is None


@pytest.mark.parametrize(
    "body, message",
    [
        ("id,t_1,t_2\n0,1.0,2.0\n", "first line"),
        ("#grid:0,1\nid,t_1,t_2\n0,1.0,x\n", "row 3, column 3"),
        ("#grid:0,1\nid,t_1,t_2\n0,1.0\n", "row 3 has 2 fields"),
        ("#grid:0,1\nid,t_1,t_2,label\n0,1.0,2.0,7\n", "label"),
        ("#grid:0,1\nid,t_1,t_2\n0,1.0,nan\n", "non-finite"),
    ],
)
def test_read_curves_errors(tmp_path, body, message):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(DataError, match=message):
        read_curves(path)


def write_raw(path, header, rows):
    path.write_text("\n".join([",".join(header)] + [",".join(r) for r in rows]) + "\n")


def test_read_spectra(tmp_path):
    path = tmp_path / "raw.csv"
    write_raw(path, ["900", "901", "902", "class"], [["1", "2", "3", "Strawberry"], ["4", "5", "6", "NON-Strawberry"]])
    data, info = read_spectra(path)
    assert data.n == 2 and len(data.grid) == 3
    assert data.labels.tolist() == [1, 0]
    assert info["label_mapping"] == {"Strawberry": 1, "NON-Strawberry": 0}
    assert not info["reversed_grid"]


def test_read_spectra_decreasing_header(tmp_path):
    path = tmp_path / "raw.csv"
    write_raw(path, ["902", "901", "900", "class"], [["1", "2", "3", "strawberry"], ["4", "5", "6", "non-strawberry"]])
    data, info = read_spectra(path)
    assert info["reversed_grid"]
    assert data.grid.points.tolist() == [900.0, 901.0, 902.0]
    assert data.values[0].tolist() == [3.0, 2.0, 1.0]


@pytest.mark.parametrize(
    "header, rows, message",
    [
        (["900", "902", "901", "c"], [["1", "2", "3", "strawberry"]], "not monotone"),
        (["900", "901", "902", "c"], [["1", "", "3", "strawberry"]], "missing value at row 2, column 2"),
        (["900", "901", "902", "c"], [["1", "abc", "3", "strawberry"]], "'abc' at row 2, column 2"),
        (["900", "901", "902", "c"], [["1", "2", "3", "apple"]], "unknown label 'apple' at row 2"),
        (["900", "901", "902", "c"], [["1", "2", "strawberry"]], "row 2 has 3 fields"),
    ],
)
def test_read_spectra_errors(tmp_path, header, rows, message):
    path = tmp_path / "raw.csv"
    write_raw(path, header, rows)
    with pytest.raises(DataError, match=message):
        read_spectra(path)


def test_read_spectra_any_negative(tmp_path):
    path = tmp_path / "raw.csv"
    write_raw(path, ["900", "901", "902", "c"], [["1", "2", "3", "strawberry"], ["1", "2", "3", "apple"]])
    data, _ = read_spectra(path, any_negative=True)
    assert data.labels.tolist() == [1, 0]


@pytest.mark.parametrize("kind", ["rfpls", "fpls", "fpc"])
def test_model_round_trip(tmp_path, case1_clean, kind):
    d = case1_clean
    fit = {"rfpls": fit_rfpls, "fpls": fit_fpls, "fpc": fit_fpc}[kind]
    model = fit(d.A, d.psi, d.y, d.basis)
    path = tmp_path / "m.json"
    save_model(path, model, d.train.grid)
    back, grid = load_model(path)
    assert back.kind == kind
    assert grid.same_as(d.train.grid)
    assert np.array_equal(back.beta_coefs, model.beta_coefs)
    pred = predict_fpc if kind == "fpc" else predict
    assert_allclose(pred(back, d.A_test, d.psi), pred(model, d.A_test, d.psi), rtol=0, atol=0)
    path2 = tmp_path / "m2.json"
    save_model(path2, back, grid)
    assert path2.read_bytes() == path.read_bytes()


def test_model_version_check(tmp_path, case1_clean):
    d = case1_clean
    path = tmp_path / "m.json"
    save_model(path, fit_fpc(d.A, d.psi, d.y, d.basis), d.train.grid)
    tree = json.loads(path.read_text())
    tree["format_version"] = 99
    path.write_text(json.dumps(tree))
    with pytest.raises(DataError, match="version"):
        load_model(path)
