"""File formats: curve CSVs, raw spectral CSVs and JSON model files.

Curve CSV layout::

    #grid:t_1,t_2,...,t_m
    id,t_1,...,t_m[,label]
    0,x_01,...,x_0m[,y_0]
    ...

Values are written with ``repr`` so that a read/write cycle is lossless.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path
from typing import Iterable, Optional, Tuple

import numpy as np

from flogr.baselines import FpcModel
from flogr.basis import BSplineBasis, FunctionalDataset, SamplingGrid
from flogr.exceptions import DataError
from flogr.rfpls import RfplsConfig, RfplsModel, Scaler

FORMAT_VERSION = 1
GRID_PREFIX = "#grid:"


def _fmt(x: float) -> str:
    return repr(float(x))


def write_curves(path, data: FunctionalDataset, ids: Optional[Iterable] = None) -> None:
    path = Path(path)
    ids = list(range(data.n)) if ids is None else list(ids)
    m = len(data.grid)
    with path.open("w", newline="") as fh:
        fh.write(GRID_PREFIX + ",".join(_fmt(t) for t in data.grid.points) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        header = ["id"] + [f"t_{j + 1}" for j in range(m)]
        if data.labels is not None:
            header.append("label")
        writer.writerow(header)
        for i in range(data.n):
            row = [str(ids[i])] + [_fmt(v) for v in data.values[i]]
            if data.labels is not None:
                row.append(str(int(data.labels[i])))
            writer.writerow(row)


def _parse_float(text: str, row: int, col: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise DataError(f"non-numeric value {text!r} at row {row}, column {col}") from None
    if not math.isfinite(v):
        raise DataError(f"non-finite value {text!r} at row {row}, column {col}")
    return v


def read_curves(path) -> Tuple[FunctionalDataset, list]:
    """Read a curve CSV; returns the dataset and the list of ids."""
    path = Path(path)
    with path.open(newline="") as fh:
        first = fh.readline().rstrip("\r\n")
        if not first.startswith(GRID_PREFIX):
            raise DataError(f"{path}: first line must start with {GRID_PREFIX!r}")
        grid_vals = [_parse_float(t, 1, j + 1) for j, t in enumerate(first[len(GRID_PREFIX):].split(","))]
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[0] != "id":
            raise DataError(f"{path}: missing 'id,...' header line")
        m = len(grid_vals)
        has_label = header[-1] == "label"
        if len(header) != m + 1 + int(has_label):
            raise DataError(f"{path}: header has {len(header)} columns, grid has {m} points")
        ids, rows, labels = [], [], []
        for r, rec in enumerate(reader, start=3):
            if not rec:
                continue
            if len(rec) != len(header):
                raise DataError(f"{path}: row {r} has {len(rec)} fields, expected {len(header)}")
            ids.append(rec[0])
            rows.append([_parse_float(v, r, c + 2) for c, v in enumerate(rec[1 : m + 1])])
            if has_label:
                lab = rec[-1].strip()
                if lab not in ("0", "1"):
                    raise DataError(f"{path}: label {lab!r} at row {r} is not 0 or 1")
                labels.append(int(lab))
    if not rows:
        raise DataError(f"{path}: no curves")
    grid = SamplingGrid(np.array(grid_vals))
    data = FunctionalDataset(np.array(rows), grid, np.array(labels) if has_label else None)
    return data, ids


def read_spectra(path, positive=("strawberry",), negative=("non-strawberry",), any_negative=False):
    """Ingest a raw spectral CSV.

    The header row holds the wavenumbers followed by a label column name; each
    further row holds one spectrum and its label string. Labels are matched
    case-insensitively against ``positive`` (class 1) and ``negative``
    (class 0); with ``any_negative`` every non-positive label is class 0. A
    strictly decreasing header is reversed into increasing order.

    Returns ``(dataset, info)`` where ``info`` records the label mapping.
    """
    path = Path(path)
    pos = {s.strip().lower() for s in positive}
    neg = {s.strip().lower() for s in negative}
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 3:
            raise DataError(f"{path}: missing header row")
        waves = [_parse_float(h, 1, j + 1) for j, h in enumerate(header[:-1])]
        diffs = np.diff(waves)
        if np.all(diffs > 0):
            reverse = False
        elif np.all(diffs < 0):
            reverse = True
        else:
            bad = int(np.flatnonzero(diffs <= 0)[0]) if np.any(diffs > 0) else int(np.flatnonzero(diffs >= 0)[0])
            raise DataError(f"{path}: header wavenumbers are not monotone at column {bad + 2}")
        m = len(waves)
        values, labels, raw_labels = [], [], {}
        for r, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != m + 1:
                raise DataError(f"{path}: row {r} has {len(rec)} fields, expected {m + 1}")
            row = []
            for c, v in enumerate(rec[:-1], start=1):
                if not v.strip():
                    raise DataError(f"{path}: missing value at row {r}, column {c}")
                row.append(_parse_float(v, r, c))
            lab = rec[-1].strip()
            key = lab.lower()
            if key in pos:
                y = 1
            elif key in neg or any_negative:
                y = 0
            else:
                raise DataError(f"{path}: unknown label {lab!r} at row {r}, column {m + 1}")
            raw_labels.setdefault(lab, y)
            values.append(row)
            labels.append(y)
    if not values:
        raise DataError(f"{path}: no spectra")
    X = np.array(values)
    grid_pts = np.array(waves)
    if reverse:
        X = X[:, ::-1]
        grid_pts = grid_pts[::-1]
    data = FunctionalDataset(X, SamplingGrid(grid_pts), np.array(labels))
    info = {"label_mapping": raw_labels, "reversed_grid": reverse, "positive_class": sorted(pos)}
    return data, info


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _arr(a):
    return None if a is None else np.asarray(a, dtype=float).tolist()


def model_to_dict(model, grid: Optional[SamplingGrid] = None) -> dict:
    """JSON-compatible tree describing a fitted RFPLS, FPLS or FPC model."""
    out = {
        "format_version": FORMAT_VERSION,
        "model_kind": model.kind,
        "basis": model.basis.to_dict(),
        "alpha_hat": float(model.alpha_hat),
        "beta_coefs": _arr(model.beta_coefs),
        "n_components": int(model.n_components),
    }
    if grid is not None:
        out["grid"] = {"points": _arr(grid.points), "domain": list(grid.domain)}
    if isinstance(model, FpcModel):
        out.update(
            {
                "component_basis": _arr(model.component_basis),
                "scores_mean": _arr(model.scores_mean),
                "logit_coefs": _arr(model.logit_coefs),
                "explained_variance": _arr(model.explained_variance),
                "all_variance": _arr(model.all_variance),
                "diagnostics": {k: v for k, v in model.diagnostics.items()},
            }
        )
    else:
        out.update(
            {
                "V": _arr(model.V),
                "theta": _arr(model.theta),
                "theta_se": _arr(model.theta_se),
                "alpha_std": float(model.alpha_std),
                "scaler": {"kind": model.scaler.kind, "center": _arr(model.scaler.center), "scale": _arr(model.scaler.scale)},
                "obs_weights": _arr(model.obs_weights),
                "stop_reason": model.stop_reason,
                "fallback": bool(model.fallback),
                "config": model.config.to_dict(),
            }
        )
    return out


def model_from_dict(d: dict):
    if d.get("format_version") != FORMAT_VERSION:
        raise DataError(f"unsupported model format version {d.get('format_version')!r}")
    basis = BSplineBasis.from_dict(d["basis"])
    kind = d["model_kind"]
    if kind == "fpc":
        return FpcModel(
            component_basis=np.array(d["component_basis"]),
            scores_mean=np.array(d["scores_mean"]),
            logit_coefs=np.array(d["logit_coefs"]),
            beta_coefs=np.array(d["beta_coefs"]),
            explained_variance=np.array(d["explained_variance"]),
            all_variance=np.array(d["all_variance"]),
            alpha_hat=float(d["alpha_hat"]),
            basis=basis,
            n_components=int(d["n_components"]),
            diagnostics=dict(d.get("diagnostics", {})),
        )
    if kind not in ("rfpls", "fpls"):
        raise DataError(f"unknown model kind {kind!r}")
    sc = d["scaler"]
    V = np.array(d["V"], dtype=float).reshape(basis.n_basis, int(d["n_components"]))
    return RfplsModel(
        V=V,
        theta=np.array(d["theta"], dtype=float),
        alpha_hat=float(d["alpha_hat"]),
        beta_coefs=np.array(d["beta_coefs"], dtype=float),
        scaler=Scaler(np.array(sc["center"]), np.array(sc["scale"]), sc["kind"]),
        obs_weights=np.array(d["obs_weights"], dtype=float),
        basis=basis,
        n_components=int(d["n_components"]),
        stop_reason=d["stop_reason"],
        alpha_std=float(d["alpha_std"]),
        fallback=bool(d["fallback"]),
        config=RfplsConfig.from_dict(d["config"]),
        theta_se=None if d.get("theta_se") is None else np.array(d["theta_se"]),
        kind=kind,
    )


def model_grid(d: dict) -> Optional[SamplingGrid]:
    g = d.get("grid")
    if g is None:
        return None
    return SamplingGrid(np.array(g["points"]), tuple(g["domain"]))


def save_model(path, model, grid: Optional[SamplingGrid] = None) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model, grid), indent=1, sort_keys=True) + "\n")


def load_model(path):
    """Returns ``(model, training_grid_or_None)``."""
    d = json.loads(Path(path).read_text())
    return model_from_dict(d), model_grid(d)
