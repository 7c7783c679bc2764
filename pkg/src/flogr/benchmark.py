"""Replicated comparison of RFPLS, FPLS and FPC.

One replication generates a clean dataset, splits it, contaminates the
training part, fits every method on the training curves and scores it on the
clean test curves. Replications are independent and seeded by
``base_seed + replication``, so their results do not depend on the order or
process in which they run.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence

import numpy as np

from flogr.baselines import fit_fpc, fit_fpls, predict_fpc, predict_fpls
from flogr.basis import FunctionalDataset, build_bspline_basis, fit_coefficients, gram_matrix
from flogr.exceptions import FlogrError
from flogr.metrics import auc, ccr, imse
from flogr.rfpls import RfplsConfig, fit_rfpls, predict
from flogr.simulate import SimConfig, generate, train_test_split

METHODS = ("rfpls", "fpls", "fpc")
RECORD_FIELDS = ("case", "rate", "replication", "method", "metric", "value", "status")
JOBS_ENV = "FLOGR_JOBS"


@dataclass(frozen=True)
class BenchmarkSpec:
    case: str = "case1"
    n: int = 1000
    n_train: int = 700
    n_test: int = 300
    rates: Sequence[float] = (0.0, 0.01, 0.05, 0.10)
    reps: int = 500
    methods: Sequence[str] = METHODS
    n_basis: int = 15
    seed: int = 1
    fpc_components: int = 4
    config: RfplsConfig = field(default_factory=RfplsConfig)


def fit_method(method, A, psi, y, basis, config: RfplsConfig, fpc_components: int = 4):
    if method == "rfpls":
        return fit_rfpls(A, psi, y, basis, config)
    if method == "fpls":
        return fit_fpls(A, psi, y, basis, config)
    if method == "fpc":
        return fit_fpc(A, psi, y, basis, fpc_components, wle=config.wle)
    raise ValueError(f"unknown method {method!r}")


def predict_method(model, A, psi) -> np.ndarray:
    if model.kind == "fpc":
        return predict_fpc(model, A, psi)
    if model.kind == "fpls":
        return predict_fpls(model, A, psi)
    return predict(model, A, psi)


def score_split(
    train: FunctionalDataset,
    test: FunctionalDataset,
    methods: Iterable[str],
    n_basis: int,
    config: RfplsConfig,
    true_beta: Optional[np.ndarray] = None,
    fpc_components: int = 4,
) -> dict:
    """Fit each method on ``train`` and score it on ``test``.

    Returns ``{method: {metric: value}}``, or ``{method: {"error": text}}`` for
    methods whose fit failed.
    """
    basis = build_bspline_basis(train.grid.domain, n_basis)
    psi = gram_matrix(basis)
    A_train = fit_coefficients(train, basis)
    A_test = fit_coefficients(test, basis)
    out = {}
    for method in methods:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                model = fit_method(method, A_train, psi, train.labels, basis, config, fpc_components)
            p = predict_method(model, A_test, psi)
            res = {"ccr": ccr(test.labels, p), "auc": auc(test.labels, p)}
            if true_beta is not None:
                res["imse"] = imse(true_beta, basis(train.grid.points) @ model.beta_coefs, train.grid)
            out[method] = res
        except FlogrError as exc:
            out[method] = {"error": f"{type(exc).__name__}: {exc}"}
    return out


def _metrics_for(case: str) -> tuple:
    return ("ccr", "auc", "imse") if case == "case1" else ("ccr", "auc")


def run_replication(spec: BenchmarkSpec, rate: float, rep: int) -> List[dict]:
    seed = spec.seed + rep
    clean = generate(SimConfig(spec.case, spec.n, rate, seed), contaminate_now=False)
    train, test = train_test_split(clean, spec.n_train, spec.n_test, seed, rate)
    scores = score_split(
        train.data, test.data, spec.methods, spec.n_basis, spec.config, clean.true_beta, spec.fpc_components
    )
    return _records(spec.case, rate, rep, scores, _metrics_for(spec.case))


def _records(case, rate, rep, scores, metrics) -> List[dict]:
    rows = []
    for method, res in scores.items():
        for metric in metrics:
            if "error" in res:
                rows.append(_row(case, rate, rep, method, metric, float("nan"), "failed: " + res["error"]))
            else:
                rows.append(_row(case, rate, rep, method, metric, res[metric], "ok"))
    return rows


def _row(case, rate, rep, method, metric, value, status):
    return {
        "case": case,
        "rate": float(rate),
        "replication": int(rep),
        "method": method,
        "metric": metric,
        "value": float(value),
        "status": status,
    }


def _run_task(args):
    spec, rate, rep = args
    return run_replication(spec, rate, rep)


def _data_task(args):
    data, n_train, n_test, seed, rep, spec, stratified = args
    rng = np.random.default_rng([int(seed) + rep, 3])
    if stratified:
        train_idx = _stratified_indices(rng, data.labels, n_train)
        rest = np.setdiff1d(np.arange(data.n), train_idx)
        test_idx = np.sort(rng.choice(rest, size=n_test, replace=False))
    else:
        perm = rng.permutation(data.n)
        train_idx, test_idx = np.sort(perm[:n_train]), np.sort(perm[n_train : n_train + n_test])
    scores = score_split(
        data.subset(train_idx), data.subset(test_idx), spec.methods, spec.n_basis, spec.config, None, spec.fpc_components
    )
    return _records("data", 0.0, rep, scores, ("ccr", "auc"))


def _stratified_indices(rng, y, size):
    ones, zeros = np.flatnonzero(y == 1), np.flatnonzero(y == 0)
    k1 = int(round(size * ones.size / y.size))
    return np.sort(np.concatenate([rng.choice(ones, k1, replace=False), rng.choice(zeros, size - k1, replace=False)]))


def sort_records(rows: List[dict]) -> List[dict]:
    order = {m: i for i, m in enumerate(METHODS)}
    metric_order = {"ccr": 0, "auc": 1, "imse": 2}
    return sorted(
        rows,
        key=lambda r: (r["rate"], r["replication"], order.get(r["method"], 99), metric_order.get(r["metric"], 9)),
    )


def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get(JOBS_ENV, "1")))
    except ValueError:
        return 1


def _map(func, tasks, jobs):
    if jobs <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, tasks, chunksize=1))


def run_benchmark(spec: BenchmarkSpec, jobs: int = 1) -> List[dict]:
    """Every ``(rate, replication)`` pair of ``spec``, as sorted long records."""
    tasks = [(spec, float(rate), rep) for rate in spec.rates for rep in range(spec.reps)]
    rows = [row for chunk in _map(_run_task, tasks, jobs) for row in chunk]
    return sort_records(rows)


def run_data_benchmark(
    data: FunctionalDataset,
    n_train: int,
    n_test: int,
    spec: BenchmarkSpec,
    jobs: int = 1,
    stratified: bool = False,
) -> List[dict]:
    """Random train/test splits of a labelled real dataset."""
    if n_train + n_test > data.n:
        raise ValueError(f"cannot split {data.n} curves into {n_train} + {n_test}")
    tasks = [(data, n_train, n_test, spec.seed, rep, spec, stratified) for rep in range(spec.reps)]
    rows = [row for chunk in _map(_data_task, tasks, jobs) for row in chunk]
    return sort_records(rows)


def summarize(rows: List[dict]) -> List[dict]:
    """Median and interquartile range per (case, rate, method, metric)."""
    groups = {}
    for r in rows:
        if r["status"] != "ok":
            continue
        groups.setdefault((r["case"], r["rate"], r["method"], r["metric"]), []).append(r["value"])
    out = []
    for (case, rate, method, metric), vals in groups.items():
        q1, med, q3 = np.percentile(vals, [25, 50, 75])
        out.append(
            {
                "case": case,
                "rate": rate,
                "method": method,
                "metric": metric,
                "n": len(vals),
                "median": float(med),
                "q1": float(q1),
                "q3": float(q3),
                "iqr": float(q3 - q1),
            }
        )
    order = {m: i for i, m in enumerate(METHODS)}
    return sorted(out, key=lambda s: (s["case"], s["rate"], s["metric"], order.get(s["method"], 99)))
