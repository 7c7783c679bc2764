"""Command-line interface.

Subcommands: ``simulate``, ``ingest``, ``fit``, ``predict``, ``evaluate`` and
``benchmark``. Exit codes: 0 success, 2 usage or configuration error, 3 data
error, 4 estimation error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from flogr import __version__
from flogr.basis import build_bspline_basis, fit_coefficients, gram_matrix
from flogr.benchmark import (
    JOBS_ENV,
    METHODS,
    RECORD_FIELDS,
    BenchmarkSpec,
    default_jobs,
    fit_method,
    predict_method,
    run_benchmark,
    run_data_benchmark,
    summarize,
)
from flogr.exceptions import CompatibilityError, ConfigurationError, DataError, EstimationError, FlogrError
from flogr.io import file_digest, load_model, read_curves, read_spectra, save_model, write_curves
from flogr.metrics import evaluate, imse
from flogr.rfpls import RfplsConfig
from flogr.simulate import SimConfig, generate, train_test_split
from flogr.wle import RAF_KINDS, WleConfig

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_ESTIMATION = 0, 2, 3, 4


def _write_manifest(path, args, config, outputs, started, extra=None):
    manifest = {
        "command": sys.argv[0:1] + getattr(args, "_argv", []),
        "subcommand": args.command,
        "config": config,
        "software_version": __version__,
        "started": started.isoformat(),
        "finished": datetime.now(timezone.utc).isoformat(),
        "outputs": {str(p): file_digest(p) for p in outputs},
    }
    if extra:
        manifest.update(extra)
    Path(path).write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")


def _now():
    return datetime.now(timezone.utc)


def _rfpls_config(args) -> RfplsConfig:
    wle = WleConfig(raf_kind=args.raf, smoothing_bandwidth=args.bandwidth)
    return RfplsConfig(wald_alpha=args.wald_alpha, max_components=args.max_components, wle=wle)


def _write_vector_csv(path, header, columns):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([x if isinstance(x, str) else repr(float(x)) for x in row])


def cmd_simulate(args) -> int:
    started = _now()
    config = SimConfig(args.case, args.n, args.rate, args.seed, args.n_grid, args.label_mode)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = []
    extra = {}
    if args.split:
        n_train, n_test = args.split
        clean = generate(config, contaminate_now=False)
        train, test = train_test_split(clean, n_train, n_test, args.seed, args.rate)
        for name, part in (("train", train), ("test", test)):
            path = out / f"{name}.csv"
            write_curves(path, part.data)
            outputs.append(path)
        extra["outlier_indices"] = {"train": train.outlier_indices.tolist(), "test": test.outlier_indices.tolist()}
        extra["n_outliers"] = int(train.outlier_indices.size)
        beta_src = clean
    else:
        ds = generate(config)
        path = out / "curves.csv"
        write_curves(path, ds.data)
        outputs.append(path)
        extra["outlier_indices"] = ds.outlier_indices.tolist()
        extra["n_outliers"] = int(ds.outlier_indices.size)
        beta_src = ds
    if beta_src.true_beta is not None:
        path = out / "true_beta.csv"
        _write_vector_csv(path, ["t", "beta"], [beta_src.grid.points.tolist(), beta_src.true_beta.tolist()])
        outputs.append(path)
    _write_manifest(out / "manifest.json", args, config.to_dict(), outputs, started, extra)
    print(f"wrote {', '.join(str(p) for p in outputs)}; outliers: {extra['n_outliers']}")
    return EXIT_OK


def cmd_ingest(args) -> int:
    started = _now()
    data, info = read_spectra(args.raw, args.positive, args.negative, args.any_negative)
    write_curves(args.out, data)
    info.update({"n": data.n, "m": len(data.grid), "n_positive": int(data.labels.sum())})
    manifest = args.manifest or str(args.out) + ".manifest.json"
    _write_manifest(manifest, args, {"raw": str(args.raw)}, [args.out], started, info)
    print(f"ingested n={data.n} curves on m={len(data.grid)} points; {info['n_positive']} positive")
    return EXIT_OK


def cmd_fit(args) -> int:
    started = _now()
    data, _ = read_curves(args.data)
    if data.labels is None:
        raise DataError(f"{args.data} has no label column")
    basis = build_bspline_basis(data.grid.domain, args.k)
    psi = gram_matrix(basis)
    A = fit_coefficients(data, basis)
    config = _rfpls_config(args)
    model = fit_method(args.method, A, psi, data.labels, basis, config, args.fpc_components)
    save_model(args.out, model, data.grid)
    summary = {"method": args.method, "n_components": int(model.n_components)}
    if args.method == "fpc":
        summary["explained_variance_ratio"] = float(model.explained_variance_ratio.sum())
    else:
        w = model.obs_weights
        summary.update(
            {
                "stop_reason": model.stop_reason,
                "fallback": bool(model.fallback),
                "weights": {"min": float(w.min()), "median": float(np.median(w)), "mean": float(w.mean())},
            }
        )
    manifest = args.manifest or str(args.out) + ".manifest.json"
    cfg = {"method": args.method, "k": args.k, "fpc_components": args.fpc_components, "rfpls": config.to_dict()}
    _write_manifest(manifest, args, cfg, [args.out], started, {"summary": summary})
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def _load_for_prediction(args):
    model, grid = load_model(args.model)
    data, ids = read_curves(args.data)
    if grid is not None and not data.grid.same_as(grid):
        raise CompatibilityError("data grid differs from the grid the model was trained on")
    lo, hi = model.basis.domain
    if data.grid.points[0] < lo - 1e-9 or data.grid.points[-1] > hi + 1e-9:
        raise CompatibilityError("data grid extends beyond the model's basis domain")
    psi = gram_matrix(model.basis)
    A = fit_coefficients(data, model.basis)
    return model, data, ids, psi, predict_method(model, A, psi)


def cmd_predict(args) -> int:
    _, _, ids, _, p = _load_for_prediction(args)
    _write_vector_csv(args.out, ["id", "probability"], [ids, [float(v) for v in p]])
    print(f"wrote {len(ids)} probabilities to {args.out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    if args.imse and not args.true_beta:
        raise ConfigurationError("--imse needs --true-beta")
    model, data, ids, _, p = _load_for_prediction(args)
    if data.labels is None:
        raise DataError(f"{args.data} has no label column")
    report = evaluate(data.labels, p, args.cut).to_dict()
    if args.true_beta:
        t, beta = _read_true_beta(args.true_beta)
        if t.size != len(data.grid) or not np.allclose(t, data.grid.points, rtol=0, atol=1e-9):
            raise CompatibilityError("true-beta grid differs from the data grid")
        report["imse"] = imse(beta, model.basis(t) @ model.beta_coefs, data.grid)
    Path(args.out).write_text(json.dumps(report, indent=1, sort_keys=True) + "\n")
    if args.probs:
        _write_vector_csv(args.probs, ["id", "probability"], [ids, [float(v) for v in p]])
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


def _read_true_beta(path):
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["t", "beta"]:
        raise DataError(f"{path}: expected a 't,beta' header")
    try:
        vals = np.array([[float(a), float(b)] for a, b in rows[1:]])
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    return vals[:, 0], vals[:, 1]


def _write_records(path, rows):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_FIELDS)
        for r in rows:
            w.writerow([r["case"], repr(r["rate"]), r["replication"], r["method"], r["metric"], repr(r["value"]), r["status"]])


def _write_summary(path, summary):
    fields = ["case", "rate", "method", "metric", "n", "median", "q1", "q3", "iqr"]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for s in summary:
            w.writerow([repr(s[f]) if isinstance(s[f], float) else s[f] for f in fields])


def cmd_benchmark(args) -> int:
    started = _now()
    t0 = time.perf_counter()
    methods = tuple(args.methods)
    for m in methods:
        if m not in METHODS:
            raise ConfigurationError(f"unknown method {m!r}; choose from {METHODS}")
    config = _rfpls_config(args)
    jobs = args.jobs if args.jobs is not None else default_jobs()
    if args.data:
        data, _ = read_curves(args.data)
        if data.labels is None:
            raise DataError(f"{args.data} has no label column")
        n_train = args.n_train or 583
        n_test = args.n_test or 400
        spec = BenchmarkSpec(
            case="data", n=data.n, n_train=n_train, n_test=n_test, rates=(0.0,), reps=args.reps,
            methods=methods, n_basis=args.k, seed=args.seed, fpc_components=args.fpc_components, config=config,
        )
        rows = run_data_benchmark(data, n_train, n_test, spec, jobs, args.stratified)
    else:
        n_train = args.n_train or int(round(0.7 * args.n))
        n_test = args.n_test or args.n - n_train
        spec = BenchmarkSpec(
            case=args.case, n=args.n, n_train=n_train, n_test=n_test, rates=tuple(args.rates), reps=args.reps,
            methods=methods, n_basis=args.k, seed=args.seed, fpc_components=args.fpc_components, config=config,
        )
        SimConfig(args.case, args.n, 0.0, args.seed)  # validates case and n
        rows = run_benchmark(spec, jobs)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_records(out, rows)
    summary_path = Path(args.summary) if args.summary else out.with_name(out.stem + "_summary.csv")
    _write_summary(summary_path, summarize(rows))
    failures = sum(r["status"] != "ok" for r in rows)
    cfg = {
        "case": spec.case, "n": spec.n, "n_train": spec.n_train, "n_test": spec.n_test, "rates": list(spec.rates),
        "reps": spec.reps, "methods": list(methods), "k": spec.n_basis, "seed": spec.seed, "jobs": jobs,
        "rfpls": config.to_dict(),
    }
    extra = {"seconds": time.perf_counter() - t0, "failed_records": failures, "seeds": [spec.seed, spec.seed + spec.reps - 1]}
    _write_manifest(str(out) + ".manifest.json", args, cfg, [out, summary_path], started, extra)
    print(f"wrote {len(rows)} records to {out} ({failures} failed) and summary to {summary_path}")
    return EXIT_OK


def _rates(text):
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid rate list {text!r}") from None
    if not vals or any(not 0 <= v < 1 for v in vals):
        raise argparse.ArgumentTypeError("rates must lie in [0, 1)")
    return vals


def _methods(text):
    return [m.strip() for m in text.split(",") if m.strip()]


def _split(text):
    try:
        a, b = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("--split expects N_TRAIN,N_TEST") from None
    return a, b


def _model_options(p):
    p.add_argument("--k", type=int, default=15, help="number of B-spline basis functions (default 15)")
    p.add_argument("--wald-alpha", type=float, default=0.05)
    p.add_argument("--raf", choices=RAF_KINDS, default="hellinger")
    p.add_argument("--bandwidth", type=float, default=None, help="fixed residual-density bandwidth")
    p.add_argument("--max-components", type=int, default=None)
    p.add_argument("--fpc-components", type=int, default=4)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flogr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a Monte Carlo dataset")
    p.add_argument("--case", choices=("case1", "case2"), default="case1")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--rate", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-grid", type=int, default=None)
    p.add_argument("--label-mode", choices=("bernoulli", "threshold"), default="bernoulli")
    p.add_argument("--split", type=_split, default=None, help="N_TRAIN,N_TEST: split first, contaminate train only")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ingest", help="convert a raw spectral CSV into a curve CSV")
    p.add_argument("--raw", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--positive", nargs="+", default=["strawberry"])
    p.add_argument("--negative", nargs="+", default=["non-strawberry"])
    p.add_argument("--any-negative", action="store_true", help="map every non-positive label to class 0")
    p.add_argument("--manifest", default=None)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("fit", help="fit a model to labelled curves")
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=METHODS, default="rfpls")
    _model_options(p)
    p.add_argument("--out", required=True)
    p.add_argument("--manifest", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predict class-1 probabilities")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="CCR/AUC (and IMSE) of a model on labelled curves")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--true-beta", default=None, help="CSV with columns t,beta")
    p.add_argument("--imse", action="store_true", help="require an IMSE entry (needs --true-beta)")
    p.add_argument("--cut", type=float, default=0.5)
    p.add_argument("--probs", default=None, help="also write per-curve probabilities here")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("benchmark", help="replicated RFPLS/FPLS/FPC comparison")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--case", choices=("case1", "case2"), default="case1")
    src.add_argument("--data", default=None, help="labelled curve CSV for random-split experiments")
    p.add_argument("--reps", type=int, default=500)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--n-train", type=int, default=None)
    p.add_argument("--n-test", type=int, default=None)
    p.add_argument("--rates", type=_rates, default=[0.0, 0.01, 0.05, 0.10])
    p.add_argument("--methods", type=_methods, default=list(METHODS))
    p.add_argument("--jobs", type=int, default=None, help=f"worker processes (default ${JOBS_ENV} or 1)")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--stratified", action="store_true", help="stratify data splits by class")
    _model_options(p)
    p.add_argument("--out", required=True)
    p.add_argument("--summary", default=None)
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args._argv = argv
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"flogr {args.command}: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"flogr {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (EstimationError, FlogrError) as exc:
        print(f"flogr {args.command}: estimation error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except (FileNotFoundError, IsADirectoryError) as exc:
        print(f"flogr {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
