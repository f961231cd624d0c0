"""Batch command-line interface: CSV ingestion, training, prediction,
cross-validation, metrics, and model serialization.

Exit codes: 0 success, 2 usage/configuration, 3 data problems, 4 numerical
failures. Views are headerless CSV files with one instance per row; the
label file has one +1/-1 token per line.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import kernels
from .errors import (
    DataError,
    InvalidParameterError,
    NumericalDegeneracyError,
    RffMarginError,
    SweepError,
)
from .lvm import MultiViewDataset
from .sampler import PosteriorSamples, SamplerConfig, predict, train

MODEL_FORMAT_VERSION = 1

METRIC_KEYS = (
    "mode", "backend", "n_instances", "accuracy", "count_pos", "count_neg",
    "count_correct", "train_seconds", "seconds_per_sweep", "hmc_accept_h",
    "hmc_accept_omega", "active_components", "C", "selected_C", "c_grid",
    "cv_results",
)


def _read_csv_matrix(path: str) -> np.ndarray:
    """Headerless numeric CSV -> (rows, cols) array; errors name row/column."""
    rows = []
    width = None
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: cannot open ({exc.strerror})") from exc
    with handle:
        for r, record in enumerate(csv.reader(handle)):
            if not record:
                continue
            if width is None:
                width = len(record)
            elif len(record) != width:
                raise DataError(
                    f"{path}: row {r + 1} has {len(record)} columns, expected {width}"
                )
            parsed = []
            for c, cell in enumerate(record):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise DataError(
                        f"{path}: row {r + 1}, column {c + 1}: "
                        f"could not parse {cell.strip()!r} as a number"
                    ) from None
            rows.append(parsed)
    if not rows:
        raise DataError(f"{path}: file contains no data rows")
    return np.asarray(rows, dtype=float)


def _read_labels(path: str) -> np.ndarray:
    labels = []
    try:
        handle = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: cannot open ({exc.strerror})") from exc
    with handle:
        for i, line in enumerate(handle):
            token = line.strip()
            if not token:
                continue
            try:
                value = float(token)
            except ValueError:
                raise DataError(
                    f"{path}: line {i + 1}: label {token!r} is not a number"
                ) from None
            if value not in (-1.0, 1.0):
                raise DataError(
                    f"{path}: line {i + 1}: label must be +1 or -1, got {token!r}"
                )
            labels.append(value)
    if not labels:
        raise DataError(f"{path}: no labels found")
    return np.asarray(labels, dtype=float)


def ingest(view_paths, label_path=None) -> MultiViewDataset:
    """Load aligned views (and labels); instances are CSV rows."""
    tables = []
    counts = {}
    for path in view_paths:
        table = _read_csv_matrix(path)
        tables.append(table)
        counts[path] = table.shape[0]
    sizes = set(counts.values())
    if len(sizes) != 1:
        detail = ", ".join(f"{p}: {c} rows" for p, c in counts.items())
        raise DataError(f"views are not aligned ({detail})")
    labels = None
    if label_path is not None:
        labels = _read_labels(label_path)
        n = tables[0].shape[0]
        if labels.size != n:
            raise DataError(
                f"{label_path}: {labels.size} labels for {n} instances"
            )
    return MultiViewDataset([t.T for t in tables], labels)


def fit_standardizer(dataset: MultiViewDataset):
    """Per-feature means and scales from training data (zero scales -> 1)."""
    means, sds = [], []
    for x in dataset.views:
        mu = x.mean(axis=1)
        sd = x.std(axis=1)
        sd[sd == 0.0] = 1.0
        means.append(mu)
        sds.append(sd)
    return {"means": means, "sds": sds}


def apply_standardizer(views, stats):
    return [
        (np.asarray(x, float) - mu[:, None]) / sd[:, None]
        for x, mu, sd in zip(views, stats["means"], stats["sds"])
    ]


def stratified_folds(labels, k, seed):
    """Round-robin fold assignment within shuffled class groups.

    Total fold sizes differ by at most one; every class must appear in every
    fold (so each class needs at least k members).
    """
    labels = np.asarray(labels)
    if k < 2:
        raise InvalidParameterError("cross-validation needs at least 2 folds")
    rng = np.random.default_rng([int(seed), 977])
    order = []
    for value in (-1.0, 1.0):
        idx = np.flatnonzero(labels == value)
        if idx.size and idx.size < k:
            raise DataError(
                f"class {int(value):+d} has only {idx.size} instances: "
                f"cannot stratify into {k} folds"
            )
        rng.shuffle(idx)
        order.extend(idx.tolist())
    folds = [[] for _ in range(k)]
    for position, idx in enumerate(order):
        folds[position % k].append(idx)
    return [np.sort(np.asarray(f, dtype=int)) for f in folds]


def _accuracy(labels, predicted):
    labels = np.asarray(labels)
    predicted = np.asarray(predicted)
    return {
        "accuracy": float(np.mean(predicted == labels)),
        "count_pos": int(np.sum(predicted == 1)),
        "count_neg": int(np.sum(predicted == -1)),
        "count_correct": int(np.sum(predicted == labels)),
    }


def _metrics(**values):
    report = {key: None for key in METRIC_KEYS}
    report["backend"] = kernels.BACKEND
    report.update(values)
    return report


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n")


def _config_from_args(args, n_views, C):
    return SamplerConfig(
        m=args.m, M=args.M, K=_parse_k(args.K, n_views), eta=args.eta,
        alpha=args.alpha, C=C, v=args.v, a_r=args.a_r, b_r=args.b_r,
        a_tau=args.a_tau, b_tau=args.b_tau, max_iter=args.iters,
        burn_in=args.burnin, thinning=args.thin, seed=args.seed,
        cv_folds=args.folds,
    )


def _parse_k(text, n_views):
    parts = [int(p) for p in str(text).split(",")]
    if len(parts) == 1:
        return parts[0]
    if len(parts) != n_views:
        raise InvalidParameterError(
            f"--K lists {len(parts)} values for {n_views} views"
        )
    return parts


def _cv_select(dataset, args):
    """Grid cross-validation over C; returns (best C, per-C results)."""
    grid = [int(c) for c in args.c_grid.split(",")]
    folds = stratified_folds(dataset.labels, args.folds, args.seed)
    results = {}
    all_idx = np.arange(dataset.n)
    for C in grid:
        fold_accs = []
        for f, test_idx in enumerate(folds):
            train_idx = np.setdiff1d(all_idx, test_idx)
            train_ds = MultiViewDataset(
                [v[:, train_idx] for v in dataset.views], dataset.labels[train_idx]
            )
            config = _config_from_args(args, dataset.n_views, C)
            config.seed = int(np.random.default_rng([args.seed, C, f]).integers(2**31))
            samples, _ = train(train_ds, config)
            _, pred = predict(samples, [v[:, test_idx] for v in dataset.views])
            fold_accs.append(float(np.mean(pred == dataset.labels[test_idx])))
        results[str(C)] = {
            "fold_accuracies": fold_accs,
            "mean": float(np.mean(fold_accs)),
            "std": float(np.std(fold_accs)),
        }
    best = min(grid, key=lambda c: (-results[str(c)]["mean"], c))
    return best, results


def _model_payload(samples, args, stats, selected_C):
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "seed": args.seed,
        "m": args.m,
        "M": args.M,
        "C": selected_C,
        "v": args.v,
        "standardize": {
            "enabled": stats is not None,
            "means": [mu.tolist() for mu in stats["means"]] if stats else [],
            "sds": [sd.tolist() for sd in stats["sds"]] if stats else [],
        },
        "samples": samples.to_jsonable(),
    }


def cmd_train(args):
    dataset = ingest(args.views.split(","), args.labels)
    stats = None
    if args.standardize:
        stats = fit_standardizer(dataset)
        dataset = MultiViewDataset(
            apply_standardizer(dataset.views, stats), dataset.labels
        )
    selected_C = None
    cv_results = None
    if args.C == "auto":
        selected_C, cv_results = _cv_select(dataset, args)
    else:
        selected_C = int(args.C)
    config = _config_from_args(args, dataset.n_views, selected_C)
    t0 = time.perf_counter()
    samples, diag = train(dataset, config)
    seconds = time.perf_counter() - t0
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "model.json", _model_payload(samples, args, stats, selected_C))
    scores, pred = predict(samples, dataset.views)
    post = slice(config.burn_in, None)
    report = _metrics(
        mode="train",
        n_instances=dataset.n,
        train_seconds=seconds,
        seconds_per_sweep=float(np.mean(diag["seconds_per_sweep"])),
        hmc_accept_h=float(np.mean(diag["accept_h"][post])),
        hmc_accept_omega=float(np.mean(diag["accept_omega"][post])),
        active_components=int(diag["n_active"][-1]),
        C=selected_C,
        selected_C=selected_C,
        cv_results=cv_results,
        **_accuracy(dataset.labels, pred),
    )
    _write_json(out / "metrics.json", report)
    print(f"model written to {out / 'model.json'}")
    print(f"training accuracy {report['accuracy']:.4f} in {seconds:.1f}s")
    return 0


def load_model(path):
    model_path = Path(path)
    if not model_path.exists():
        raise DataError(f"model file not found: {model_path}")
    payload = json.loads(model_path.read_text())
    samples = PosteriorSamples.from_jsonable(payload["samples"])
    stats = None
    if payload["standardize"]["enabled"]:
        stats = {
            "means": [np.asarray(v, float) for v in payload["standardize"]["means"]],
            "sds": [np.asarray(v, float) for v in payload["standardize"]["sds"]],
        }
    return payload, samples, stats


def cmd_predict(args):
    payload, samples, stats = load_model(args.model)
    dataset = ingest(args.views.split(","), args.labels)
    for i, (view, expected) in enumerate(zip(dataset.views, samples.dims)):
        if view.shape[0] != expected:
            raise DataError(
                f"view {i + 1} has {view.shape[0]} features, model expects {expected}"
            )
    views = dataset.views
    if stats is not None:
        views = apply_standardizer(views, stats)
    scores, pred = predict(samples, views, latent_mode=args.latent_mode)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lines = [f"{s:.17g}\t{int(l):+d}" for s, l in zip(scores, pred)]
    (out / "predictions.txt").write_text("\n".join(lines) + "\n")
    report = _metrics(mode="predict", n_instances=dataset.n, C=payload["C"])
    if dataset.labels is not None:
        report.update(_accuracy(dataset.labels, pred))
    _write_json(out / "metrics.json", report)
    print(f"predictions written to {out / 'predictions.txt'}")
    if report["accuracy"] is not None:
        print(f"accuracy {report['accuracy']:.4f}")
    return 0


def cmd_cv(args):
    dataset = ingest(args.views.split(","), args.labels)
    if args.standardize:
        stats = fit_standardizer(dataset)
        dataset = MultiViewDataset(
            apply_standardizer(dataset.views, stats), dataset.labels
        )
    best, results = _cv_select(dataset, args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = _metrics(
        mode="cv",
        n_instances=dataset.n,
        accuracy=results[str(best)]["mean"],
        selected_C=best,
        C=best,
        c_grid=[int(c) for c in args.c_grid.split(",")],
        cv_results=results,
    )
    _write_json(out / "metrics.json", report)
    print(f"selected C = {best} (mean accuracy {results[str(best)]['mean']:.4f})")
    return 0


def _add_sampler_args(sub):
    sub.add_argument("--m", type=int, default=20, help="shared latent dimension")
    sub.add_argument("--M", type=int, default=100, help="number of random frequencies")
    sub.add_argument("--K", default="5", help="private dimension per view (int or comma list)")
    sub.add_argument("--eta", type=float, default=1e3, help="prior precision of V columns")
    sub.add_argument("--alpha", type=float, default=1.0, help="DP concentration")
    sub.add_argument("--v", type=float, default=1e-2, help="prior precision of the classifier")
    sub.add_argument("--a-r", dest="a_r", type=float, default=1e-1)
    sub.add_argument("--b-r", dest="b_r", type=float, default=1e-5)
    sub.add_argument("--a-tau", dest="a_tau", type=float, default=1e-2)
    sub.add_argument("--b-tau", dest="b_tau", type=float, default=1e-5)
    sub.add_argument("--iters", type=int, default=1000, help="total sweeps")
    sub.add_argument("--burnin", type=int, default=800, help="discarded sweeps")
    sub.add_argument("--thin", type=int, default=1, help="collection interval")
    sub.add_argument("--seed", type=int, default=0, help="master seed")
    sub.add_argument("--folds", type=int, default=5, help="cross-validation folds")
    sub.add_argument("--c-grid", default="1,2,3,4,5,6,7,8,9,10",
                     help="candidate C values for cross-validation")
    sub.add_argument("--standardize", type=_parse_bool, default=True,
                     help="standardize features using training statistics (true/false)")


def _parse_bool(text):
    value = str(text).strip().lower()
    if value in ("true", "1", "yes"):
        return True
    if value in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rffmargin",
        description="Multi-view Bayesian max-margin classifier with adaptive "
        "random Fourier feature kernels",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    train_p = commands.add_parser("train", help="train a model from CSV views")
    train_p.add_argument("--views", required=True, help="comma-separated view CSV paths")
    train_p.add_argument("--labels", required=True, help="label file (+1/-1 per line)")
    train_p.add_argument("--out", required=True, help="output directory")
    train_p.add_argument("--C", default="1",
                         help="regularization parameter (integer, or 'auto' for CV)")
    _add_sampler_args(train_p)
    train_p.set_defaults(func=cmd_train)

    predict_p = commands.add_parser("predict", help="score new instances with a model")
    predict_p.add_argument("--model", required=True, help="path to model.json")
    predict_p.add_argument("--views", required=True)
    predict_p.add_argument("--labels", default=None, help="optional labels for accuracy")
    predict_p.add_argument("--out", required=True)
    predict_p.add_argument("--latent-mode", default="per-sample",
                           choices=("per-sample", "point"))
    predict_p.set_defaults(func=cmd_predict)

    cv_p = commands.add_parser("cv", help="cross-validate the regularization parameter")
    cv_p.add_argument("--views", required=True)
    cv_p.add_argument("--labels", required=True)
    cv_p.add_argument("--out", required=True)
    _add_sampler_args(cv_p)
    cv_p.set_defaults(func=cmd_cv)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (NumericalDegeneracyError, SweepError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    except InvalidParameterError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except RffMarginError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
