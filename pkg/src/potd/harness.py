"""Dataset ingestion, splitting, KNN scoring and benchmark orchestration.

Benchmarks are paired: within one replication every method sees the same
generated dataset (synthetic) or the same train/test partition (real).
Each replication draws its randomness from an independent stream derived
from the base seed and the replication index, so runs are reproducible
and order-independent under worker parallelism.
"""

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .baselines import pca_fit, save_fit, sir_fit
from .core import LabeledDataset, potd_fit, project
from .errors import (
    DatasetParseError,
    DatasetSchemaError,
    DegenerateInputError,
    InvalidInputError,
    PotdError,
)
from .kernels import pairwise_sqdist
from .synthetic import SyntheticSpec, gen_model, subspace_distance

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
METHODS = ("POTD", "SIR", "SAVE", "PCA")

CSV_COLUMNS = (
    "schema_version",
    "method",
    "setting",
    "r",
    "effective_r",
    "metric_kind",
    "mean",
    "sd",
    "reps",
)


@dataclass(frozen=True)
class SplitConfig:
    """Train/test splitting protocol for real-data benchmarks."""

    test_fraction: float = 0.5
    replications: int = 100
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not 0 < self.test_fraction < 1:
            raise InvalidInputError("test_fraction must be in (0, 1)")
        if self.replications < 1:
            raise InvalidInputError("replications must be >= 1")


@dataclass
class ReportRow:
    """One (method, setting, dimension) cell of a benchmark."""

    method: str
    setting: str
    r: int
    effective_r: int
    metric_kind: str
    mean: float | None
    sd: float | None
    replications: int
    values: list = field(default_factory=list)
    failures: dict = field(default_factory=dict)


@dataclass
class BenchmarkReport:
    """Aggregated benchmark results plus the per-replication raw values."""

    kind: str
    rows: list
    config: dict
    schema_version: int = SCHEMA_VERSION

    def to_dict(self):
        return {
            "schema_version": self.schema_version,
            "kind": self.kind,
            "config": self.config,
            "rows": [asdict(row) for row in self.rows],
        }

    def write_json(self, path, meta=None):
        payload = self.to_dict()
        if meta:
            payload["meta"] = meta
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for row in self.rows:
                writer.writerow(
                    [
                        self.schema_version,
                        row.method,
                        row.setting,
                        row.r,
                        row.effective_r,
                        row.metric_kind,
                        "" if row.mean is None else repr(row.mean),
                        "" if row.sd is None else repr(row.sd),
                        row.replications,
                    ]
                )


def _aggregate(values):
    if not values:
        return None, None
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    sd = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return mean, sd


# ---------------------------------------------------------------------------
# CSV ingestion / dumping


def load_csv_dataset(path, label_column, delimiter=","):
    """Read a header-first CSV into a LabeledDataset.

    ``label_column`` selects the response by header name (str) or 0-based
    position (int); every other column must be numeric. Error coordinates
    are 1-based, counting data rows below the header.
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f"dataset not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetSchemaError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        if isinstance(label_column, int):
            if not 0 <= label_column < len(header):
                raise DatasetSchemaError(
                    f"{path}: label column index {label_column} out of range "
                    f"for {len(header)} columns"
                )
            label_idx = label_column
        else:
            if label_column not in header:
                raise DatasetSchemaError(
                    f"{path}: label column {label_column!r} not found; "
                    f"columns are {header}"
                )
            label_idx = header.index(label_column)
        features, labels = [], []
        for row_num, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != len(header):
                raise DatasetSchemaError(
                    f"{path}: row {row_num} has {len(row)} fields, "
                    f"expected {len(header)}"
                )
            feats = []
            for col_num, cell in enumerate(row, start=1):
                if col_num - 1 == label_idx:
                    labels.append(cell.strip())
                    continue
                try:
                    feats.append(float(cell))
                except ValueError:
                    raise DatasetParseError(
                        f"{path}: non-numeric cell {cell!r} at row {row_num}, "
                        f"column {col_num}",
                        row=row_num,
                        column=col_num,
                    ) from None
            features.append(feats)
    if not features:
        raise DatasetSchemaError(f"{path}: no data rows")
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    if np.unique(y).shape[0] < 2:
        raise DegenerateInputError(f"{path}: all rows share a single class")
    dataset = LabeledDataset(X, y)
    logger.info(
        "loaded %s: %d rows, %d features, classes %s",
        path,
        dataset.n,
        dataset.p,
        dataset.class_counts(),
    )
    return dataset


def save_csv_dataset(dataset, path, delimiter=","):
    """Write a LabeledDataset in the schema load_csv_dataset reads."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter=delimiter)
        writer.writerow([f"x{j + 1}" for j in range(dataset.p)] + ["label"])
        for row, label in zip(dataset.X, dataset.y):
            writer.writerow([repr(float(v)) for v in row] + [label])


# ---------------------------------------------------------------------------
# KNN classification


def knn_predict(train, test_points, K):
    """Majority vote among the K nearest training points.

    Deterministic tie handling: equal distances prefer the lower training
    row index, tied votes prefer the smallest class label.
    """
    if K < 1:
        raise InvalidInputError("K must be >= 1")
    if K > train.n:
        raise InvalidInputError(f"K={K} exceeds training size {train.n}")
    test_points = np.asarray(test_points, dtype=np.float64)
    if test_points.ndim != 2 or test_points.shape[1] != train.p:
        raise InvalidInputError(
            f"test points must be a matrix with {train.p} columns"
        )
    labels, codes = np.unique(train.y, return_inverse=True)
    dists = pairwise_sqdist(test_points, train.X)
    # stable argsort keeps the lower row index first among equal distances
    nearest = np.argsort(dists, axis=1, kind="stable")[:, :K]
    votes = codes[nearest]
    counts = np.apply_along_axis(np.bincount, 1, votes, minlength=labels.shape[0])
    # argmax picks the first maximum, i.e. the smallest label on vote ties
    return labels[np.argmax(counts, axis=1)]


def accuracy(predicted, truth):
    """Fraction of matching labels."""
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape or predicted.ndim != 1:
        raise InvalidInputError("predicted and truth must be equal-length vectors")
    if predicted.shape[0] == 0:
        raise InvalidInputError("cannot score empty label vectors")
    return float(np.mean(predicted == truth))


# ---------------------------------------------------------------------------
# splitting


def stratified_split(y, test_fraction, rng):
    """Per-class random split keeping every class in the training half."""
    y = np.asarray(y)
    train_parts, test_parts = [], []
    for label in np.unique(y):
        idx = np.nonzero(y == label)[0]
        perm = rng.permutation(idx)
        n_test = min(int(round(idx.shape[0] * test_fraction)), idx.shape[0] - 1)
        test_parts.append(perm[:n_test])
        train_parts.append(perm[n_test:])
    return (
        np.sort(np.concatenate(train_parts)),
        np.sort(np.concatenate(test_parts)),
    )


def random_split(y, test_fraction, rng):
    """Plain random split (classes may drop out of either half)."""
    n = np.asarray(y).shape[0]
    perm = rng.permutation(n)
    n_test = min(max(int(round(n * test_fraction)), 1), n - 1)
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


# ---------------------------------------------------------------------------
# method dispatch


def fit_method(method, dataset, r, solver=None, whiten_flag=True):
    """Fit one of the benchmark methods; returns a Basis.

    SIR may return fewer columns than requested (clamped to k-1).
    """
    if method == "POTD":
        return potd_fit(dataset, r, solver=solver, whiten_flag=whiten_flag)
    if method == "SIR":
        return sir_fit(dataset, r)
    if method == "SAVE":
        return save_fit(dataset, r)
    if method == "PCA":
        return pca_fit(dataset.X, r)
    raise InvalidInputError(
        f"unknown method {method!r}; valid methods: {', '.join(METHODS)}"
    )


def evaluate_split(dataset, train_idx, test_idx, method, r, K=10, solver=None):
    """Fit on the training rows only, project both halves, score KNN accuracy.

    Returns ``(basis, accuracy, effective_r)``. Nothing from the test rows
    enters the fit.
    """
    train = LabeledDataset(dataset.X[train_idx], dataset.y[train_idx])
    basis = fit_method(method, train, r, solver=solver)
    train_proj = project(train.X, basis)
    test_proj = project(dataset.X[test_idx], basis)
    pred = knn_predict(LabeledDataset(train_proj, train.y), test_proj, K)
    acc = accuracy(pred, dataset.y[test_idx])
    return basis, acc, basis.dim


# ---------------------------------------------------------------------------
# synthetic benchmark

_MODEL_CODES = {"I": 1, "II": 2, "III": 3, "IV": 4}


def _replication_seed(seed, *key):
    ss = np.random.SeedSequence([int(seed), *[int(k) for k in key]])
    return int(ss.generate_state(1, np.uint64)[0])


def _synthetic_rep(task):
    model, p, n, rep_seed, methods, solver, whiten_flag, noise_scale = task
    spec = SyntheticSpec(model=model, n=n, p=p, seed=rep_seed, noise_scale=noise_scale)
    data, truth = gen_model(spec)
    r0 = truth.dim
    out = {}
    for method in methods:
        try:
            basis = fit_method(method, data, r0, solver=solver, whiten_flag=whiten_flag)
            out[method] = ("ok", subspace_distance(basis, truth), basis.dim)
        except (PotdError, np.linalg.LinAlgError) as exc:
            out[method] = ("error", f"{type(exc).__name__}: {exc}", r0)
    return out


def _run_tasks(func, tasks, workers):
    cap = os.environ.get("POTD_MAX_THREADS")
    if cap:
        workers = min(workers, max(int(cap), 1))
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(func, tasks))
    return [func(t) for t in tasks]


def run_synthetic_benchmark(
    models,
    p_values,
    methods,
    n=400,
    replications=100,
    seed=42,
    solver=None,
    whiten_flag=True,
    noise_scale=0.2,
    workers=1,
):
    """Subspace-distance benchmark on the synthetic models.

    Every method is fitted at the true structure dimension on identical
    per-replication datasets; distances to the true subspace are
    aggregated per (model, p, method) cell. Per-cell fit errors are
    recorded without aborting the run.
    """
    models = list(models)
    for model in models:
        if model not in _MODEL_CODES:
            raise InvalidInputError(
                f"unknown model {model!r}; valid models: "
                f"{', '.join(_MODEL_CODES)}"
            )
    p_values = [int(p) for p in p_values]
    methods = list(methods)
    for method in methods:
        if method not in METHODS:
            raise InvalidInputError(
                f"unknown method {method!r}; valid methods: {', '.join(METHODS)}"
            )
    config = {
        "models": models,
        "p_values": p_values,
        "methods": methods,
        "n": n,
        "replications": replications,
        "seed": seed,
        "noise_scale": noise_scale,
        "solver": None if solver is None else asdict(solver),
        "whiten": whiten_flag,
        "rng": "PCG64",
    }
    rows = []
    for model in models:
        for p in p_values:
            tasks = [
                (
                    model,
                    p,
                    n,
                    _replication_seed(seed, _MODEL_CODES[model], p, rep),
                    methods,
                    solver,
                    whiten_flag,
                    noise_scale,
                )
                for rep in range(replications)
            ]
            results = _run_tasks(_synthetic_rep, tasks, workers)
            for method in methods:
                values, failures = [], {}
                effective_r = None
                for rep, res in enumerate(results):
                    status, payload, r_eff = res[method]
                    if status == "ok":
                        values.append(payload)
                        effective_r = r_eff
                    else:
                        failures[rep] = payload
                mean, sd = _aggregate(values)
                r0 = 2 if model in ("I", "II") else 4
                rows.append(
                    ReportRow(
                        method=method,
                        setting=f"{model}-{p}",
                        r=r0,
                        effective_r=effective_r if effective_r is not None else r0,
                        metric_kind="subspace_distance",
                        mean=mean,
                        sd=sd,
                        replications=replications,
                        values=values,
                        failures=failures,
                    )
                )
    return BenchmarkReport(kind="synthetic-benchmark", rows=rows, config=config)


# ---------------------------------------------------------------------------
# real-data benchmark


def _real_rep(task):
    X, y, rep_seed, methods, dims, test_fraction, stratified, K, solver = task
    dataset = LabeledDataset(X, y)
    rng = np.random.default_rng(np.random.SeedSequence(rep_seed))
    splitter = stratified_split if stratified else random_split
    train_idx, test_idx = splitter(dataset.y, test_fraction, rng)
    out = {}
    for method in methods:
        for r in dims:
            if r >= dataset.p:
                out[(method, r)] = (
                    "error",
                    f"InvalidInputError: r={r} must be smaller than p={dataset.p}",
                    r,
                )
                continue
            try:
                _, acc, r_eff = evaluate_split(
                    dataset, train_idx, test_idx, method, r, K=K, solver=solver
                )
                out[(method, r)] = ("ok", acc, r_eff)
            except (PotdError, np.linalg.LinAlgError) as exc:
                out[(method, r)] = ("error", f"{type(exc).__name__}: {exc}", r)
    return out


def run_real_benchmark(
    dataset,
    methods,
    dims,
    split=None,
    K=10,
    solver=None,
    setting="dataset",
    workers=1,
):
    """Paired-split KNN accuracy benchmark on a labeled dataset.

    Within a replication all methods and dimensions share one train/test
    partition; fits see training rows only.
    """
    if split is None:
        split = SplitConfig()
    methods = list(methods)
    for method in methods:
        if method not in METHODS:
            raise InvalidInputError(
                f"unknown method {method!r}; valid methods: {', '.join(METHODS)}"
            )
    dims = [int(r) for r in dims]
    if dataset.classes().shape[0] < 2:
        raise InvalidInputError("dataset must have at least 2 classes")
    config = {
        "methods": methods,
        "dims": dims,
        "K": K,
        "split": asdict(split),
        "setting": setting,
        "solver": None if solver is None else asdict(solver),
        "rng": "PCG64",
    }
    tasks = [
        (
            dataset.X,
            dataset.y,
            _replication_seed(split.seed, rep),
            methods,
            dims,
            split.test_fraction,
            split.stratified,
            K,
            solver,
        )
        for rep in range(split.replications)
    ]
    results = _run_tasks(_real_rep, tasks, workers)
    rows = []
    for method in methods:
        for r in dims:
            values, failures = [], {}
            effective_r = r
            for rep, res in enumerate(results):
                status, payload, r_eff = res[(method, r)]
                if status == "ok":
                    values.append(payload)
                    effective_r = r_eff
                else:
                    failures[rep] = payload
            mean, sd = _aggregate(values)
            rows.append(
                ReportRow(
                    method=method,
                    setting=setting,
                    r=r,
                    effective_r=effective_r,
                    metric_kind="accuracy",
                    mean=mean,
                    sd=sd,
                    replications=split.replications,
                    values=values,
                    failures=failures,
                )
            )
    return BenchmarkReport(kind="real-benchmark", rows=rows, config=config)
