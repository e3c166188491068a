"""Experiment harness: configs, the dataset registry, runs, artifacts, reports.

An :class:`ExperimentConfig` fixes everything one experiment needs — the
dataset, the method, hyperparameters, and the seed list.  ``run_experiment``
executes it seed by seed and merges the outcome; ``result_document`` /
``write_result`` render that as a stable JSON artifact (documented in
``docs/schema.json``) and ``make_report`` folds any number of artifacts
into comparison tables.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import time
from dataclasses import asdict, dataclass, fields
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np

from .graph import (
    Dataset,
    build_knn_graph,
    load_dataset,
    mask_labels,
    standardize_features,
)
from .metrics import metrics_report, normalize_scores
from .propagation import (
    PropagationParams,
    assign_labels,
    label_propagation_baseline,
    label_spreading_baseline,
)
from .qelp import PipelineConfig, ilqssl_pipeline, ipqssl_pipeline
from .results import SCHEMA_VERSION, ExperimentResult, _metric_scalars

logger = logging.getLogger(__name__)

__all__ = [
    "BUILTIN_DATASETS",
    "DATA_DIR_ENV",
    "METHODS",
    "ExperimentConfig",
    "data_root",
    "make_report",
    "resolve_dataset",
    "result_document",
    "run_experiment",
    "write_metrics_csv",
    "write_result",
]

BUILTIN_DATASETS = ("german", "heart", "iris", "wine")
DATA_DIR_ENV = "QGSSL_DATA_DIR"
METHODS = ("IPQSSL", "ILQSSL", "label_propagation", "label_spreading")


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: a dataset, a method, hyperparameters, and seeds.

    ``dataset`` is either a builtin name (see :data:`BUILTIN_DATASETS`) or a
    path to a CSV file with a sibling ``<stem>.schema.json``.  ``out_dir``
    only steers where the command-line runner writes artifacts; it is not
    part of the experiment's identity and is excluded from the config echo.
    """

    dataset: str
    method: str = "IPQSSL"
    seeds: tuple = tuple(range(10))
    label_rate: float = 0.30
    k_neighbors: int = 7
    qubit_count: int = 6
    layer_count: int = 10
    alpha1: float = 1.0
    alpha2: float = -0.30
    alpha3: float = 1.0
    epsilon: float = 1e-6
    max_iter: int = 2000
    roc_curves: bool = True
    out_dir: str = "results"

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.dataset:
            raise ValueError("dataset must be a builtin name or a CSV path")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if not self.seeds:
            raise ValueError("need at least one seed")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("duplicate seeds")
        # Constructing the worker configs surfaces any remaining bad value
        # (rates, counts, coefficients) with its own message.
        self.pipeline_config(self.seeds[0])

    def propagation_params(self) -> PropagationParams:
        return PropagationParams(
            alpha1=self.alpha1,
            alpha2=self.alpha2,
            alpha3=self.alpha3,
            epsilon=self.epsilon,
            max_iter=self.max_iter,
        )

    def pipeline_config(self, seed: int) -> PipelineConfig:
        """The per-seed worker config; baselines borrow the default method."""
        method = "ILQSSL" if self.method == "ILQSSL" else "IPQSSL"
        return PipelineConfig(
            method=method,
            propagation=self.propagation_params(),
            k_neighbors=self.k_neighbors,
            qubit_count=self.qubit_count,
            layer_count=self.layer_count,
            label_rate=self.label_rate,
            seed=seed,
        )

    def echo(self) -> dict:
        """The JSON-ready identity of this experiment (no output location)."""
        out = asdict(self)
        out.pop("out_dir")
        out["seeds"] = list(self.seeds)
        return out

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        """Read a config from a JSON object file, rejecting unknown keys."""
        text = Path(path).read_text()
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(
                f"config parse error at line {exc.lineno}, column {exc.colno}: "
                f"{exc.msg}"
            ) from exc
        if not isinstance(payload, dict):
            raise ValueError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(payload) - known)
        if unknown:
            raise ValueError(f"unknown config key(s): {', '.join(unknown)}")
        if "dataset" not in payload:
            raise ValueError("config must name a dataset")
        if "seeds" in payload:
            payload = {**payload, "seeds": tuple(payload["seeds"])}
        return cls(**payload)


# ---------------------------------------------------------------------------
# Dataset registry
# ---------------------------------------------------------------------------

def data_root() -> Path:
    """Directory holding builtin datasets; QGSSL_DATA_DIR overrides it."""
    override = os.environ.get(DATA_DIR_ENV)
    if override:
        return Path(override)
    return Path(str(resources.files("qgssl") / "data"))


def resolve_dataset(spec: str) -> Dataset:
    """Load a dataset from a builtin name or a CSV path.

    A spec ending in ``.csv`` is treated as a file path whose schema sits
    next to it as ``<stem>.schema.json``.  Anything else must be a builtin
    name (or shadow one under the QGSSL_DATA_DIR override).
    """
    path = Path(spec)
    if path.suffix.lower() == ".csv":
        if not path.exists():
            raise FileNotFoundError(f"dataset file not found: {path}")
        schema = path.with_name(path.stem + ".schema.json")
        if not schema.exists():
            raise FileNotFoundError(f"missing schema next to dataset: {schema}")
        return load_dataset(path, schema)
    if spec in BUILTIN_DATASETS or os.environ.get(DATA_DIR_ENV):
        root = data_root()
        csv_path = root / f"{spec}.csv"
        if not csv_path.exists():
            raise FileNotFoundError(f"dataset '{spec}' not found under {root}")
        return load_dataset(csv_path, root / f"{spec}.schema.json")
    raise ValueError(
        f"unknown dataset '{spec}': use one of {BUILTIN_DATASETS} or a CSV path"
    )


# ---------------------------------------------------------------------------
# Running experiments
# ---------------------------------------------------------------------------

_BASELINES = {
    "label_propagation": label_propagation_baseline,
    "label_spreading": label_spreading_baseline,
}


def _standardize(dataset: Dataset) -> Dataset:
    return Dataset(
        features=standardize_features(dataset.features),
        labels=dataset.labels,
        labeled_mask=dataset.labeled_mask,
        class_count=dataset.class_count,
        name=dataset.name,
    )


def _run_baseline(dataset: Dataset, config: ExperimentConfig, seed: int):
    """Classical propagation baselines, scored like the quantum pipelines."""
    started = time.perf_counter()
    masked = mask_labels(_standardize(dataset), config.label_rate, seed)
    unlabeled = ~masked.labeled_mask
    if not unlabeled.any():
        raise ValueError("nothing to evaluate: every node is labeled")
    graph = build_knn_graph(masked, config.k_neighbors)
    propagate = _BASELINES[config.method]
    U = propagate(graph, masked, tol=config.epsilon, max_iter=config.max_iter)
    predictions = assign_labels(U)
    scores = normalize_scores(U.U[unlabeled])
    report = metrics_report(dataset.labels[unlabeled], predictions[unlabeled], scores)
    return ExperimentResult.build(
        config=config.echo(),
        predictions={seed: predictions},
        per_seed_metrics={seed: report},
        diagnostics={seed: None},
        wall_clock_seconds=time.perf_counter() - started,
        run_info={seed: {}},
    )


def _run_seed(dataset: Dataset, config: ExperimentConfig, seed: int):
    if config.method == "IPQSSL":
        return ipqssl_pipeline(dataset, config.pipeline_config(seed))
    if config.method == "ILQSSL":
        return ilqssl_pipeline(dataset, config.pipeline_config(seed))
    return _run_baseline(dataset, config, seed)


def run_experiment(
    config: ExperimentConfig, dataset: Dataset | None = None
) -> ExperimentResult:
    """Run the configured method over every seed and merge the results."""
    if dataset is None:
        dataset = resolve_dataset(config.dataset)
    runs = [_run_seed(dataset, config, seed) for seed in config.seeds]
    return ExperimentResult.merge(runs, config=config.echo())


# ---------------------------------------------------------------------------
# Artifacts
# ---------------------------------------------------------------------------

def _diagnostics_summary(diag, info: dict):
    if diag is None:
        return None
    iterations = info.get("iterations", len(diag.per_iteration_entropy) - 1)
    return {
        "converged": bool(diag.converged),
        "iterations": int(iterations),
        "final_entropy": float(diag.final_entropy),
        "final_fidelity": float(diag.per_iteration_fidelity[-1]),
        "rb_score": None if diag.rb_score is None else float(diag.rb_score),
    }


def result_document(result: ExperimentResult) -> dict:
    """Render a merged experiment result as a plain-JSON document."""
    include_roc = bool(result.config.get("roc_curves", True))
    per_seed = {}
    for seed in result.seeds:
        report = result.per_seed_metrics[seed]
        metrics = {k: float(v) for k, v in _metric_scalars(report).items()}
        if include_roc:
            metrics["roc_curves"] = {
                str(cls): [[float(fpr), float(tpr)] for fpr, tpr in curve]
                for cls, curve in enumerate(report.roc_curves)
            }
        per_seed[str(seed)] = {
            "predictions": [int(v) for v in result.predictions[seed]],
            "metrics": metrics,
            "diagnostics": _diagnostics_summary(
                result.diagnostics[seed], result.run_info.get(seed, {})
            ),
        }
    return {
        "artifact_version": result.artifact_version,
        "schema_version": SCHEMA_VERSION,
        "created_at": datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        "wall_clock_seconds": float(result.wall_clock_seconds),
        "config": dict(result.config),
        "seeds": [int(s) for s in result.seeds],
        "per_seed": per_seed,
        "aggregate": {
            "mean": {k: float(v) for k, v in result.aggregate_mean.items()},
            "std": {k: float(v) for k, v in result.aggregate_std.items()},
        },
    }


def write_result(result: ExperimentResult, path) -> Path:
    """Write the result document as stable, sorted, indented JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = result_document(result)
    path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n")
    return path


def write_metrics_csv(result: ExperimentResult, path) -> Path:
    """Per-seed metric scalars plus mean/std rows, one column per metric."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    keys = sorted(result.aggregate_mean)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed"] + keys)
        for seed in result.seeds:
            scalars = _metric_scalars(result.per_seed_metrics[seed])
            writer.writerow([seed] + [repr(float(scalars[k])) for k in keys])
        writer.writerow(
            ["mean"] + [repr(float(result.aggregate_mean[k])) for k in keys]
        )
        writer.writerow(["std"] + [repr(float(result.aggregate_std[k])) for k in keys])
    return path


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

_REPORT_COLUMNS = (
    "dataset",
    "method",
    "seeds",
    "accuracy_mean",
    "accuracy_std",
    "precision_macro_mean",
    "recall_macro_mean",
    "f1_macro_mean",
    "auc_overall_mean",
    "auc_overall_std",
    "delta_accuracy_vs_label_propagation",
)


def make_report(results_dir, out_dir) -> Path:
    """Aggregate every result.json under ``results_dir`` into CSV tables.

    Writes ``report.csv`` (one row per dataset/method pair, IPQSSL rows
    carrying their accuracy delta against the label-propagation baseline on
    the same dataset) and ``roc_<dataset>.csv`` holding the lowest-seed
    IPQSSL ROC curves.  Returns the report.csv path.
    """
    results_dir = Path(results_dir)
    paths = sorted(results_dir.rglob("result.json"))
    if not paths:
        raise FileNotFoundError(f"no result.json files under {results_dir}")
    docs = [(path, json.loads(path.read_text())) for path in paths]
    versions = {doc.get("schema_version") for _, doc in docs}
    if versions != {SCHEMA_VERSION}:
        raise ValueError(
            f"mixed or unsupported schema version(s) {sorted(versions, key=str)}; "
            f"this reader handles version {SCHEMA_VERSION}"
        )

    groups: dict = {}
    roc_curves: dict = {}
    for _, doc in docs:
        dataset = Path(str(doc["config"].get("dataset", "unknown"))).stem
        method = doc["config"].get("method", "unknown")
        bucket = groups.setdefault((dataset, method), {})
        for seed_str, entry in doc["per_seed"].items():
            seed = int(seed_str)
            bucket[seed] = {
                k: v for k, v in entry["metrics"].items() if k != "roc_curves"
            }
            if method == "IPQSSL" and "roc_curves" in entry["metrics"]:
                kept = roc_curves.get(dataset)
                if kept is None or seed < kept[0]:
                    roc_curves[dataset] = (seed, entry["metrics"]["roc_curves"])

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def stat(bucket, key, reducer):
        values = np.array([bucket[s][key] for s in sorted(bucket)], dtype=float)
        if reducer == "mean":
            return float(values.mean())
        return float(values.std(ddof=1)) if values.size > 1 else 0.0

    report_path = out_dir / "report.csv"
    with open(report_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_REPORT_COLUMNS)
        for dataset, method in sorted(groups):
            bucket = groups[(dataset, method)]
            delta = ""
            baseline = groups.get((dataset, "label_propagation"))
            if method == "IPQSSL" and baseline:
                delta = repr(
                    stat(bucket, "accuracy", "mean")
                    - stat(baseline, "accuracy", "mean")
                )
            writer.writerow(
                [
                    dataset,
                    method,
                    ";".join(str(s) for s in sorted(bucket)),
                    repr(stat(bucket, "accuracy", "mean")),
                    repr(stat(bucket, "accuracy", "std")),
                    repr(stat(bucket, "precision_macro", "mean")),
                    repr(stat(bucket, "recall_macro", "mean")),
                    repr(stat(bucket, "f1_macro", "mean")),
                    repr(stat(bucket, "auc_overall", "mean")),
                    repr(stat(bucket, "auc_overall", "std")),
                    delta,
                ]
            )

    for dataset in sorted(roc_curves):
        _, curves = roc_curves[dataset]
        with open(out_dir / f"roc_{dataset}.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["class", "fpr", "tpr"])
            for cls in sorted(curves, key=int):
                for fpr, tpr in curves[cls]:
                    writer.writerow([cls, repr(float(fpr)), repr(float(tpr))])

    return report_path
