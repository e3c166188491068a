"""Result containers shared by the pipelines and the experiment harness.

An ExperimentResult collects everything one experiment produced over one
or more seeds: the configuration echo, per-seed predictions, per-seed
metric reports with their mean/std aggregation, and the quantum
diagnostics recorded along the way.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ARTIFACT_VERSION = "0.1.0"
SCHEMA_VERSION = 1

__all__ = ["ARTIFACT_VERSION", "SCHEMA_VERSION", "ExperimentResult", "aggregate_metrics"]


def _metric_scalars(report) -> dict:
    """Flatten a MetricsReport into named scalars (per-class entries included)."""
    out = {
        "accuracy": report.accuracy,
        "precision_macro": report.precision_macro,
        "recall_macro": report.recall_macro,
        "f1_macro": report.f1_macro,
        "auc_overall": report.auc_overall,
    }
    for c, value in enumerate(report.auc_per_class):
        out[f"auc_class_{c}"] = float(value)
    for c, value in enumerate(report.ks_per_class):
        out[f"ks_class_{c}"] = float(value)
    return out


def aggregate_metrics(reports: list) -> tuple[dict, dict]:
    """Mean and sample std (ddof=0 for a single run) of each metric scalar."""
    if not reports:
        raise ValueError("nothing to aggregate")
    rows = [_metric_scalars(r) for r in reports]
    keys = rows[0].keys()
    if any(r.keys() != keys for r in rows):
        raise ValueError("metric reports disagree on class count")
    mean = {}
    std = {}
    for key in keys:
        values = np.array([r[key] for r in rows], dtype=float)
        mean[key] = float(values.mean())
        std[key] = float(values.std(ddof=1)) if len(values) > 1 else 0.0
    return mean, std


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    """Everything produced by one experiment over its seed list."""

    config: dict
    seeds: tuple
    predictions: dict
    per_seed_metrics: dict
    diagnostics: dict
    aggregate_mean: dict
    aggregate_std: dict
    wall_clock_seconds: float
    run_info: dict = field(default_factory=dict)
    artifact_version: str = ARTIFACT_VERSION

    def __post_init__(self):
        seed_set = set(self.seeds)
        if not seed_set:
            raise ValueError("result must cover at least one seed")
        if len(seed_set) != len(self.seeds):
            raise ValueError("duplicate seeds")
        for name, mapping in (
            ("predictions", self.predictions),
            ("per_seed_metrics", self.per_seed_metrics),
            ("diagnostics", self.diagnostics),
        ):
            if set(mapping) != seed_set:
                raise ValueError(f"{name} keys must match the seed list")

    @classmethod
    def build(
        cls,
        config: dict,
        predictions: dict,
        per_seed_metrics: dict,
        diagnostics: dict,
        wall_clock_seconds: float,
        run_info: dict | None = None,
    ) -> "ExperimentResult":
        seeds = tuple(sorted(predictions))
        mean, std = aggregate_metrics([per_seed_metrics[s] for s in seeds])
        return cls(
            config=config,
            seeds=seeds,
            predictions=predictions,
            per_seed_metrics=per_seed_metrics,
            diagnostics=diagnostics,
            aggregate_mean=mean,
            aggregate_std=std,
            wall_clock_seconds=wall_clock_seconds,
            run_info=run_info or {},
        )

    @staticmethod
    def merge(results: list, config: dict | None = None) -> "ExperimentResult":
        """Combine single-seed results for the same experiment into one.

        ``config`` replaces the per-seed config echo (which differs in its
        seed field); by default the first result's echo is kept.
        """
        if not results:
            raise ValueError("nothing to merge")
        predictions = {}
        per_seed_metrics = {}
        diagnostics = {}
        run_info = {}
        for r in results:
            predictions.update(r.predictions)
            per_seed_metrics.update(r.per_seed_metrics)
            diagnostics.update(r.diagnostics)
            run_info.update(r.run_info)
        return ExperimentResult.build(
            config=results[0].config if config is None else config,
            predictions=predictions,
            per_seed_metrics=per_seed_metrics,
            diagnostics=diagnostics,
            wall_clock_seconds=float(sum(r.wall_clock_seconds for r in results)),
            run_info=run_info,
        )
