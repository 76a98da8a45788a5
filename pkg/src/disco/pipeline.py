"""End-to-end scoring flows shared by the command-line interface.

Each flow returns a plain dict ready for JSON serialization; dict insertion
order is deterministic so reports are byte-stable across runs.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from . import io
from .classification import disco_cls
from .errors import DiscoError, InvalidInput, StageError
from .ranking import kendall_tau, tie_adjusted_tau, top_k_hit, weighted_kendall_tau
from .regression import HubScoreTable, combine_detection, disco_reg
from .sampling import select_hard_examples
from .spectral import spectral_change_profile

TASKS = ("cls", "det")


@dataclass
class RunConfig:
    """Knobs of one scoring run.

    ``pca_dim`` = 0 disables the PCA stage entirely (no reduction, no
    centering). ``seed`` only feeds optional synthetic-data generators; the
    scoring path itself is deterministic and never draws random numbers.
    """

    task: str = "cls"
    groups: int = 8
    pca_dim: int = 128
    sample_ratio: float | None = None
    rcond: float | None = None
    seed: int | None = None
    pooled_side: int = 2
    jobs: int | None = None

    def validate(self) -> None:
        if self.task not in TASKS:
            raise InvalidInput(f"task must be one of {TASKS}, got {self.task!r}")
        if self.groups < 1:
            raise InvalidInput(f"groups must be >= 1, got {self.groups}")
        if self.pca_dim < 0:
            raise InvalidInput(f"pca-dim must be >= 0, got {self.pca_dim}")
        if self.sample_ratio is not None and not 0.0 < self.sample_ratio <= 1.0:
            raise InvalidInput(f"sample-ratio must be in (0, 1], got {self.sample_ratio}")
        if self.pooled_side < 1:
            raise InvalidInput(f"pooled-side must be >= 1, got {self.pooled_side}")
        if self.task == "det" and self.sample_ratio is not None:
            raise InvalidInput("hard-example sampling applies to classification only")

    def echo(self) -> dict:
        return {
            "task": self.task,
            "groups": self.groups,
            "pca_dim": self.pca_dim,
            "sample_ratio": self.sample_ratio,
            "rcond": self.rcond,
            "seed": self.seed,
        }


@contextmanager
def stage(name: str):
    """Tag any toolkit error with the pipeline stage it came from."""
    try:
        yield
    except StageError:
        raise
    except DiscoError as exc:
        raise StageError(name, exc) from exc


def _apply_pca(features: np.ndarray, config: RunConfig) -> tuple[np.ndarray, str | None]:
    if config.pca_dim == 0:
        return features, "pca disabled"
    with stage("pca"):
        reduced, model = io.pca_fit_transform(features, config.pca_dim)
    return reduced, model.note


def score_classification_arrays(features: np.ndarray, labels: np.ndarray, config: RunConfig) -> dict:
    """Sampling -> PCA -> spectral scoring for one classification model."""
    config.validate()
    n_input, dim_input = features.shape
    sampling_info = None
    if config.sample_ratio is not None and config.sample_ratio < 1.0:
        with stage("hard-example-sampling"):
            selection = select_hard_examples(features, labels, config.sample_ratio)
        features = features[selection.indices]
        labels = labels[selection.indices]
        sampling_info = {
            "ratio": config.sample_ratio,
            "selected": int(selection.indices.shape[0]),
        }
    features, pca_note = _apply_pca(features, config)
    with stage("classification-score"):
        report = disco_cls(features, labels, config.groups)
    return {
        "task": "cls",
        "config": config.echo(),
        "n_samples": n_input,
        "dim": dim_input,
        "scored_samples": int(features.shape[0]),
        "scored_dim": int(features.shape[1]),
        "sampling": sampling_info,
        "pca_note": pca_note,
        "per_group": {
            "S_ratio": report.per_group_ratio.tolist(),
            "S_ncc": report.per_group_ncc.tolist(),
        },
        "final": {"S_cls": report.final},
    }


def score_detection_arrays(maps, labels: io.DetectionLabels, config: RunConfig) -> dict:
    """Box features -> PCA -> spectral scoring for one detection model."""
    config.validate()
    with stage("box-features"):
        features, targets = io.build_box_features(maps, labels, config.pooled_side)
    box_count, dim_input = features.shape
    features, pca_note = _apply_pca(features, config)
    with stage("regression-score"):
        reg = disco_reg(features, targets.boxes, config.groups)
    with stage("classification-score"):
        cls = disco_cls(features, targets.box_classes, config.groups)
    return {
        "task": "det",
        "config": config.echo(),
        "n_images": len(labels.images),
        "n_boxes": box_count,
        "dim": dim_input,
        "scored_dim": int(features.shape[1]),
        "pca_note": pca_note,
        "per_group": {
            "S_ratio": reg.per_group_ratio.tolist(),
            "S_ncc": cls.per_group_ncc.tolist(),
            "S_lr": reg.per_group_lr.tolist(),
        },
        "final": {"S_cls": cls.final, "S_reg": reg.final},
    }


def run_score(features_path, labels_path, config: RunConfig) -> dict:
    """Score one model from its feature and label files."""
    config.validate()
    with stage("load-labels"):
        labels = io.load_labels(labels_path)
    if config.task == "cls":
        if not isinstance(labels, io.ClassificationLabels):
            raise StageError(
                "load-labels", InvalidInput("label file is not a classification file")
            )
        with stage("load-features"):
            features = io.load_features(features_path)
        if features.shape[0] != labels.labels.shape[0]:
            raise StageError(
                "load-features",
                InvalidInput(
                    f"{features.shape[0]} feature rows vs {labels.labels.shape[0]} labels"
                ),
            )
        return score_classification_arrays(features, labels.labels, config)
    if not isinstance(labels, io.DetectionLabels):
        raise StageError("load-labels", InvalidInput("label file is not a detection file"))
    with stage("load-features"):
        maps = io.load_feature_maps(features_path)
    return score_detection_arrays(maps, labels, config)


def run_rank(manifest_path, config: RunConfig) -> dict:
    """Score every model in a hub manifest and rank them."""
    config.validate()
    with stage("load-manifest"):
        entries = io.load_manifest(manifest_path)

    def score_one(entry: io.ManifestEntry):
        return run_score(entry.features_path, entry.labels_path, config)

    workers = config.jobs or os.cpu_count() or 1
    results: list[dict | None] = [None] * len(entries)
    failures = []
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(score_one, e): i for i, e in enumerate(entries)}
        for future, index in futures.items():
            try:
                results[index] = future.result()
            except Exception as exc:  # per-model failures must not sink the hub
                failures.append({"model_id": entries[index].model_id, "error": str(exc)})

    scored = [(e, r) for e, r in zip(entries, results) if r is not None]
    if len(scored) < 2:
        raise StageError(
            "rank", InvalidInput(f"only {len(scored)} models scored successfully, need >= 2")
        )

    model_ids = tuple(e.model_id for e, _ in scored)
    cls_scores = np.array([r["final"]["S_cls"] for _, r in scored])
    if config.task == "det":
        reg_scores = np.array([r["final"]["S_reg"] for _, r in scored])
        table = combine_detection(
            HubScoreTable(model_ids=model_ids, cls_scores=cls_scores, reg_scores=reg_scores)
        )
        ranking_key = table.combined
    else:
        table = None
        ranking_key = cls_scores

    order = sorted(range(len(scored)), key=lambda i: (-ranking_key[i], model_ids[i]))
    ranks = np.empty(len(scored), dtype=np.int64)
    for position, index in enumerate(order):
        if position > 0 and ranking_key[index] == ranking_key[order[position - 1]]:
            ranks[index] = ranks[order[position - 1]]
        else:
            ranks[index] = position + 1

    models = []
    for index in order:
        entry, report = scored[index]
        row = {
            "model_id": entry.model_id,
            "rank": int(ranks[index]),
            "S_cls": float(cls_scores[index]),
        }
        if table is not None:
            row["S_reg"] = float(table.reg_scores[index])
            row["S_obj"] = float(table.combined[index])
        row["report"] = report
        models.append(row)

    seen: dict[float, list[str]] = {}
    for index in order:
        seen.setdefault(float(ranking_key[index]), []).append(model_ids[index])
    tie_groups = [ids for ids in seen.values() if len(ids) > 1]

    return {
        "task": config.task,
        "config": config.echo(),
        "models": models,
        "ties": tie_groups,
        "failures": failures,
    }


def run_eval(benchmark_path, tolerance_pct: float = 0.1) -> dict:
    """Correlation metrics between scores and ground-truth performances."""
    with stage("load-benchmark"):
        record = io.load_benchmark(benchmark_path)
    with stage("rank-eval"):
        result = {
            "model_count": record.model_count,
            "tau": kendall_tau(record),
            "weighted_tau": weighted_kendall_tau(record),
            "tie_adjusted_weighted_tau": tie_adjusted_tau(record, tolerance_pct),
            "tie_tolerance": tolerance_pct,
            "top_k_hits": {
                str(k): top_k_hit(record, k)
                for k in (1, 2, 3)
                if k <= record.model_count
            },
        }
    return result


def run_analyze(before_path, after_path, groups: int) -> dict:
    """Per-group change diagnostics between two aligned feature files."""
    with stage("load-features"):
        before = io.load_features(before_path)
        after = io.load_features(after_path)
    with stage("spectral-change"):
        profile = spectral_change_profile(before, after, groups)
    return {
        "groups": groups,
        "per_group": {
            "frobenius_change": profile.per_group_frobenius_change.tolist(),
            "ratio_before": profile.per_group_ratio_before.tolist(),
            "ratio_after": profile.per_group_ratio_after.tolist(),
        },
    }


def analyze_csv(report: dict) -> str:
    """CSV mirror of an analyze report, one row per group."""
    lines = ["group,frobenius_change,ratio_before,ratio_after"]
    per_group = report["per_group"]
    for g in range(report["groups"]):
        lines.append(
            f"{g},{per_group['frobenius_change'][g]!r},"
            f"{per_group['ratio_before'][g]!r},{per_group['ratio_after'][g]!r}"
        )
    return "\n".join(lines) + "\n"


def run_sample(features_path, labels_path, ratio: float) -> dict:
    """Hard-example selection over a classification feature file."""
    with stage("load-labels"):
        labels = io.load_labels(labels_path)
    if not isinstance(labels, io.ClassificationLabels):
        raise StageError("load-labels", InvalidInput("sampling requires classification labels"))
    with stage("load-features"):
        features = io.load_features(features_path)
    with stage("hard-example-sampling"):
        selection = select_hard_examples(features, labels.labels, ratio)
    return {
        "ratio": ratio,
        "n_total": int(features.shape[0]),
        "n_selected": int(selection.indices.shape[0]),
        "per_class_counts": selection.per_class_counts.tolist(),
        "indices": selection.indices.tolist(),
    }
