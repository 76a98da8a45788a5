"""Extraction jobs: run a model over a dataset, write feature and label files.

Outputs use the scoring toolkit's external interfaces only: FMX1 feature
files, the label JSON schema, and a hub manifest JSON of
{model_id, features, labels} entries with paths relative to the output
directory. The scoring toolkit itself is never imported.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from . import fmx
from .datasets import Dataset, Sample, load_dataset
from .models import resolve


@dataclass(frozen=True)
class ExtractionJob:
    model_name: str
    dataset_path: str | Path
    layer: str = "penultimate"
    batch_size: int = 8
    output_dir: str | Path = "extracted"


@dataclass(frozen=True)
class ExtractionResult:
    model_id: str
    features_path: Path
    labels_path: Path
    n_samples: int


def _safe_name(model_name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "-", model_name)


def _batched(samples: list[Sample], batch_size: int):
    """Consecutive same-shaped samples grouped up to batch_size."""
    start = 0
    while start < len(samples):
        end = start + 1
        shape = samples[start].pixels.shape
        while (
            end < len(samples)
            and end - start < batch_size
            and samples[end].pixels.shape == shape
        ):
            end += 1
        yield samples[start:end]
        start = end


def _forward(adapter, resize, samples: list[Sample], layer: str, batch_size: int):
    outputs = []
    with torch.no_grad():
        for group in _batched(samples, batch_size):
            batch = torch.from_numpy(np.stack([s.pixels for s in group]))
            if resize is not None:
                batch = F.interpolate(
                    batch, size=(resize, resize), mode="bilinear", align_corners=False
                )
            if layer == "penultimate":
                out = adapter.penultimate(batch)
            else:
                out = adapter.spatial(batch, layer)
            outputs.extend(tensor.numpy() for tensor in out)
    return outputs


def _write_labels(dataset: Dataset, path: Path) -> None:
    if dataset.task == "classification":
        doc = {"task": "classification", "labels": [s.label for s in dataset.samples]}
    else:
        doc = {
            "task": "detection",
            "images": [
                {
                    "image_id": s.image_id,
                    "width": s.width,
                    "height": s.height,
                    "boxes": [
                        {
                            "class": b.class_id,
                            "x_min": b.x_min,
                            "y_min": b.y_min,
                            "x_max": b.x_max,
                            "y_max": b.y_max,
                        }
                        for b in s.boxes
                    ],
                }
                for s in dataset.samples
            ],
        }
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _upsert_manifest(output_dir: Path, model_id: str, features_name: str, labels_name: str) -> None:
    manifest_path = output_dir / "manifest.json"
    entries = []
    if manifest_path.exists():
        entries = json.loads(manifest_path.read_text(encoding="utf-8"))
    entries = [e for e in entries if e.get("model_id") != model_id]
    entries.append({"model_id": model_id, "features": features_name, "labels": labels_name})
    manifest_path.write_text(json.dumps(entries, indent=2) + "\n", encoding="utf-8")


def extract(job: ExtractionJob) -> ExtractionResult:
    """Run one model over one dataset and write its feature and label files."""
    dataset = load_dataset(job.dataset_path)
    adapter, resize = resolve(job.model_name)
    outputs = _forward(adapter, resize, dataset.samples, job.layer, job.batch_size)

    output_dir = Path(job.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    model_id = _safe_name(job.model_name)
    features_path = output_dir / f"{model_id}.fmx"
    if job.layer == "penultimate":
        fmx.write_matrix(np.stack(outputs), features_path)
    else:
        fmx.write_maps(outputs, features_path)

    labels_path = output_dir / "labels.json"
    _write_labels(dataset, labels_path)
    _upsert_manifest(output_dir, model_id, features_path.name, labels_path.name)
    return ExtractionResult(
        model_id=model_id,
        features_path=features_path,
        labels_path=labels_path,
        n_samples=len(dataset.samples),
    )


def extract_batch(jobs: list[ExtractionJob]) -> tuple[list[ExtractionResult], list[dict]]:
    """Run every job; failures are reported per model, never abort the batch."""
    results = []
    failures = []
    for job in jobs:
        try:
            results.append(extract(job))
        except Exception as exc:
            failures.append({"model": job.model_name, "error": str(exc)})
    return results, failures
