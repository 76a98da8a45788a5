"""Image dataset loading.

A dataset is a directory containing ``dataset.json`` plus the image files it
references:

    {"task": "classification",
     "images": [{"file": "img0.png", "label": 3}, ...]}

    {"task": "detection",
     "images": [{"file": "img0.png",
                 "boxes": [{"class": 0, "x_min": 1, "y_min": 2,
                            "x_max": 10, "y_max": 12}]}, ...]}

Image dimensions come from the files themselves. Pixels are decoded as RGB
and scaled to [0, 1]; samples are processed in manifest order so extraction
is deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image


@dataclass(frozen=True)
class BoxAnnotation:
    class_id: int
    x_min: float
    y_min: float
    x_max: float
    y_max: float


@dataclass(frozen=True)
class Sample:
    image_id: str
    pixels: np.ndarray  # (3, H, W) float32 in [0, 1]
    label: int | None = None
    boxes: list[BoxAnnotation] = field(default_factory=list)

    @property
    def height(self) -> int:
        return self.pixels.shape[1]

    @property
    def width(self) -> int:
        return self.pixels.shape[2]


@dataclass(frozen=True)
class Dataset:
    task: str
    samples: list[Sample]


def _decode_image(path: Path) -> np.ndarray:
    with Image.open(path) as img:
        rgb = img.convert("RGB")
        array = np.asarray(rgb, dtype=np.float32) / 255.0
    return np.transpose(array, (2, 0, 1))


def load_dataset(dataset_dir) -> Dataset:
    root = Path(dataset_dir)
    manifest_path = root / "dataset.json"
    with open(manifest_path, "r", encoding="utf-8") as handle:
        doc = json.load(handle)
    task = doc.get("task")
    if task not in ("classification", "detection"):
        raise ValueError(f"{manifest_path}: task must be classification or detection")
    entries = doc.get("images")
    if not isinstance(entries, list) or not entries:
        raise ValueError(f"{manifest_path}: 'images' must be a nonempty array")

    samples = []
    for entry in entries:
        file_name = entry["file"]
        pixels = _decode_image(root / file_name)
        if task == "classification":
            samples.append(
                Sample(image_id=file_name, pixels=pixels, label=int(entry["label"]))
            )
        else:
            boxes = [
                BoxAnnotation(
                    class_id=int(b["class"]),
                    x_min=float(b["x_min"]),
                    y_min=float(b["y_min"]),
                    x_max=float(b["x_max"]),
                    y_max=float(b["y_max"]),
                )
                for b in entry["boxes"]
            ]
            samples.append(Sample(image_id=file_name, pixels=pixels, boxes=boxes))
    return Dataset(task=task, samples=samples)
