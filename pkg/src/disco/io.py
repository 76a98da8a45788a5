"""Interchange formats and feature preprocessing.

FMX1 binary layout (little-endian throughout), one record:

    offset  size          field
    0       4             magic, ASCII "FMX1"
    4       1             dtype code; 1 = IEEE 754 float32
    5       1             rank; 2 (matrix) or 3 (spatial map)
    6       4 * rank      dims, uint32 each
    ...     4 * prod(dim) payload, float32, row-major (C order)

A classification feature file holds exactly one rank-2 record (N x d).
A detection feature file holds one rank-3 record (C x H x W) per image,
records back to back; channel counts must agree, H and W may vary.

Label files are UTF-8 JSON:

    {"task": "classification", "labels": [0, 2, 1, ...]}
    {"task": "detection", "images": [{"image_id": "...", "width": W,
        "height": H, "boxes": [{"class": c, "x_min": ..., "y_min": ...,
        "x_max": ..., "y_max": ...}]}]}

Detection box coordinates are pixels within the image; class indices must be
dense in [0, C).
"""

from __future__ import annotations

import json
import math
import os
import struct
import tempfile
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, InvalidInput
from .regression import DetectionTargets
from .spectral import as_feature_matrix

FMX_MAGIC = b"FMX1"
DTYPE_FLOAT32 = 1


class DegenerateCropWarning(UserWarning):
    """A box collapsed to zero feature cells and was expanded to one."""


# ---------------------------------------------------------------------------
# FMX1 feature files


def _write_record(handle, array: np.ndarray) -> None:
    with np.errstate(over="ignore"):  # overflow is detected and raised below
        payload = np.ascontiguousarray(array, dtype="<f4")
    if not np.all(np.isfinite(payload)):
        raise InvalidInput("values exceed the float32 range or are non-finite")
    handle.write(FMX_MAGIC)
    handle.write(struct.pack("<BB", DTYPE_FLOAT32, payload.ndim))
    handle.write(struct.pack(f"<{payload.ndim}I", *payload.shape))
    handle.write(payload.tobytes())


def _read_record(handle, path) -> np.ndarray:
    start = handle.tell()
    magic = handle.read(4)
    if magic != FMX_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}", offset=start)
    header = handle.read(2)
    if len(header) < 2:
        raise FormatError(f"{path}: truncated header", offset=start + 4)
    dtype_code, rank = struct.unpack("<BB", header)
    if dtype_code != DTYPE_FLOAT32:
        raise FormatError(f"{path}: unknown dtype code {dtype_code}", offset=start + 4)
    if rank not in (2, 3):
        raise FormatError(f"{path}: rank must be 2 or 3, got {rank}", offset=start + 5)
    dims_raw = handle.read(4 * rank)
    if len(dims_raw) < 4 * rank:
        raise FormatError(f"{path}: truncated dims", offset=start + 6)
    dims = struct.unpack(f"<{rank}I", dims_raw)
    if any(d == 0 for d in dims):
        raise FormatError(f"{path}: zero-sized dimension {dims}", offset=start + 6)
    count = math.prod(dims)
    payload_offset = start + 6 + 4 * rank
    payload = handle.read(4 * count)
    if len(payload) < 4 * count:
        raise FormatError(
            f"{path}: truncated payload, expected {4 * count} bytes, got {len(payload)}",
            offset=payload_offset + len(payload),
        )
    values = np.frombuffer(payload, dtype="<f4").reshape(dims)
    bad = np.nonzero(~np.isfinite(values.ravel()))[0]
    if bad.size:
        raise FormatError(
            f"{path}: non-finite value in payload",
            offset=payload_offset + 4 * int(bad[0]),
        )
    return values.astype(np.float64)


def save_features(matrix, path) -> None:
    """Write one N x d matrix as a single-record FMX1 file."""
    arr = as_feature_matrix(matrix)
    with _atomic_binary(path) as handle:
        _write_record(handle, arr)


def load_features(path) -> np.ndarray:
    """Load a single-record rank-2 FMX1 file as a float64 matrix."""
    with open(path, "rb") as handle:
        record = _read_record(handle, path)
        if record.ndim != 2:
            raise FormatError(f"{path}: expected a rank-2 record, got rank {record.ndim}")
        trailing = handle.tell()
        if handle.read(1):
            raise FormatError(f"{path}: trailing data after record", offset=trailing)
    return record


def save_feature_maps(maps, path) -> None:
    """Write per-image C x H x W maps as consecutive rank-3 FMX1 records."""
    arrays = [np.asarray(m, dtype=np.float64) for m in maps]
    if not arrays:
        raise InvalidInput("at least one spatial map is required")
    for m in arrays:
        if m.ndim != 3 or min(m.shape) < 1:
            raise InvalidInput(f"each map must be a nonempty 3-D array, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidInput("spatial map contains non-finite values")
    with _atomic_binary(path) as handle:
        for m in arrays:
            _write_record(handle, m)


def load_feature_maps(path) -> list[np.ndarray]:
    """Load every rank-3 record of an FMX1 file, in order."""
    maps: list[np.ndarray] = []
    size = os.path.getsize(path)
    with open(path, "rb") as handle:
        while handle.tell() < size:
            record = _read_record(handle, path)
            if record.ndim != 3:
                raise FormatError(
                    f"{path}: expected rank-3 records, got rank {record.ndim}"
                )
            maps.append(record)
    if not maps:
        raise FormatError(f"{path}: empty file", offset=0)
    return maps


# ---------------------------------------------------------------------------
# Label files


@dataclass(frozen=True)
class ClassificationLabels:
    labels: np.ndarray

    @property
    def class_count(self) -> int:
        return int(self.labels.max()) + 1


@dataclass(frozen=True)
class Box:
    class_id: int
    x_min: float
    y_min: float
    x_max: float
    y_max: float


@dataclass(frozen=True)
class ImageAnnotation:
    image_id: str
    width: int
    height: int
    boxes: list[Box] = field(default_factory=list)


@dataclass(frozen=True)
class DetectionLabels:
    images: list[ImageAnnotation]

    @property
    def total_boxes(self) -> int:
        return sum(len(img.boxes) for img in self.images)


def _require_dense(class_ids: np.ndarray, path) -> None:
    present = set(int(c) for c in class_ids)
    if min(present) < 0:
        raise FormatError(f"{path}: negative class index")
    expected = set(range(max(present) + 1))
    if present != expected:
        raise FormatError(
            f"{path}: class indices must be dense in [0, C); missing {sorted(expected - present)}"
        )


def load_labels(path) -> ClassificationLabels | DetectionLabels:
    """Load and validate a label file of either task."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "task" not in doc:
        raise FormatError(f"{path}: missing 'task' field")
    task = doc["task"]
    if task == "classification":
        labels = doc.get("labels")
        if not isinstance(labels, list) or not labels:
            raise FormatError(f"{path}: 'labels' must be a nonempty array")
        arr = np.asarray(labels)
        if not np.issubdtype(arr.dtype, np.integer):
            raise FormatError(f"{path}: labels must be integers")
        _require_dense(arr, path)
        return ClassificationLabels(labels=arr.astype(np.int64))
    if task == "detection":
        images_doc = doc.get("images")
        if not isinstance(images_doc, list) or not images_doc:
            raise FormatError(f"{path}: 'images' must be a nonempty array")
        images = []
        all_classes = []
        for entry in images_doc:
            try:
                width, height = int(entry["width"]), int(entry["height"])
                image_id = str(entry["image_id"])
                boxes_doc = entry["boxes"]
            except (KeyError, TypeError, ValueError) as exc:
                raise FormatError(f"{path}: malformed image entry: {exc}") from exc
            if width < 1 or height < 1:
                raise FormatError(f"{path}: image '{image_id}' has empty dimensions")
            boxes = []
            for b in boxes_doc:
                try:
                    box = Box(
                        class_id=int(b["class"]),
                        x_min=float(b["x_min"]),
                        y_min=float(b["y_min"]),
                        x_max=float(b["x_max"]),
                        y_max=float(b["y_max"]),
                    )
                except (KeyError, TypeError, ValueError) as exc:
                    raise FormatError(f"{path}: malformed box: {exc}") from exc
                if not (0 <= box.x_min <= box.x_max <= width):
                    raise FormatError(
                        f"{path}: box x-range [{box.x_min}, {box.x_max}] outside image '{image_id}'"
                    )
                if not (0 <= box.y_min <= box.y_max <= height):
                    raise FormatError(
                        f"{path}: box y-range [{box.y_min}, {box.y_max}] outside image '{image_id}'"
                    )
                boxes.append(box)
                all_classes.append(box.class_id)
            images.append(
                ImageAnnotation(image_id=image_id, width=width, height=height, boxes=boxes)
            )
        if not all_classes:
            raise FormatError(f"{path}: detection labels contain no boxes")
        _require_dense(np.asarray(all_classes), path)
        return DetectionLabels(images=images)
    raise FormatError(f"{path}: unknown task {task!r}")


def save_classification_labels(labels, path) -> None:
    arr = np.asarray(labels, dtype=np.int64)
    write_json_atomic({"task": "classification", "labels": arr.tolist()}, path)


def save_detection_labels(det: DetectionLabels, path) -> None:
    doc = {
        "task": "detection",
        "images": [
            {
                "image_id": img.image_id,
                "width": img.width,
                "height": img.height,
                "boxes": [
                    {
                        "class": b.class_id,
                        "x_min": b.x_min,
                        "y_min": b.y_min,
                        "x_max": b.x_max,
                        "y_max": b.y_max,
                    }
                    for b in img.boxes
                ],
            }
            for img in det.images
        ],
    }
    write_json_atomic(doc, path)


# ---------------------------------------------------------------------------
# PCA


@dataclass(frozen=True)
class PCAModel:
    mean: np.ndarray
    components: np.ndarray  # (d, p), orthonormal columns
    explained: np.ndarray   # nonincreasing variances
    note: str | None = None


def pca_fit_transform(features, target_dim: int = 128) -> tuple[np.ndarray, PCAModel]:
    """Center the features and project them onto their top principal axes.

    The output dimension is min(target_dim, d, N - 1). When d is already at
    most ``target_dim`` the centered input is passed through unchanged and the
    model records a note saying so.
    """
    matrix = as_feature_matrix(features)
    n, d = matrix.shape
    if n < 2:
        raise InvalidInput(f"PCA needs at least 2 samples, got {n}")
    if target_dim < 1:
        raise InvalidInput(f"target dimension must be positive, got {target_dim}")
    mean = matrix.mean(axis=0)
    centered = matrix - mean
    singulars = np.linalg.svd(centered, compute_uv=False)
    variances = singulars**2 / (n - 1)
    if d <= target_dim:
        model = PCAModel(
            mean=mean,
            components=np.eye(d),
            explained=variances,
            note=f"dimension {d} <= target {target_dim}; centered input passed through",
        )
        return centered, model
    p = min(target_dim, n - 1)
    _, _, vh = np.linalg.svd(centered, full_matrices=False)
    components = vh[:p].T
    model = PCAModel(mean=mean, components=components, explained=variances[:p])
    return centered @ components, model


# ---------------------------------------------------------------------------
# Detection box features


def adaptive_avg_pool(spatial_map, out_h: int, out_w: int) -> np.ndarray:
    """Average-pool a C x H x W map onto an out_h x out_w grid.

    Output cell (i, j) averages input rows [floor(i*H/out_h), ceil((i+1)*H/out_h))
    and the analogous column range, so the regions tile the input for any sizes.
    """
    m = np.asarray(spatial_map, dtype=np.float64)
    if m.ndim != 3 or min(m.shape) < 1:
        raise InvalidInput(f"expected a nonempty C x H x W map, got shape {m.shape}")
    if out_h < 1 or out_w < 1:
        raise InvalidInput(f"output sizes must be positive, got ({out_h}, {out_w})")
    channels, height, width = m.shape
    pooled = np.empty((channels, out_h, out_w))
    for i in range(out_h):
        r0 = (i * height) // out_h
        r1 = -((-(i + 1) * height) // out_h)
        for j in range(out_w):
            c0 = (j * width) // out_w
            c1 = -((-(j + 1) * width) // out_w)
            pooled[:, i, j] = m[:, r0:r1, c0:c1].mean(axis=(1, 2))
    return pooled


def _box_grid_range(low: float, high: float, cells: int, pixels: int) -> tuple[int, int, bool]:
    """Map a pixel interval onto feature-grid cells, rounding outward.

    A zero-width interval sitting exactly on a cell edge rounds to an empty
    range; it is expanded to the single nearest cell and flagged.
    """
    start = math.floor(low * cells / pixels)
    end = math.ceil(high * cells / pixels)
    if end <= start:
        start = min(max(start, 0), cells - 1)
        return start, start + 1, True
    return max(start, 0), min(end, cells), False


def build_box_features(
    maps, labels: DetectionLabels, pooled_side: int = 2
) -> tuple[np.ndarray, DetectionTargets]:
    """Pool a per-box crop of each image's spatial map into fixed-size rows.

    Rows are emitted in (image, box) order; each row is the channel-major
    flattening of the crop pooled to pooled_side x pooled_side, giving
    dimension C * pooled_side**2. Returned targets carry [0, 1]-normalized
    box coordinates, box classes, and box-to-image assignment.
    """
    arrays = [np.asarray(m, dtype=np.float64) for m in maps]
    if len(arrays) != len(labels.images):
        raise InvalidInput(
            f"{len(arrays)} maps for {len(labels.images)} annotated images"
        )
    if any(m.ndim != 3 for m in arrays):
        raise InvalidInput("each spatial map must be 3-D (C x H x W)")
    channel_counts = {m.shape[0] for m in arrays}
    if len(channel_counts) != 1:
        raise InvalidInput(f"maps disagree on channel count: {sorted(channel_counts)}")
    if pooled_side < 1:
        raise InvalidInput(f"pooled_side must be positive, got {pooled_side}")

    rows = []
    normalized = []
    classes = []
    image_index = []
    for idx, (m, annotation) in enumerate(zip(arrays, labels.images)):
        _, grid_h, grid_w = m.shape
        for box in annotation.boxes:
            c0, c1, expanded_x = _box_grid_range(box.x_min, box.x_max, grid_w, annotation.width)
            r0, r1, expanded_y = _box_grid_range(box.y_min, box.y_max, grid_h, annotation.height)
            if expanded_x or expanded_y:
                warnings.warn(
                    f"box {box} of image '{annotation.image_id}' covers no feature "
                    "cell; expanded to the nearest cell",
                    DegenerateCropWarning,
                    stacklevel=2,
                )
            crop = m[:, r0:r1, c0:c1]
            pooled = adaptive_avg_pool(crop, pooled_side, pooled_side)
            rows.append(pooled.ravel())
            normalized.append(
                (
                    box.x_min / annotation.width,
                    box.y_min / annotation.height,
                    box.x_max / annotation.width,
                    box.y_max / annotation.height,
                )
            )
            classes.append(box.class_id)
            image_index.append(idx)
    features = np.vstack(rows)
    targets = DetectionTargets(
        boxes=np.asarray(normalized, dtype=np.float64),
        box_classes=np.asarray(classes, dtype=np.int64),
        box_to_image=np.asarray(image_index, dtype=np.int64),
    )
    return features, targets


# ---------------------------------------------------------------------------
# Benchmark and hub manifest files


@dataclass(frozen=True)
class ManifestEntry:
    model_id: str
    features_path: Path
    labels_path: Path


def load_benchmark(path):
    """Load a benchmark JSON array of {model_id, score, performance} triples."""
    from .ranking import BenchmarkRecord

    try:
        with open(path, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, list):
        raise FormatError(f"{path}: expected a JSON array")
    ids, scores, performances = [], [], []
    for entry in doc:
        try:
            ids.append(str(entry["model_id"]))
            scores.append(float(entry["score"]))
            performances.append(float(entry["performance"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}: malformed benchmark entry: {exc}") from exc
    return BenchmarkRecord(
        model_ids=tuple(ids),
        scores=np.asarray(scores),
        performances=np.asarray(performances),
    )


def save_benchmark(record, path) -> None:
    doc = [
        {"model_id": mid, "score": float(s), "performance": float(p)}
        for mid, s, p in zip(record.model_ids, record.scores, record.performances)
    ]
    write_json_atomic(doc, path)


def load_manifest(path) -> list[ManifestEntry]:
    """Load a hub manifest; feature/label paths resolve relative to it."""
    base = Path(path).resolve().parent
    try:
        with open(path, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, list) or not doc:
        raise FormatError(f"{path}: expected a nonempty JSON array")
    entries = []
    for item in doc:
        try:
            entries.append(
                ManifestEntry(
                    model_id=str(item["model_id"]),
                    features_path=base / item["features"],
                    labels_path=base / item["labels"],
                )
            )
        except (KeyError, TypeError) as exc:
            raise FormatError(f"{path}: malformed manifest entry: {exc}") from exc
    return entries


# ---------------------------------------------------------------------------
# Atomic writers


class _atomic_binary:
    """Write to a temp file in the target directory, rename on success."""

    def __init__(self, path):
        self.path = Path(path)
        self._tmp = None
        self._handle = None

    def __enter__(self):
        fd, tmp = tempfile.mkstemp(dir=self.path.parent or ".", suffix=".tmp")
        self._tmp = tmp
        self._handle = os.fdopen(fd, "wb")
        return self._handle

    def __exit__(self, exc_type, exc, tb):
        self._handle.close()
        if exc_type is None:
            os.replace(self._tmp, self.path)
        else:
            os.unlink(self._tmp)
        return False


def write_text_atomic(text: str, path) -> None:
    with _atomic_binary(path) as handle:
        handle.write(text.encode("utf-8"))


def write_json_atomic(obj, path) -> None:
    write_text_atomic(json.dumps(obj, indent=2) + "\n", path)
