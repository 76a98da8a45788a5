"""Pseudo-inverse regression scoring of spectral components.

Targets (bounding-box coordinates) are approximated per group by projecting
them onto the group's left singular subspace; the negated mean squared error
of that approximation is the group's regression score.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpectrum, InsufficientModels, InvalidInput
from .spectral import (
    SpectralDecomposition,
    SpectralGrouping,
    _check_group_index,
    as_feature_matrix,
    group_ratios,
    make_grouping,
    svd,
)


@dataclass(frozen=True)
class DetectionTargets:
    """Bounding boxes normalized to [0, 1] plus class and image assignment."""

    boxes: np.ndarray         # (K, 4) as (x_min, y_min, x_max, y_max)
    box_classes: np.ndarray   # (K,)
    box_to_image: np.ndarray  # (K,)

    def __post_init__(self):
        boxes = np.asarray(self.boxes, dtype=np.float64)
        if boxes.ndim != 2 or boxes.shape[1] != 4 or boxes.shape[0] < 1:
            raise InvalidInput(f"boxes must be K x 4 with K >= 1, got {boxes.shape}")
        if boxes.min() < 0.0 or boxes.max() > 1.0:
            raise InvalidInput("box coordinates must lie in [0, 1]")
        if np.any(boxes[:, 0] > boxes[:, 2]) or np.any(boxes[:, 1] > boxes[:, 3]):
            raise InvalidInput("boxes must satisfy x_min <= x_max and y_min <= y_max")
        k = boxes.shape[0]
        for name in ("box_classes", "box_to_image"):
            vec = np.asarray(getattr(self, name))
            if vec.shape != (k,):
                raise InvalidInput(f"{name} must have shape ({k},), got {vec.shape}")
        object.__setattr__(self, "boxes", boxes)
        object.__setattr__(self, "box_classes", np.asarray(self.box_classes, dtype=np.int64))
        object.__setattr__(self, "box_to_image", np.asarray(self.box_to_image, dtype=np.int64))


@dataclass(frozen=True)
class RegressionScoreReport:
    per_group_lr: np.ndarray
    per_group_ratio: np.ndarray
    final: float


@dataclass(frozen=True)
class HubScoreTable:
    """Scores for every model in a hub; ``combined`` is filled by combine_detection."""

    model_ids: tuple[str, ...]
    cls_scores: np.ndarray
    reg_scores: np.ndarray
    combined: np.ndarray | None = None


def default_rcond(decomp: SpectralDecomposition) -> float:
    return decomp.n_singulars * np.finfo(np.float64).eps


def pseudo_inverse(decomp: SpectralDecomposition, rcond: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudo-inverse from an existing thin SVD.

    Singular values at or below ``rcond * sigma_1`` are treated as zero.
    """
    if rcond is None:
        rcond = default_rcond(decomp)
    s = decomp.singulars
    cutoff = rcond * (s[0] if s.size else 0.0)
    keep = s > cutoff
    if not np.any(keep):
        raise DegenerateSpectrum("all singular values fall below the truncation threshold")
    inverted = 1.0 / s[keep]
    return (decomp.right[:, keep] * inverted) @ decomp.left[:, keep].T


def regression_coefficients(
    decomp: SpectralDecomposition, targets, rcond: float | None = None
) -> np.ndarray:
    """Minimum-norm ordinary-least-squares coefficients for the given targets."""
    t = np.asarray(targets, dtype=np.float64)
    if t.shape[0] != decomp.n_samples:
        raise InvalidInput(
            f"targets must have {decomp.n_samples} rows, got {t.shape[0]}"
        )
    return pseudo_inverse(decomp, rcond) @ t


def approx_targets(grouping: SpectralGrouping, g: int, targets) -> np.ndarray:
    """Orthogonal projection of target columns onto group g's left subspace.

    Directions with an exactly zero singular value carry no component mass
    and are excluded from the projector.
    """
    start, end = _check_group_index(grouping, g)
    t = np.asarray(targets, dtype=np.float64)
    decomp = grouping.decomposition
    if t.shape[0] != decomp.n_samples:
        raise InvalidInput(
            f"targets must have {decomp.n_samples} rows, got {t.shape[0]}"
        )
    mask = decomp.singulars[start:end] > 0.0
    basis = decomp.left[:, start:end][:, mask]
    return basis @ (basis.T @ t)


def regression_score(grouping: SpectralGrouping, g: int, boxes) -> float:
    """Negated mean squared error of the group-g approximation of the boxes."""
    b = np.asarray(boxes, dtype=np.float64)
    approx = approx_targets(grouping, g, b)
    return float(-np.mean((b - approx) ** 2))


def disco_reg(features, boxes, groups: int = 8) -> RegressionScoreReport:
    """Ratio-weighted regression score over all spectral groups."""
    matrix = as_feature_matrix(features)
    b = np.asarray(boxes, dtype=np.float64)
    if b.shape[0] != matrix.shape[0]:
        raise InvalidInput(
            f"boxes must have one row per feature row ({matrix.shape[0]}), got {b.shape[0]}"
        )
    grouping = make_grouping(svd(matrix), groups)
    lr = np.array([regression_score(grouping, g, b) for g in range(groups)])
    ratios = group_ratios(grouping)
    return RegressionScoreReport(
        per_group_lr=lr,
        per_group_ratio=ratios,
        final=float(lr @ ratios),
    )


def min_max_normalize(values) -> np.ndarray:
    """Map values affinely onto [0, 1]; a constant column maps to all 0.5."""
    v = np.asarray(values, dtype=np.float64)
    low, high = float(v.min()), float(v.max())
    if high == low:
        return np.full(v.shape, 0.5)
    return (v - low) / (high - low)


def combine_detection(table: HubScoreTable) -> HubScoreTable:
    """Min-max normalize both score columns across models and sum them."""
    if len(table.model_ids) < 2:
        raise InsufficientModels(
            f"need at least 2 models to combine, got {len(table.model_ids)}"
        )
    combined = min_max_normalize(table.cls_scores) + min_max_normalize(table.reg_scores)
    return HubScoreTable(
        model_ids=table.model_ids,
        cls_scores=table.cls_scores,
        reg_scores=table.reg_scores,
        combined=combined,
    )
