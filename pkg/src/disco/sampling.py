"""Hard-example selection: keep the samples a linear-discriminant classifier
is least confident about, class by class, to shrink the dataset before SVD."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .classification import validate_labels
from .errors import InvalidInput, NumericalFailure
from .spectral import as_feature_matrix

# Mirrors the nearest-centroid covariance regularization.
SCATTER_SHRINKAGE = 1e-4
SCATTER_FLOOR = 1e-6


@dataclass(frozen=True)
class LDAProjection:
    """Discriminant directions ordered by decreasing generalized eigenvalue."""

    matrix: np.ndarray           # (d, p), p <= C - 1
    between_scatter: np.ndarray  # (d, d)
    within_scatter: np.ndarray   # (d, d)
    eigenvalues: np.ndarray      # (p,), nonnegative, nonincreasing


@dataclass(frozen=True)
class HardExampleSelection:
    indices: np.ndarray           # sorted selected sample indices
    per_class_counts: np.ndarray  # selected count per class
    confidences: np.ndarray       # true-class confidence of every sample


def _class_means_and_priors(features: np.ndarray, labels: np.ndarray):
    class_count = int(labels.max()) + 1
    means = np.stack([features[labels == c].mean(axis=0) for c in range(class_count)])
    counts = np.bincount(labels, minlength=class_count)
    return means, counts / labels.shape[0]


def lda_fit(features, labels) -> LDAProjection:
    """Fit discriminant directions maximizing between- over within-class scatter.

    The within-class scatter is shrunk toward a scaled identity before the
    generalized eigenproblem is solved, so the fit is defined even for
    high-dimensional or low-sample inputs.
    """
    matrix = as_feature_matrix(features)
    y = validate_labels(labels, matrix.shape[0])
    n, d = matrix.shape
    class_count = int(y.max()) + 1
    means, _ = _class_means_and_priors(matrix, y)
    overall = matrix.mean(axis=0)

    between = np.zeros((d, d))
    within = np.zeros((d, d))
    for c in range(class_count):
        rows = matrix[y == c]
        gap = (means[c] - overall)[:, None]
        between += rows.shape[0] * (gap @ gap.T)
        centered = rows - means[c]
        within += centered.T @ centered

    trace = float(np.trace(within))
    if trace > 0.0:
        regularized = within + SCATTER_SHRINKAGE * (trace / d) * np.eye(d)
    else:
        regularized = within + SCATTER_FLOOR * np.eye(d)
    try:
        eigenvalues, eigenvectors = scipy.linalg.eigh(between, regularized)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalFailure(f"generalized eigensolver failed: {exc}") from exc

    p = min(class_count - 1, d)
    order = np.argsort(eigenvalues)[::-1][:p]
    return LDAProjection(
        matrix=eigenvectors[:, order],
        between_scatter=between,
        within_scatter=within,
        eigenvalues=np.clip(eigenvalues[order], 0.0, None),
    )


def lda_posteriors(features, labels, projection: LDAProjection) -> np.ndarray:
    """Softmax class probabilities of a unit-covariance linear discriminant.

    Scores are inner products in the projected space:
    score[n, c] = <W^T z_n, W^T mu_c> - 0.5 ||W^T mu_c||^2 + log(pi_c).
    """
    matrix = as_feature_matrix(features)
    y = validate_labels(labels, matrix.shape[0])
    if projection.matrix.shape[0] != matrix.shape[1]:
        raise InvalidInput(
            f"projection expects dimension {projection.matrix.shape[0]}, "
            f"features have {matrix.shape[1]}"
        )
    means, priors = _class_means_and_priors(matrix, y)
    projected = matrix @ projection.matrix
    projected_means = means @ projection.matrix
    scores = (
        projected @ projected_means.T
        - 0.5 * np.sum(projected_means**2, axis=1)
        + np.log(priors)
    )
    shifted = scores - scores.max(axis=1, keepdims=True)
    weights = np.exp(shifted)
    return weights / weights.sum(axis=1, keepdims=True)


def lda_confidence(features, labels, projection: LDAProjection) -> np.ndarray:
    """Per-sample probability assigned to the sample's own class."""
    y = validate_labels(labels, np.asarray(features).shape[0])
    posteriors = lda_posteriors(features, labels, projection)
    return posteriors[np.arange(y.shape[0]), y]


def select_hard_examples(features, labels, ratio: float) -> HardExampleSelection:
    """Keep the lowest-confidence ceil(ratio * N_c) samples of every class.

    Ties are broken by ascending original index, which makes the selection
    deterministic and nested across increasing ratios.
    """
    if not 0.0 < ratio <= 1.0:
        raise InvalidInput(f"ratio must be in (0, 1], got {ratio}")
    matrix = as_feature_matrix(features)
    y = validate_labels(labels, matrix.shape[0])
    projection = lda_fit(matrix, y)
    confidences = lda_confidence(matrix, y, projection)

    class_count = int(y.max()) + 1
    selected: list[np.ndarray] = []
    per_class = np.zeros(class_count, dtype=np.int64)
    for c in range(class_count):
        members = np.nonzero(y == c)[0]
        quota = math.ceil(ratio * members.shape[0])
        order = np.lexsort((members, confidences[members]))
        selected.append(members[order[:quota]])
        per_class[c] = quota
    indices = np.sort(np.concatenate(selected))
    return HardExampleSelection(
        indices=indices, per_class_counts=per_class, confidences=confidences
    )
