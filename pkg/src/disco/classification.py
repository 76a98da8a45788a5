"""Nearest-centroid Gaussian scoring of spectral components.

Per-group scores are computed on the group's own coordinate representation
(left singular vectors scaled by their singular values) instead of the
rank-deficient N x d component matrix: the class covariances have to be
inverted, which is only possible in the s_g-dimensional coordinate space.
Because the right factor has orthonormal columns and the shrinkage is
isotropic, Mahalanobis scores there equal the ones restricted to the
component's subspace of the full feature space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import InvalidInput, InvalidLabels, MissingClass
from .spectral import (
    SpectralGrouping,
    as_feature_matrix,
    group_coordinates,
    group_ratios,
    make_grouping,
    svd,
    topk_ratio,
)

# Relative shrinkage applied to every class covariance; proportional to the
# covariance trace so that rescaling the features rescales the shrinkage too.
COVARIANCE_SHRINKAGE = 1e-4
# Absolute diagonal floor for point-mass classes whose covariance trace is 0.
POINT_MASS_FLOOR = 1e-6


@dataclass(frozen=True)
class ClassStatistics:
    """Per-class Gaussian statistics in one group's coordinate space.

    ``covariances`` are already regularized and strictly positive definite.
    """

    class_count: int
    means: np.ndarray        # (C, s)
    covariances: np.ndarray  # (C, s, s)
    priors: np.ndarray       # (C,)


@dataclass(frozen=True)
class ClassificationScoreReport:
    per_group_ncc: np.ndarray
    per_group_ratio: np.ndarray
    final: float


@dataclass(frozen=True)
class AblationScores:
    """Unweighted and whole-feature variants of the classification score."""

    ncc_sum: float
    ncc_entire: float
    topk: float


def validate_labels(labels, n_samples: int) -> np.ndarray:
    """Check a class-index vector: integer, aligned, dense in [0, C), C >= 2."""
    y = np.asarray(labels)
    if y.ndim != 1 or y.shape[0] != n_samples:
        raise InvalidLabels(
            f"labels must be a length-{n_samples} vector, got shape {y.shape}"
        )
    if not np.issubdtype(y.dtype, np.integer):
        if not np.all(y == np.floor(y)):
            raise InvalidLabels("labels must be integers")
        y = y.astype(np.int64)
    if y.min() < 0:
        raise InvalidLabels("labels must be nonnegative")
    class_count = int(y.max()) + 1
    if class_count < 2:
        raise InvalidLabels("at least two classes required")
    counts = np.bincount(y, minlength=class_count)
    missing = np.nonzero(counts == 0)[0]
    if missing.size:
        raise MissingClass(f"class {int(missing[0])} has no samples")
    return y.astype(np.int64)


def class_statistics(component_coords, labels) -> ClassStatistics:
    """Per-class mean, shrinkage-regularized ML covariance, and prior."""
    coords = as_feature_matrix(component_coords)
    y = validate_labels(labels, coords.shape[0])
    class_count = int(y.max()) + 1
    n, s = coords.shape
    means = np.empty((class_count, s))
    covariances = np.empty((class_count, s, s))
    priors = np.empty(class_count)
    for c in range(class_count):
        rows = coords[y == c]
        mean = rows.mean(axis=0)
        centered = rows - mean
        cov = centered.T @ centered / rows.shape[0]
        trace = float(np.trace(cov))
        if trace > 0.0:
            cov = cov + COVARIANCE_SHRINKAGE * (trace / s) * np.eye(s)
        else:
            cov = POINT_MASS_FLOOR * np.eye(s)
        means[c] = mean
        covariances[c] = cov
        priors[c] = rows.shape[0] / n
    return ClassStatistics(
        class_count=class_count, means=means, covariances=covariances, priors=priors
    )


def log_posteriors(coords, stats: ClassStatistics, include_log_det: bool = False) -> np.ndarray:
    """Unnormalized log posterior of every sample under every class Gaussian.

    score[i, c] = -0.5 * (z_i - mu_c)^T Lambda_c^{-1} (z_i - mu_c) + log(pi_c).
    The Gaussian normalization term -0.5 * log det Lambda_c is omitted by
    default; pass ``include_log_det=True`` for the exact-Gaussian variant.
    """
    coords = as_feature_matrix(coords)
    if coords.shape[1] != stats.means.shape[1]:
        raise InvalidInput(
            f"coordinate dimension {coords.shape[1]} does not match "
            f"statistics dimension {stats.means.shape[1]}"
        )
    n = coords.shape[0]
    scores = np.empty((n, stats.class_count))
    for c in range(stats.class_count):
        factor = cho_factor(stats.covariances[c], lower=True)
        diff = coords - stats.means[c]
        solved = cho_solve(factor, diff.T)
        mahalanobis = np.einsum("ij,ji->i", diff, solved)
        scores[:, c] = -0.5 * mahalanobis + math.log(stats.priors[c])
        if include_log_det:
            log_det = 2.0 * np.sum(np.log(np.diag(factor[0])))
            scores[:, c] -= 0.5 * log_det
    return scores


def ncc_log_posterior(z, stats: ClassStatistics, include_log_det: bool = False) -> np.ndarray:
    """Log posterior of a single coordinate vector under every class."""
    vec = np.asarray(z, dtype=np.float64)
    if vec.ndim != 1:
        raise InvalidInput(f"expected a 1-D vector, got shape {vec.shape}")
    return log_posteriors(vec[None, :], stats, include_log_det)[0]


def softmax_normalize(log_scores) -> np.ndarray:
    """Numerically stable softmax over one score vector."""
    scores = np.asarray(log_scores, dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        raise InvalidInput("log scores must be finite")
    shifted = scores - scores.max(axis=-1, keepdims=True)
    weights = np.exp(shifted)
    return weights / weights.sum(axis=-1, keepdims=True)


def average_confidence(
    coords, labels, stats: ClassStatistics, include_log_det: bool = False
) -> float:
    """Mean softmax probability assigned to each sample's true class."""
    y = np.asarray(labels, dtype=np.int64)
    probabilities = softmax_normalize(log_posteriors(coords, stats, include_log_det))
    return float(probabilities[np.arange(y.shape[0]), y].mean())


def ncc_confidence_score(
    grouping: SpectralGrouping, g: int, labels, include_log_det: bool = False
) -> float:
    """Average true-class confidence of the group-g nearest centroid classifier."""
    coords = group_coordinates(grouping, g)
    stats = class_statistics(coords, labels)
    return average_confidence(coords, labels, stats, include_log_det)


def disco_cls(
    features, labels, groups: int = 8, include_log_det: bool = False
) -> ClassificationScoreReport:
    """Ratio-weighted nearest-centroid confidence over all spectral groups."""
    grouping = make_grouping(svd(features), groups)
    ncc = np.array(
        [
            ncc_confidence_score(grouping, g, labels, include_log_det)
            for g in range(groups)
        ]
    )
    ratios = group_ratios(grouping)
    return ClassificationScoreReport(
        per_group_ncc=ncc,
        per_group_ratio=ratios,
        final=float(ncc @ ratios),
    )


def ablation_scores(features, labels, groups: int = 8, k: int | None = None) -> AblationScores:
    """Baseline variants: unweighted group sum, single-group score, top-k mass.

    ``k`` defaults to the top 20 percent of groups, rounded up.
    """
    if k is None:
        k = max(1, math.ceil(0.2 * groups))
    grouping = make_grouping(svd(features), groups)
    ncc = [ncc_confidence_score(grouping, g, labels) for g in range(groups)]
    entire = make_grouping(grouping.decomposition, 1)
    return AblationScores(
        ncc_sum=float(np.sum(ncc)),
        ncc_entire=ncc_confidence_score(entire, 0, labels),
        topk=topk_ratio(grouping, k),
    )
