"""Rank-agreement statistics between estimated scores and ground-truth results."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import InsufficientModels, InvalidInput


@dataclass(frozen=True)
class BenchmarkRecord:
    """Aligned per-model scores and ground-truth performances."""

    model_ids: tuple[str, ...]
    scores: np.ndarray
    performances: np.ndarray

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        performances = np.asarray(self.performances, dtype=np.float64)
        m = len(self.model_ids)
        if m < 2:
            raise InsufficientModels(f"need at least 2 models, got {m}")
        if scores.shape != (m,) or performances.shape != (m,):
            raise InvalidInput(
                "scores and performances must align with model_ids "
                f"(expected shape ({m},))"
            )
        if not (np.all(np.isfinite(scores)) and np.all(np.isfinite(performances))):
            raise InvalidInput("scores and performances must be finite")
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "performances", performances)

    @property
    def model_count(self) -> int:
        return len(self.model_ids)


def _pair_signs(values: np.ndarray) -> np.ndarray:
    """sign(v_i - v_j) for all i < j, flattened in row order."""
    diffs = values[:, None] - values[None, :]
    upper = np.triu_indices(values.shape[0], k=1)
    return np.sign(diffs[upper])


def kendall_tau(record: BenchmarkRecord) -> float:
    """Plain Kendall rank correlation; tied pairs contribute zero."""
    m = record.model_count
    products = _pair_signs(record.performances) * _pair_signs(record.scores)
    return float(2.0 * products.sum() / (m * (m - 1)))


def _weighted_tau(performances: np.ndarray, scores: np.ndarray) -> float:
    """Kendall correlation with hyperbolic pair weights anchored on the
    descending performance ranking; tied performances share the mean rank."""
    ranks = rankdata(-performances, method="average") - 1.0
    weights_per_model = 1.0 / (ranks + 1.0)
    i_idx, j_idx = np.triu_indices(performances.shape[0], k=1)
    pair_weights = weights_per_model[i_idx] + weights_per_model[j_idx]
    products = _pair_signs(performances) * _pair_signs(scores)
    return float((pair_weights * products).sum() / pair_weights.sum())


def weighted_kendall_tau(record: BenchmarkRecord) -> float:
    """Weighted Kendall correlation; disagreements among the top-performing
    models cost more than the same disagreements near the bottom."""
    return _weighted_tau(record.performances, record.scores)


def merge_within_tolerance(values: np.ndarray, tolerance: float) -> np.ndarray:
    """Replace values by chained-group means: sorted descending, a new group
    starts whenever the gap to the previous value exceeds ``tolerance``."""
    order = np.argsort(-values, kind="stable")
    adjusted = np.array(values, dtype=np.float64)
    group_start = 0
    sorted_values = values[order]
    for pos in range(1, order.shape[0] + 1):
        boundary = pos == order.shape[0] or (
            sorted_values[pos - 1] - sorted_values[pos] > tolerance
        )
        if boundary:
            group = order[group_start:pos]
            adjusted[group] = values[group].mean()
            group_start = pos
    return adjusted


def tie_adjusted_tau(record: BenchmarkRecord, tolerance_pct: float) -> float:
    """Weighted Kendall correlation after merging performances that differ by
    at most ``tolerance_pct`` (absolute, in the performance's own units)."""
    if tolerance_pct < 0:
        raise InvalidInput(f"tolerance must be nonnegative, got {tolerance_pct}")
    adjusted = merge_within_tolerance(record.performances, tolerance_pct)
    return _weighted_tau(adjusted, record.scores)


def top_k_hit(record: BenchmarkRecord, k: int) -> int:
    """1 if the best ground-truth model is among the k highest-scored models.

    The best ground-truth model is the first index attaining the maximum
    performance; score ties are broken by model-id order.
    """
    m = record.model_count
    if not 1 <= k <= m:
        raise InvalidInput(f"k must be in [1, {m}], got {k}")
    best = int(np.argmax(record.performances))
    by_score = sorted(
        range(m), key=lambda i: (-record.scores[i], record.model_ids[i])
    )
    return int(best in by_score[:k])
