"""Thin SVD, spectral-component grouping, and before/after change diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateComponent,
    DegenerateSpectrum,
    InvalidGroupCount,
    InvalidGroupIndex,
    InvalidInput,
    NumericalFailure,
)


def as_feature_matrix(data) -> np.ndarray:
    """Validate a samples-by-dimensions feature matrix and return it as float64.

    Raises InvalidInput for anything that is not a finite 2-D matrix with at
    least one row and one column.
    """
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidInput(f"feature matrix must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInput(f"feature matrix must be at least 1x1, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput("feature matrix contains non-finite values")
    return arr


@dataclass(frozen=True)
class SpectralDecomposition:
    """Thin SVD: ``left @ diag(singulars) @ right.T`` reconstructs the input.

    ``left`` is N x r with orthonormal columns, ``right`` is d x r with
    orthonormal columns, and ``singulars`` holds the r = min(N, d) singular
    values in nonincreasing order.
    """

    left: np.ndarray
    singulars: np.ndarray
    right: np.ndarray

    @property
    def n_samples(self) -> int:
        return self.left.shape[0]

    @property
    def dim(self) -> int:
        return self.right.shape[0]

    @property
    def n_singulars(self) -> int:
        return self.singulars.shape[0]

    def reconstruct(self) -> np.ndarray:
        return (self.left * self.singulars) @ self.right.T


@dataclass(frozen=True)
class SpectralGrouping:
    """A partition of the retained singular values into contiguous groups.

    ``boundaries`` holds half-open index ranges [start, end) that cover
    [0, r) in order without gaps; every group is nonempty.
    """

    decomposition: SpectralDecomposition
    group_count: int
    boundaries: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class SpectralChangeProfile:
    """Per-group relative Frobenius change and singular-mass ratios."""

    per_group_frobenius_change: np.ndarray
    per_group_ratio_before: np.ndarray
    per_group_ratio_after: np.ndarray


def svd(features) -> SpectralDecomposition:
    """Thin singular value decomposition of a feature matrix.

    Returns all r = min(N, d) singular triplets sorted by decreasing
    singular value.
    """
    matrix = as_feature_matrix(features)
    try:
        u, s, vh = np.linalg.svd(matrix, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc
    return SpectralDecomposition(left=u, singulars=s, right=vh.T)


def group_boundaries(r: int, group_count: int) -> tuple[tuple[int, int], ...]:
    """Index ranges splitting r values into ``group_count`` contiguous groups.

    The first groups share one size and the last group absorbs the remainder.
    The common size is ceil(r / G); when that would leave trailing groups
    empty (small r with awkward G, e.g. r=8, G=6) it falls back to
    floor(r / G) so that every group stays nonempty.
    """
    size = -(-r // group_count)
    if group_count > 1 and (group_count - 1) * size >= r:
        size = r // group_count
    bounds = []
    start = 0
    for _ in range(group_count - 1):
        bounds.append((start, start + size))
        start += size
    bounds.append((start, r))
    return tuple(bounds)


def make_grouping(decomp: SpectralDecomposition, group_count: int) -> SpectralGrouping:
    """Partition ``decomp``'s singular values into ``group_count`` groups.

    Raises InvalidGroupCount unless 1 <= group_count <= r.
    """
    r = decomp.n_singulars
    if not 1 <= group_count <= r:
        raise InvalidGroupCount(
            f"group count must be in [1, {r}], got {group_count}"
        )
    return SpectralGrouping(
        decomposition=decomp,
        group_count=group_count,
        boundaries=group_boundaries(r, group_count),
    )


def _check_group_index(grouping: SpectralGrouping, g: int) -> tuple[int, int]:
    if not 0 <= g < grouping.group_count:
        raise InvalidGroupIndex(
            f"group index must be in [0, {grouping.group_count}), got {g}"
        )
    return grouping.boundaries[g]


def component_matrix(grouping: SpectralGrouping, g: int) -> np.ndarray:
    """The N x d reconstruction from group ``g``'s singular triplets alone."""
    start, end = _check_group_index(grouping, g)
    d = grouping.decomposition
    return (d.left[:, start:end] * d.singulars[start:end]) @ d.right[:, start:end].T


def group_coordinates(grouping: SpectralGrouping, g: int) -> np.ndarray:
    """Group ``g``'s samples expressed in its own coordinate space.

    Returns the N x s_g matrix of left singular vectors scaled by their
    singular values; right-multiplying by the group's right factor gives the
    full component matrix back.
    """
    start, end = _check_group_index(grouping, g)
    d = grouping.decomposition
    return d.left[:, start:end] * d.singulars[start:end]


def singular_value_ratio(grouping: SpectralGrouping, g: int) -> float:
    """Fraction of total singular-value mass held by group ``g``."""
    start, end = _check_group_index(grouping, g)
    s = grouping.decomposition.singulars
    total = float(np.sum(s))
    if total == 0.0:
        raise DegenerateSpectrum("all singular values are zero")
    return float(np.sum(s[start:end])) / total


def group_ratios(grouping: SpectralGrouping) -> np.ndarray:
    """All group ratios as one vector; sums to 1."""
    return np.array(
        [singular_value_ratio(grouping, g) for g in range(grouping.group_count)]
    )


def topk_ratio(grouping: SpectralGrouping, k: int) -> float:
    """Singular-mass fraction of the first ``k`` groups combined."""
    if not 1 <= k <= grouping.group_count:
        raise InvalidInput(
            f"k must be in [1, {grouping.group_count}], got {k}"
        )
    s = grouping.decomposition.singulars
    total = float(np.sum(s))
    if total == 0.0:
        raise DegenerateSpectrum("all singular values are zero")
    end = grouping.boundaries[k - 1][1]
    return float(np.sum(s[:end])) / total


def relative_frobenius_change(before_g, after_g) -> float:
    """Frobenius norm of the difference, relative to the before matrix."""
    before = np.asarray(before_g, dtype=np.float64)
    after = np.asarray(after_g, dtype=np.float64)
    if before.shape != after.shape:
        raise InvalidInput(
            f"shape mismatch: before {before.shape} vs after {after.shape}"
        )
    denom = float(np.linalg.norm(before))
    if denom == 0.0:
        raise DegenerateComponent("before-component has zero Frobenius norm")
    return float(np.linalg.norm(before - after)) / denom


def spectral_change_profile(before, after, group_count: int) -> SpectralChangeProfile:
    """Per-group change diagnostics between two feature matrices.

    Each matrix is decomposed and grouped independently; group g of one is
    compared with group g of the other. Both matrices must have the same
    shape: rows are aligned samples and per-group differences are only
    defined over a common dimension.
    """
    before_m = as_feature_matrix(before)
    after_m = as_feature_matrix(after)
    if before_m.shape[0] != after_m.shape[0]:
        raise InvalidInput(
            f"sample counts differ: {before_m.shape[0]} vs {after_m.shape[0]}"
        )
    if before_m.shape[1] != after_m.shape[1]:
        raise InvalidInput(
            f"feature dimensions differ: {before_m.shape[1]} vs {after_m.shape[1]}"
        )
    grouping_before = make_grouping(svd(before_m), group_count)
    grouping_after = make_grouping(svd(after_m), group_count)
    changes = np.array(
        [
            relative_frobenius_change(
                component_matrix(grouping_before, g),
                component_matrix(grouping_after, g),
            )
            for g in range(group_count)
        ]
    )
    return SpectralChangeProfile(
        per_group_frobenius_change=changes,
        per_group_ratio_before=group_ratios(grouping_before),
        per_group_ratio_after=group_ratios(grouping_after),
    )
