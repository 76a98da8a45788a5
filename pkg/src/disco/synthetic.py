"""Seeded synthetic data generators for tests, demos, and experiments.

Nothing here participates in scoring; generators produce feature matrices,
labels, and detection fixtures with known structure so that pipeline behavior
can be checked against independently computed ground truth.
"""

from __future__ import annotations

import numpy as np

from .io import Box, DetectionLabels, ImageAnnotation

# Class-separation scale per synthetic model, best first. Chosen so held-out
# nearest-mean accuracies spread roughly from near-perfect down to chance.
DEFAULT_SEPARATIONS = (6.0, 4.0, 2.8, 2.0, 1.4, 0.9, 0.5, 0.2)


def hub_labels(seed: int, n_samples: int = 600, n_classes: int = 6) -> np.ndarray:
    """Balanced, shuffled class labels shared by every model of one hub."""
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(n_classes), n_samples // n_classes)
    if labels.shape[0] < n_samples:
        labels = np.concatenate([labels, np.arange(n_samples - labels.shape[0])])
    rng.shuffle(labels)
    return labels


def model_features(
    labels: np.ndarray,
    separation: float,
    seed: int,
    dim: int = 64,
    signal_dims: int = 8,
) -> np.ndarray:
    """Features of one synthetic model: unit noise everywhere plus class
    centers of the given separation injected into the leading dimensions.

    Larger separations concentrate more variance (and all the class signal)
    in the top singular directions.
    """
    rng = np.random.default_rng(seed)
    n_classes = int(labels.max()) + 1
    centers = rng.normal(size=(n_classes, signal_dims))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    features = rng.normal(size=(labels.shape[0], dim))
    features[:, :signal_dims] += separation * centers[labels]
    return features


def synthetic_hub(
    seed: int,
    n_samples: int = 600,
    n_classes: int = 6,
    dim: int = 64,
    separations: tuple[float, ...] = DEFAULT_SEPARATIONS,
) -> tuple[np.ndarray, list[tuple[str, np.ndarray]]]:
    """A shared task plus one feature matrix per synthetic model.

    Returns (labels, [(model_id, features), ...]) with models ordered from the
    strongest class signal to the weakest.
    """
    labels = hub_labels(seed, n_samples, n_classes)
    models = []
    for index, separation in enumerate(separations):
        features = model_features(
            labels, separation, seed=seed * 1000 + index + 1, dim=dim
        )
        models.append((f"synth-{index:02d}", features))
    return labels, models


def heldout_nearest_mean_accuracy(features: np.ndarray, labels: np.ndarray) -> float:
    """Ground-truth oracle: Euclidean nearest-class-mean accuracy on a held-out
    half (even indices train, odd indices test).

    Deliberately independent of the spectral scoring path: no SVD, no
    covariances, no priors.
    """
    train = features[0::2]
    train_labels = labels[0::2]
    test = features[1::2]
    test_labels = labels[1::2]
    n_classes = int(labels.max()) + 1
    means = np.stack([train[train_labels == c].mean(axis=0) for c in range(n_classes)])
    distances = ((test[:, None, :] - means[None, :, :]) ** 2).sum(axis=2)
    predictions = distances.argmin(axis=1)
    return float((predictions == test_labels).mean())


# ---------------------------------------------------------------------------
# Detection fixture

# One distinct pixel box per image (8 x 8 pixel images); every image repeats
# its box twice with the two class labels. Values are dyadic so pixel-to-grid
# scaling and float32 storage are exact.
_FIXTURE_BOXES = (
    (0.0, 0.0, 4.0, 4.0),
    (2.0, 2.0, 6.0, 8.0),
    (4.0, 0.0, 8.0, 4.0),
)
_FIXTURE_IMAGE_SIDE = 8
_FIXTURE_GRID_SIDE = 4


def detection_fixture(in_span: bool = True) -> tuple[list[np.ndarray], DetectionLabels]:
    """Three images, six boxes, with analytically known regression behavior.

    Each image's spatial map holds four constant channels equal to the
    image's normalized box coordinates, so every pooled box feature row
    repeats those four values. The box-coordinate columns then span exactly
    the feature matrix's column space: with the spectrum split into two
    groups, the top group carries all singular mass and reproduces the boxes
    with zero error.

    With ``in_span=False`` one duplicate box is moved, which pushes the box
    columns outside the feature column space and forces a strictly negative
    regression score. The maps are unchanged between the two variants.
    """
    side = _FIXTURE_IMAGE_SIDE
    maps = []
    images = []
    for index, (x0, y0, x1, y1) in enumerate(_FIXTURE_BOXES):
        constants = np.array([x0, y0, x1, y1]) / side
        spatial = np.broadcast_to(
            constants[:, None, None], (4, _FIXTURE_GRID_SIDE, _FIXTURE_GRID_SIDE)
        ).copy()
        maps.append(spatial)
        first = Box(class_id=0, x_min=x0, y_min=y0, x_max=x1, y_max=y1)
        if in_span or index != 2:
            second = Box(class_id=1, x_min=x0, y_min=y0, x_max=x1, y_max=y1)
        else:
            second = Box(class_id=1, x_min=x0 + 1.0, y_min=y0 + 1.0, x_max=x1 - 1.0, y_max=y1 - 1.0)
        images.append(
            ImageAnnotation(
                image_id=f"img-{index}", width=side, height=side, boxes=[first, second]
            )
        )
    return maps, DetectionLabels(images=images)
