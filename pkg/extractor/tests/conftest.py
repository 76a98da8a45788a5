import json

import numpy as np
import pytest
from PIL import Image


def write_png(path, index: int, side: int = 16) -> None:
    """Deterministic RGB test image; distinct per index."""
    y, x = np.mgrid[0:side, 0:side]
    channels = [((c * 50 + 5 * x + 3 * y + 11 * index) % 256).astype(np.uint8) for c in range(3)]
    Image.fromarray(np.stack(channels, axis=-1), mode="RGB").save(path)


@pytest.fixture
def toy_classification_dataset(tmp_path):
    root = tmp_path / "dataset"
    root.mkdir()
    entries = []
    for index in range(10):
        name = f"img{index}.png"
        write_png(root / name, index)
        entries.append({"file": name, "label": index % 2})
    (root / "dataset.json").write_text(
        json.dumps({"task": "classification", "images": entries})
    )
    return root


@pytest.fixture
def toy_detection_dataset(tmp_path):
    root = tmp_path / "det-dataset"
    root.mkdir()
    entries = []
    for index in range(2):
        name = f"img{index}.png"
        write_png(root / name, index)
        entries.append(
            {
                "file": name,
                "boxes": [
                    {"class": 0, "x_min": 0, "y_min": 0, "x_max": 8, "y_max": 8},
                    {"class": 1, "x_min": 4 + index, "y_min": 2, "x_max": 12, "y_max": 14},
                ],
            }
        )
    (root / "dataset.json").write_text(json.dumps({"task": "detection", "images": entries}))
    return root
