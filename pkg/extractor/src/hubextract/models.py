"""Model registry and forward-pass adapters.

Every adapter is deterministic: fixed weights (toy models), a fixed init
seed (torchvision architectures without downloaded weights), or a local
state-dict file. Inference always runs in eval mode under ``torch.no_grad``
with a fixed resize, so repeated extractions produce identical bytes.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
import torchvision


class ModelResolutionError(RuntimeError):
    """The requested model name cannot be resolved to a usable network."""


_TOY_FEATURE_DIM = 8
_TOY_POOL = 4
_TOY_IN = 3 * _TOY_POOL * _TOY_POOL


def _toy_linear_weights() -> tuple[torch.Tensor, torch.Tensor]:
    rows = torch.arange(_TOY_FEATURE_DIM, dtype=torch.float32).unsqueeze(1)
    cols = torch.arange(_TOY_IN, dtype=torch.float32).unsqueeze(0)
    weight = (((3.0 * rows + 7.0 * cols) % 11.0) - 5.0) / 10.0
    bias = (torch.arange(_TOY_FEATURE_DIM, dtype=torch.float32) - 3.5) / 10.0
    return weight, bias


def _toy_conv_weights() -> tuple[torch.Tensor, torch.Tensor]:
    out_ch = torch.arange(4, dtype=torch.float32).reshape(4, 1, 1, 1)
    in_ch = torch.arange(3, dtype=torch.float32).reshape(1, 3, 1, 1)
    kernel = (((2.0 * out_ch + 5.0 * in_ch) % 7.0) - 3.0) / 6.0
    bias = (torch.arange(4, dtype=torch.float32) - 1.5) / 8.0
    return kernel, bias


class ToyLinear:
    """Fixed-weight probe: pool pixels to 4x4, flatten, one linear layer.

    Feature i of an image is ``sum_j W[i, j] * pooled[j] + b[i]`` with
    W[i, j] = (((3i + 7j) mod 11) - 5) / 10 and b[i] = (i - 3.5) / 10, which a
    test can recompute by hand.
    """

    feature_dim = _TOY_FEATURE_DIM
    spatial_stages = ()

    def __init__(self):
        self.weight, self.bias = _toy_linear_weights()

    def penultimate(self, batch: torch.Tensor) -> torch.Tensor:
        pooled = F.adaptive_avg_pool2d(batch, (_TOY_POOL, _TOY_POOL))
        flat = pooled.reshape(batch.shape[0], -1)
        return flat @ self.weight.T + self.bias

    def spatial(self, batch: torch.Tensor, stage: str) -> torch.Tensor:
        raise ModelResolutionError("toy-linear has no spatial stages")


class ToyConv:
    """Fixed 1x1 conv mixing RGB into 4 channels, then 2x2 average pooling."""

    feature_dim = None
    spatial_stages = ("stage1",)

    def __init__(self):
        self.kernel, self.bias = _toy_conv_weights()

    def penultimate(self, batch: torch.Tensor) -> torch.Tensor:
        maps = self.spatial(batch, "stage1")
        return maps.mean(dim=(2, 3))

    def spatial(self, batch: torch.Tensor, stage: str) -> torch.Tensor:
        if stage != "stage1":
            raise ModelResolutionError(f"toy-conv has no stage {stage!r}")
        mixed = F.conv2d(batch, self.kernel, self.bias)
        return F.avg_pool2d(mixed, kernel_size=2, stride=2)


_RESNET_STAGES = ("layer1", "layer2", "layer3", "layer4")


class ResnetAdapter:
    """Torchvision resnet; random but seeded init unless a weight file is given."""

    spatial_stages = _RESNET_STAGES

    def __init__(self, name: str, weights_path: str | None = None):
        builder = getattr(torchvision.models, name, None)
        if builder is None:
            raise ModelResolutionError(f"unknown torchvision model {name!r}")
        torch.manual_seed(0)
        self.model = builder(weights=None)
        if weights_path is not None:
            state = torch.load(weights_path, map_location="cpu", weights_only=True)
            self.model.load_state_dict(state)
        self.model.eval()
        self.feature_dim = self.model.fc.in_features

    def _stem(self, batch: torch.Tensor) -> torch.Tensor:
        m = self.model
        x = m.maxpool(m.relu(m.bn1(m.conv1(batch))))
        return x

    def penultimate(self, batch: torch.Tensor) -> torch.Tensor:
        x = self._stem(batch)
        for stage in _RESNET_STAGES:
            x = getattr(self.model, stage)(x)
        x = self.model.avgpool(x)
        return torch.flatten(x, 1)

    def spatial(self, batch: torch.Tensor, stage: str) -> torch.Tensor:
        if stage not in _RESNET_STAGES:
            raise ModelResolutionError(f"{stage!r} is not one of {_RESNET_STAGES}")
        x = self._stem(batch)
        for name in _RESNET_STAGES:
            x = getattr(self.model, name)(x)
            if name == stage:
                return x
        raise AssertionError("unreachable")


_RESIZE_FOR_RESNET = 224


def resolve(model_name: str):
    """Resolve a registry name, optionally with ``name@/path/to/weights.pt``.

    Returns (adapter, resize) where resize is the square input size the
    adapter expects, or None to keep native image sizes.
    """
    name, _, weights_path = model_name.partition("@")
    weights = weights_path or None
    if name == "toy-linear":
        return ToyLinear(), None
    if name == "toy-conv":
        return ToyConv(), None
    if name.startswith("resnet"):
        return ResnetAdapter(name, weights), _RESIZE_FOR_RESNET
    raise ModelResolutionError(
        f"unknown model {model_name!r}; known: toy-linear, toy-conv, resnet18/34/50/..."
    )
