"""VGG backbone with taps on the first and fifth convolution blocks.

The first block output carries 64 channels at input resolution; the fifth
block output carries 512 channels at one sixteenth resolution and is
upsampled bilinearly (align-corners false) back to the input size.
"""

from __future__ import annotations

import torch
from torch import nn
from torchvision import models

from .errors import ModelLoadError

# ImageNet channel statistics used by the pretrained weights.
_MEAN = torch.tensor([0.485, 0.456, 0.406]).view(1, 3, 1, 1)
_STD = torch.tensor([0.229, 0.224, 0.225]).view(1, 3, 1, 1)

_CONV1_END = 4  # through relu1_2
_CONV5_END = 30  # through relu5_3

LAYER_CHANNELS = {"conv1": 64, "conv5": 512}


def load_backbone(weights: str = "pretrained", seed: int = 0, device: str = "cpu") -> nn.Module:
    """Build the truncated VGG16 feature stack.

    ``weights`` is ``pretrained`` (torchvision cache or download), ``random``
    (seeded initialization, for offline testing), or a path to a local
    state-dict file.
    """
    if weights == "random":
        torch.manual_seed(seed)
        model = models.vgg16(weights=None)
    elif weights == "pretrained":
        try:
            model = models.vgg16(weights=models.VGG16_Weights.IMAGENET1K_V1)
        except Exception as exc:
            raise ModelLoadError(
                f"pretrained VGG16 weights unavailable ({exc}); pass a local "
                "state-dict path or use --weights random for testing"
            ) from exc
    else:
        try:
            state = torch.load(weights, map_location="cpu", weights_only=True)
            model = models.vgg16(weights=None)
            model.load_state_dict(state)
        except Exception as exc:
            raise ModelLoadError(f"cannot load weights from {weights}: {exc}") from exc
    features = model.features[:_CONV5_END].to(device)
    features.eval()
    for param in features.parameters():
        param.requires_grad_(False)
    return features


@torch.no_grad()
def extract_maps(features: nn.Module, batch: torch.Tensor) -> dict[str, torch.Tensor]:
    """Run one normalized NCHW batch; returns maps at input resolution."""
    h, w = batch.shape[2:]
    x = (batch - _MEAN.to(batch.device)) / _STD.to(batch.device)
    conv1 = features[:_CONV1_END](x)
    conv5 = features[_CONV1_END:](conv1)
    conv5 = torch.nn.functional.interpolate(
        conv5, size=(h, w), mode="bilinear", align_corners=False
    )
    return {"conv1": conv1, "conv5": conv5}
