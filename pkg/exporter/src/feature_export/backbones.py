"""Backbone construction and named layer taps.

Layer naming (documented here because the informal names map to concrete
module boundaries):

EfficientNet-B0 (torchvision): the network is a stem convolution, sixteen
MBConv blocks, and a final 1x1 convolution. Taps:

* ``head``     output of the stem Conv-BN-SiLU (32 channels, 112x112 for a
               224x224 input)
* ``blockN``   output of MBConv block N, N = 0..15 counted flat across
               stages (block5 -> 80 ch @ 14x14, block15 -> 320 ch @ 7x7)
* ``last-conv`` output of the final 1x1 convolution (1280 ch @ 7x7)

Block indices use the same 0-based flat numbering as ``prune_blocks``; the
default prune set [6, 10, 13, 14] removes only identity-shaped blocks
(stride 1, equal in/out channels), so every surviving tap keeps its original
channel count.

ResNet-50: ``head`` (post conv1+bn+relu, 64 ch), ``layer1``..``layer4``,
``last-conv`` (alias of layer4, 2048 ch).
"""

from __future__ import annotations

import sys

import torch
from torch import nn
from torchvision import models

BACKBONES = ("efficientnet_b0", "efficientnet_b0_pruned", "resnet50")
DEFAULT_PRUNE_BLOCKS = (6, 10, 13, 14)

# Output channels of each EfficientNet-B0 MBConv block, flat 0-based order.
EFFICIENTNET_B0_BLOCK_CHANNELS = (
    16, 24, 24, 40, 40, 80, 80, 80, 112, 112, 112, 192, 192, 192, 192, 320
)


class UnknownLayer(Exception):
    """Requested layer name does not exist on the (possibly pruned) backbone."""


class WeightsUnavailable(Exception):
    """Pretrained weights were requested but could not be loaded."""


def _load_efficientnet(weights_mode: str, seed: int):
    if weights_mode == "random":
        torch.manual_seed(seed)
        return models.efficientnet_b0(weights=None), "random"
    try:
        model = models.efficientnet_b0(weights=models.EfficientNet_B0_Weights.IMAGENET1K_V1)
        return model, "imagenet"
    except Exception as exc:  # noqa: BLE001 - hub failures surface as many types
        if weights_mode == "imagenet":
            raise WeightsUnavailable(f"cannot load ImageNet weights: {exc}") from exc
        print(
            f"export_features: ImageNet weights unavailable ({exc}); "
            "falling back to random init",
            file=sys.stderr,
        )
        torch.manual_seed(seed)
        return models.efficientnet_b0(weights=None), "random"


def _load_resnet50(weights_mode: str, seed: int):
    if weights_mode == "random":
        torch.manual_seed(seed)
        return models.resnet50(weights=None), "random"
    try:
        return models.resnet50(weights=models.ResNet50_Weights.IMAGENET1K_V2), "imagenet"
    except Exception as exc:  # noqa: BLE001
        if weights_mode == "imagenet":
            raise WeightsUnavailable(f"cannot load ImageNet weights: {exc}") from exc
        print(
            f"export_features: ImageNet weights unavailable ({exc}); "
            "falling back to random init",
            file=sys.stderr,
        )
        torch.manual_seed(seed)
        return models.resnet50(weights=None), "random"


def _efficientnet_tape(model, prune_blocks: tuple[int, ...]):
    """Flatten the network into an ordered list of (tap_name, module)."""
    features = model.features
    tape: list[tuple[str, nn.Module]] = [("head", features[0])]
    flat_idx = 0
    for stage in list(features)[1:-1]:
        for block in stage:
            if flat_idx in prune_blocks:
                if not getattr(block, "use_res_connect", False):
                    raise ValueError(
                        f"block {flat_idx} is not identity-shaped and cannot be pruned"
                    )
            else:
                tape.append((f"block{flat_idx}", block))
            flat_idx += 1
    tape.append(("last-conv", features[-1]))
    return tape


def _resnet_tape(model):
    stem = nn.Sequential(model.conv1, model.bn1, model.relu)
    return [
        ("head", stem),
        ("_pool", model.maxpool),
        ("layer1", model.layer1),
        ("layer2", model.layer2),
        ("layer3", model.layer3),
        ("layer4", model.layer4),
    ]


def build_tape(backbone: str, prune_blocks, weights_mode: str, seed: int):
    """Return (ordered taps, weights actually used) for a backbone name."""
    if backbone not in BACKBONES:
        raise ValueError(f"backbone must be one of {BACKBONES}, got {backbone!r}")
    prune = tuple(sorted(set(int(b) for b in prune_blocks or ())))
    if prune and backbone != "efficientnet_b0_pruned":
        raise ValueError("prune_blocks is only valid for efficientnet_b0_pruned")
    if backbone == "efficientnet_b0_pruned" and not prune:
        prune = DEFAULT_PRUNE_BLOCKS
    bad = [b for b in prune if not 0 <= b < len(EFFICIENTNET_B0_BLOCK_CHANNELS)]
    if bad:
        raise ValueError(f"prune indices out of range: {bad}")

    if backbone == "resnet50":
        model, used = _load_resnet50(weights_mode, seed)
        tape = _resnet_tape(model)
    else:
        model, used = _load_efficientnet(weights_mode, seed)
        tape = _efficientnet_tape(model, prune)
    model.eval()
    return tape, used


def run_taps(tape, image: torch.Tensor, wanted: list[str]) -> dict[str, torch.Tensor]:
    """Forward the image through the tape, collecting the wanted activations."""
    names = {name for name, _ in tape}
    aliases = {"last-conv": "layer4"} if "layer4" in names else {}
    missing = [w for w in wanted if w not in names and aliases.get(w) not in names]
    if missing:
        raise UnknownLayer(f"unknown layers {missing}; available: {sorted(names - {'_pool'})}")

    remaining = {aliases.get(w, w) for w in wanted}
    grabbed: dict[str, torch.Tensor] = {}
    x = image
    with torch.no_grad():
        for name, module in tape:
            x = module(x)
            if name in remaining:
                grabbed[name] = x
                remaining.discard(name)
            if not remaining:
                break
    return {w: grabbed[aliases.get(w, w)] for w in wanted}
