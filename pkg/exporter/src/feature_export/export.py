"""Export intermediate backbone activations to FTZ files."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .backbones import (
    DEFAULT_PRUNE_BLOCKS,
    EFFICIENTNET_B0_BLOCK_CHANNELS,
    build_tape,
    run_taps,
)
from .ftz import write_ftz

INPUT_SIZE = 224
IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


@dataclass
class ExportSpec:
    """What to export: image, backbone, layers, optional block pruning."""

    image_path: str
    backbone: str
    layers: list[str]
    prune_blocks: tuple[int, ...] = field(default_factory=tuple)
    out_prefix: str = "features"

    def __post_init__(self):
        if not self.layers:
            raise ValueError("at least one layer is required")
        if self.backbone == "efficientnet_b0_pruned" and not self.prune_blocks:
            self.prune_blocks = DEFAULT_PRUNE_BLOCKS


def load_image(path) -> torch.Tensor:
    """Decode, resize to the backbone input size, and normalize."""
    with Image.open(path) as img:
        rgb = img.convert("RGB").resize((INPUT_SIZE, INPUT_SIZE), Image.BILINEAR)
    arr = np.asarray(rgb, dtype=np.float32) / 255.0
    arr = (arr - np.array(IMAGENET_MEAN, np.float32)) / np.array(IMAGENET_STD, np.float32)
    return torch.from_numpy(arr.transpose(2, 0, 1))[None, :]


def _expected_channels(layer: str) -> int | None:
    if layer.startswith("block") and layer[5:].isdigit():
        return EFFICIENTNET_B0_BLOCK_CHANNELS[int(layer[5:])]
    return None


def export_features(spec: ExportSpec, weights: str = "auto", seed: int = 0) -> list[str]:
    """Write one FTZ per requested layer; returns the written paths.

    ``weights``: "imagenet" (strict), "random" (seeded init), or "auto"
    (ImageNet with fallback to random). Exports run single-threaded in eval
    mode so repeated runs are byte-identical.
    """
    if weights not in ("auto", "imagenet", "random"):
        raise ValueError(f"weights must be auto|imagenet|random, got {weights!r}")
    torch.set_num_threads(1)
    tape, weights_used = build_tape(spec.backbone, spec.prune_blocks, weights, seed)
    image = load_image(spec.image_path)
    taps = run_taps(tape, image, list(spec.layers))

    paths = []
    for layer in spec.layers:
        act = taps[layer][0]  # (C, H, W)
        hwc = act.permute(1, 2, 0).contiguous().numpy().astype(np.float32)
        expected = None
        if spec.backbone.startswith("efficientnet"):
            expected = _expected_channels(layer)
        if expected is not None and hwc.shape[2] != expected:
            raise AssertionError(
                f"{layer}: got {hwc.shape[2]} channels, architecture defines {expected}"
            )
        meta = {
            "backbone": spec.backbone,
            "layer": layer,
            "image": Path(spec.image_path).name,
            "weights": weights_used,
            "input_size": f"{INPUT_SIZE}x{INPUT_SIZE}",
        }
        if spec.prune_blocks:
            meta["pruned_blocks"] = ",".join(str(b) for b in spec.prune_blocks)
        out = f"{spec.out_prefix}.{spec.backbone}.{layer}.ftz"
        write_ftz(hwc, meta, out)
        paths.append(out)
    return paths
