"""Dump intermediate CNN feature maps to FTZ files for pixelseg."""

from .backbones import (
    BACKBONES,
    DEFAULT_PRUNE_BLOCKS,
    EFFICIENTNET_B0_BLOCK_CHANNELS,
    UnknownLayer,
    WeightsUnavailable,
)
from .export import ExportSpec, export_features, load_image
from .ftz import read_shape, write_ftz

__version__ = "0.1.0"

__all__ = [
    "BACKBONES",
    "DEFAULT_PRUNE_BLOCKS",
    "EFFICIENTNET_B0_BLOCK_CHANNELS",
    "ExportSpec",
    "UnknownLayer",
    "WeightsUnavailable",
    "export_features",
    "load_image",
    "read_shape",
    "write_ftz",
]
