"""Build pixel matrices from raw feature tensors.

Tensors from different layers rarely share a spatial resolution, so a recipe
first resamples every source to a common grid (bilinear, half-pixel centers),
optionally z-scores each channel, concatenates along the channel axis and
flattens row-major into an N x C matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import EmptyRecipe
from .tensor_io import FeatureTensor
from .validation import check_finite

GridPolicy = str | tuple[int, int]


@dataclass
class PixelMatrix:
    """Row-major flattening of a spatial feature grid (row index = h * grid_w + w)."""

    values: np.ndarray
    grid_h: int
    grid_w: int

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float32)
        if arr.ndim != 2:
            raise ValueError(f"pixel matrix must be 2-D, got shape {arr.shape}")
        if arr.shape[0] != self.grid_h * self.grid_w:
            raise ValueError(
                f"{arr.shape[0]} rows cannot flatten a {self.grid_h}x{self.grid_w} grid"
            )
        check_finite(arr, "pixel matrix")
        self.values = arr

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    def to_grid(self) -> np.ndarray:
        """Reshape back to (grid_h, grid_w, C)."""
        return self.values.reshape(self.grid_h, self.grid_w, -1)


@dataclass
class FeatureRecipe:
    """Names the source tensors of one candidate representation.

    ``target_grid`` is "largest" (default), "smallest", or an explicit (H, W).
    """

    name: str
    sources: tuple[str, ...] = field(default_factory=tuple)
    target_grid: GridPolicy = "largest"
    standardize: bool = True

    def __post_init__(self):
        self.sources = tuple(self.sources)


def _axis_weights(n_out: int, n_in: int):
    # Sample centers at (i + 0.5) * n_in / n_out, clamped to the input extent.
    u = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
    u = np.clip(u, 0.0, n_in - 1.0)
    lo = np.floor(u).astype(np.intp)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, u - lo


def resample_bilinear(tensor: FeatureTensor, target_h: int, target_w: int) -> FeatureTensor:
    """Resample every channel to (target_h, target_w) with bilinear interpolation."""
    if target_h < 1 or target_w < 1:
        raise ValueError("target dimensions must be >= 1")
    h, w, _ = tensor.data.shape
    if (target_h, target_w) == (h, w):
        return FeatureTensor(tensor.data.copy(), dict(tensor.meta))
    ylo, yhi, wy = _axis_weights(target_h, h)
    xlo, xhi, wx = _axis_weights(target_w, w)
    v = tensor.data.astype(np.float64)
    wy = wy[:, None, None]
    wx = wx[None, :, None]
    top = v[ylo][:, xlo] * (1.0 - wx) + v[ylo][:, xhi] * wx
    bot = v[yhi][:, xlo] * (1.0 - wx) + v[yhi][:, xhi] * wx
    out = top * (1.0 - wy) + bot * wy
    return FeatureTensor(out.astype(np.float32), dict(tensor.meta))


def standardize_channels(tensor: FeatureTensor) -> FeatureTensor:
    """Z-score each channel over the grid (population std); constant channels become 0."""
    v = tensor.data.astype(np.float64)
    mean = v.mean(axis=(0, 1))
    sd = v.std(axis=(0, 1))
    zero = sd == 0.0
    out = (v - mean) / np.where(zero, 1.0, sd)
    out[:, :, zero] = 0.0
    return FeatureTensor(out.astype(np.float32), dict(tensor.meta))


def _resolve_grid(policy: GridPolicy, tensors: list[FeatureTensor]) -> tuple[int, int]:
    if policy == "largest":
        return max(t.height for t in tensors), max(t.width for t in tensors)
    if policy == "smallest":
        return min(t.height for t in tensors), min(t.width for t in tensors)
    th, tw = policy
    return int(th), int(tw)


def concat_features(recipe: FeatureRecipe, tensors: list[FeatureTensor]) -> PixelMatrix:
    """Resample, optionally standardize, and concatenate tensors into a PixelMatrix.

    Channel order follows recipe order; cols == sum of source channel counts.
    """
    if not tensors:
        raise EmptyRecipe(f"recipe {recipe.name!r} has no source tensors")
    th, tw = _resolve_grid(recipe.target_grid, tensors)
    parts = []
    for t in tensors:
        r = resample_bilinear(t, th, tw)
        if recipe.standardize:
            r = standardize_channels(r)
        parts.append(r.data)
    grid = np.concatenate(parts, axis=2)
    return PixelMatrix(grid.reshape(th * tw, -1), th, tw)
