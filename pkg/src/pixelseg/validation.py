"""Input validation helpers shared by the estimators and pipeline code."""

from __future__ import annotations

import numpy as np

from .exceptions import NonFinite


def as_matrix(X, dtype=np.float64) -> np.ndarray:
    """Coerce ``X`` (array or PixelMatrix-like) to a 2-D ndarray of ``dtype``."""
    values = getattr(X, "values", X)
    arr = np.asarray(values, dtype=dtype)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {arr.shape}")
    return arr


def as_labels(y) -> np.ndarray:
    """Coerce ``y`` (array or ClusterLabels-like) to a 1-D integer ndarray."""
    values = getattr(y, "labels", y)
    arr = np.asarray(values)
    if arr.ndim != 1:
        arr = arr.ravel()
    if not np.issubdtype(arr.dtype, np.integer):
        raise ValueError(f"labels must be integers, got dtype {arr.dtype}")
    return arr


def check_finite(arr: np.ndarray, name: str = "data") -> np.ndarray:
    """Raise NonFinite if ``arr`` contains NaN or infinity."""
    if not np.isfinite(arr).all():
        raise NonFinite(f"{name} contains NaN or infinite values")
    return arr


def check_label_grid(labels) -> np.ndarray:
    """Coerce a label map (array or LabelMap-like) to a 2-D integer grid."""
    values = getattr(labels, "labels", labels)
    arr = np.asarray(values)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D label grid, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        raise ValueError(f"label grid must be integers, got dtype {arr.dtype}")
    return arr
