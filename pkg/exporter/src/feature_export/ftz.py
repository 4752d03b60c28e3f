"""Minimal FTZ writer matching the published byte layout.

Layout: magic "FTZ1", uint32-le header length, UTF-8 JSON header
({"dtype": "f32", "shape": [H, W, C], "layout": "HWC", "meta": {...}}),
then H*W*C little-endian float32 values in HWC order.
"""

from __future__ import annotations

import json
import struct

import numpy as np

MAGIC = b"FTZ1"


def write_ftz(data: np.ndarray, meta: dict[str, str], path) -> None:
    arr = np.ascontiguousarray(data, dtype="<f4")
    if arr.ndim != 3 or min(arr.shape) < 1:
        raise ValueError(f"expected an H x W x C array, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("refusing to write NaN/Inf activations")
    h, w, c = arr.shape
    header = {"dtype": "f32", "shape": [h, w, c], "layout": "HWC"}
    if meta:
        header["meta"] = {str(k): str(v) for k, v in meta.items()}
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC + struct.pack("<I", len(head)) + head + arr.tobytes())


def read_shape(path) -> tuple[int, int, int]:
    """Read just the declared shape (for self-checks; validation is pixelseg's job)."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ValueError(f"{path} is not an FTZ file")
        (length,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(length).decode("utf-8"))
    h, w, c = header["shape"]
    return h, w, c
