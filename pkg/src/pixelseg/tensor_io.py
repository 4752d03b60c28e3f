"""Bit-exact I/O for feature tensors (FTZ files) and 8-bit label-map PNGs.

FTZ byte layout, little-endian throughout:

    bytes 0-3    magic ASCII "FTZ1"
    bytes 4-7    uint32 header length L
    bytes 8..    UTF-8 JSON header with required keys
                 ``dtype`` ("f32"), ``shape`` ([H, W, C]), ``layout`` ("HWC")
                 and optional ``meta`` (string -> string)
    remainder    H*W*C float32 values, index order ((h*W)+w)*C + c

One tensor per file; no compression; payload length must match the header
exactly (trailing bytes are rejected).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np
from PIL import Image, UnidentifiedImageError

from .exceptions import (
    BadMagic,
    HeaderMismatch,
    IoFailure,
    LabelOutOfRange,
    NonFinite,
    UnsupportedPng,
)

MAGIC = b"FTZ1"

MAX_LABEL = 254  # 255 is reserved


@dataclass
class FeatureTensor:
    """An H x W x C float32 activation grid with provenance metadata."""

    data: np.ndarray
    meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float32)
        if arr.ndim != 3:
            raise ValueError(f"feature tensor must be H x W x C, got shape {arr.shape}")
        if min(arr.shape) < 1:
            raise ValueError(f"all tensor dimensions must be >= 1, got {arr.shape}")
        self.data = arr

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass
class LabelMap:
    """A per-pixel integer label grid; every label must stay below 255."""

    labels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.labels)
        if arr.ndim != 2:
            raise ValueError(f"label map must be 2-D, got shape {arr.shape}")
        if not np.issubdtype(arr.dtype, np.integer):
            raise ValueError(f"label map must be integer-typed, got {arr.dtype}")
        self.labels = arr

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


def _canonical_header(tensor: FeatureTensor) -> bytes:
    h, w, c = tensor.data.shape
    header = {"dtype": "f32", "shape": [h, w, c], "layout": "HWC"}
    if tensor.meta:
        header["meta"] = {str(k): str(v) for k, v in tensor.meta.items()}
    return json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")


def write_ftz(tensor: FeatureTensor, path) -> None:
    """Write ``tensor`` to ``path`` in the FTZ byte layout.

    Identical tensors produce byte-identical files. Raises NonFinite before
    touching the filesystem if the payload contains NaN/Inf.
    """
    if not np.isfinite(tensor.data).all():
        raise NonFinite("refusing to write tensor with NaN/Inf values")
    header = _canonical_header(tensor)
    payload = np.ascontiguousarray(tensor.data, dtype="<f4").tobytes()
    blob = MAGIC + struct.pack("<I", len(header)) + header + payload
    try:
        with open(path, "wb") as fh:
            fh.write(blob)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_ftz(path) -> FeatureTensor:
    """Read an FTZ file, validating magic, header, payload length and finiteness."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc

    if len(blob) < 4 or blob[:4] != MAGIC:
        raise BadMagic(f"{path} is not an FTZ file")
    if len(blob) < 8:
        raise HeaderMismatch(f"{path}: truncated before header length")
    (header_len,) = struct.unpack("<I", blob[4:8])
    header_end = 8 + header_len
    if len(blob) < header_end:
        raise HeaderMismatch(f"{path}: truncated header ({header_len} bytes declared)")
    try:
        header = json.loads(blob[8:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise HeaderMismatch(f"{path}: header is not valid JSON: {exc}") from exc
    if not isinstance(header, dict):
        raise HeaderMismatch(f"{path}: header must be a JSON object")
    if header.get("dtype") != "f32":
        raise HeaderMismatch(f"{path}: unsupported dtype {header.get('dtype')!r}")
    if header.get("layout") != "HWC":
        raise HeaderMismatch(f"{path}: unsupported layout {header.get('layout')!r}")
    shape = header.get("shape")
    if (
        not isinstance(shape, list)
        or len(shape) != 3
        or not all(isinstance(v, int) and v >= 1 for v in shape)
    ):
        raise HeaderMismatch(f"{path}: bad shape {shape!r}")
    meta = header.get("meta", {})
    if not isinstance(meta, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in meta.items()
    ):
        raise HeaderMismatch(f"{path}: meta must map strings to strings")

    h, w, c = shape
    expected = h * w * c * 4
    payload = blob[header_end:]
    if len(payload) != expected:
        raise HeaderMismatch(
            f"{path}: payload is {len(payload)} bytes, shape {shape} needs {expected}"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(h, w, c).copy()
    if not np.isfinite(data).all():
        raise NonFinite(f"{path}: payload contains NaN/Inf values")
    return FeatureTensor(data, dict(meta))


def write_label_png(label_map: LabelMap, path) -> None:
    """Write a LabelMap as an 8-bit grayscale PNG (pixel value == label)."""
    arr = label_map.labels
    if arr.min() < 0 or arr.max() > MAX_LABEL:
        raise LabelOutOfRange(
            f"labels must lie in [0, {MAX_LABEL}], got range [{arr.min()}, {arr.max()}]"
        )
    img = Image.fromarray(arr.astype(np.uint8), mode="L")
    try:
        img.save(path, format="PNG")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_label_png(path) -> LabelMap:
    """Read an 8-bit single-channel PNG as a LabelMap.

    Grayscale ("L") and palette ("P") images are accepted; palette indices are
    taken as labels. Multi-channel or >8-bit images raise UnsupportedPng.
    """
    try:
        with Image.open(path) as img:
            mode = img.mode
            if mode not in ("L", "P"):
                raise UnsupportedPng(f"{path}: mode {mode!r} is not 8-bit single-channel")
            arr = np.asarray(img, dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise UnsupportedPng(f"{path}: not a decodable image: {exc}") from exc
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if arr.max(initial=0) > MAX_LABEL:
        raise LabelOutOfRange(f"{path}: contains reserved label 255")
    return LabelMap(arr)
