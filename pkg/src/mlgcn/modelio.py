"""Portable model file: ``MLGC`` magic, version byte, ``d h c`` as u64 LE,
then W0, W1 and Z row-major as f64 LE."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import MLGCNError
from .gcn import GcnParams

MAGIC = b"MLGC"
VERSION = 1
_HEADER = struct.Struct("<4sBQQQ")


class ModelFormatError(MLGCNError):
    pass


def save_model(path, params: GcnParams, Z: np.ndarray) -> Path:
    d, h = params.W0.shape
    c = params.W1.shape[1]
    if params.W1.shape != (h, c) or Z.shape != (c, h):
        raise ModelFormatError("inconsistent parameter shapes")
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, d, h, c))
        for arr in (params.W0, params.W1, Z):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return path


def load_model(path):
    """Return ``(GcnParams, Z)``."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ModelFormatError(f"{path}: truncated header")
    magic, version, d, h, c = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ModelFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise ModelFormatError(f"{path}: unsupported version {version}")
    sizes = [d * h, h * c, c * h]
    if len(data) != _HEADER.size + 8 * sum(sizes):
        raise ModelFormatError(f"{path}: payload length does not match d={d} h={h} c={c}")
    flat = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).astype(np.float64)
    W0 = flat[: sizes[0]].reshape(d, h)
    W1 = flat[sizes[0]: sizes[0] + sizes[1]].reshape(h, c)
    Z = flat[sizes[0] + sizes[1]:].reshape(c, h)
    return GcnParams(W0, W1), Z
