"""Standalone FMX1 writer.

Byte layout per record (little-endian): magic "FMX1", dtype uint8 (1 =
float32), rank uint8 (2 or 3), rank x uint32 dims, row-major float32 payload.
Written independently of the scoring toolkit so the two sides of the format
contract stay separate.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"FMX1"
DTYPE_FLOAT32 = 1


def _record_bytes(array: np.ndarray) -> bytes:
    payload = np.ascontiguousarray(array, dtype="<f4")
    if payload.ndim not in (2, 3):
        raise ValueError(f"rank must be 2 or 3, got {payload.ndim}")
    if not np.all(np.isfinite(payload)):
        raise ValueError("payload contains non-finite values")
    header = MAGIC + struct.pack("<BB", DTYPE_FLOAT32, payload.ndim)
    header += struct.pack(f"<{payload.ndim}I", *payload.shape)
    return header + payload.tobytes()


def write_matrix(matrix: np.ndarray, path) -> None:
    """Write one N x d feature matrix as a single-record file."""
    arr = np.asarray(matrix)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {arr.shape}")
    with open(path, "wb") as handle:
        handle.write(_record_bytes(arr))


def write_maps(maps, path) -> None:
    """Write per-image C x H x W maps as consecutive rank-3 records."""
    arrays = [np.asarray(m) for m in maps]
    if not arrays:
        raise ValueError("at least one map required")
    with open(path, "wb") as handle:
        for m in arrays:
            if m.ndim != 3:
                raise ValueError(f"expected 3-D maps, got shape {m.shape}")
            handle.write(_record_bytes(m))
