"""Standalone writer for the ABTF tensor container.

Deliberately independent of the evaluation engine: the on-disk format is
the contract between the two packages, and this module implements it from
the format description alone (magic ``ABTF``, little-endian u32 header
length, canonical-JSON header with sorted keys and no insignificant
whitespace, raw row-major payload; f32/u8 only, at most 4 dims).
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"ABTF"
MAX_DIMS = 4


def write_abtf(path: str | Path, array: np.ndarray) -> None:
    arr = np.ascontiguousarray(array)
    if arr.dtype == np.float32:
        dtype = "f32"
        arr = arr.astype("<f4", copy=False)
    elif arr.dtype == np.uint8:
        dtype = "u8"
    else:
        raise ValueError(f"ABTF stores float32/uint8 only, got {arr.dtype}")
    if not 1 <= arr.ndim <= MAX_DIMS:
        raise ValueError(f"ABTF stores 1..{MAX_DIMS} dims, got {arr.ndim}")
    if min(arr.shape) < 1:
        raise ValueError(f"all dims must be >= 1, got {arr.shape}")
    header = json.dumps(
        {
            "byte_order": "little",
            "dtype": dtype,
            "layout": "row-major",
            "shape": list(arr.shape),
        },
        sort_keys=True,
        separators=(",", ":"),
    ).encode("ascii")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(arr.tobytes())
