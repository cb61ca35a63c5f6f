"""Reader/writer for the ABTF binary tensor container.

ABTF is the on-disk contract between artifact extractors and the metric
kernels: a 4-byte magic ``ABTF``, a little-endian u32 header length, the
header as canonical JSON (sorted keys, no insignificant whitespace), and
the raw row-major payload. Only little-endian f32 and u8 tensors of up to
four dimensions are accepted; anything else is rejected loudly.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"ABTF"
MAX_DIMS = 4

# Hard ceiling on declared payload size (256 GiB); a header past this is
# treated as corrupt rather than attempted.
MAX_PAYLOAD_BYTES = 1 << 38

DTYPE_SIZES = {"f32": 4, "u8": 1}
NUMPY_DTYPES = {"f32": np.dtype("<f4"), "u8": np.dtype("u1")}


class TensorFileError(Exception):
    """Base class for ABTF format violations."""


class BadMagicError(TensorFileError):
    pass


class TruncatedFileError(TensorFileError):
    pass


class UnknownDtypeError(TensorFileError):
    pass


class ShapeError(TensorFileError):
    """Empty shape, non-positive dims, too many dims, or absurd payload size."""


class HeaderMismatchError(TensorFileError):
    """Payload length disagrees with the header."""


@dataclass(frozen=True)
class TensorHeader:
    dtype: str
    shape: tuple[int, ...]
    layout: str = "row-major"
    byte_order: str = "little"

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(d) for d in self.shape))
        validate_header(self)

    @property
    def item_size(self) -> int:
        return DTYPE_SIZES[self.dtype]

    @property
    def nbytes(self) -> int:
        n = self.item_size
        for d in self.shape:
            n *= d
        return n

    def to_json_bytes(self) -> bytes:
        doc = {
            "byte_order": self.byte_order,
            "dtype": self.dtype,
            "layout": self.layout,
            "shape": list(self.shape),
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("ascii")

    @classmethod
    def from_json_bytes(cls, raw: bytes) -> "TensorHeader":
        try:
            doc = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise TensorFileError(f"unreadable header JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise TensorFileError("header is not a JSON object")
        expected = {"byte_order", "dtype", "layout", "shape"}
        if set(doc) != expected:
            raise TensorFileError(
                f"header keys {sorted(doc)} != expected {sorted(expected)}"
            )
        dtype = doc["dtype"]
        if dtype not in DTYPE_SIZES:
            raise UnknownDtypeError(f"unknown dtype {dtype!r}")
        shape = doc["shape"]
        if not isinstance(shape, list) or not all(isinstance(d, int) for d in shape):
            raise ShapeError(f"shape must be a list of integers, got {shape!r}")
        return cls(
            dtype=dtype,
            shape=tuple(shape),
            layout=doc["layout"],
            byte_order=doc["byte_order"],
        )


def validate_header(header: TensorHeader) -> None:
    if header.dtype not in DTYPE_SIZES:
        raise UnknownDtypeError(f"unknown dtype {header.dtype!r}")
    if header.layout != "row-major":
        raise TensorFileError(f"unsupported layout {header.layout!r}")
    if header.byte_order != "little":
        raise TensorFileError(f"unsupported byte order {header.byte_order!r}")
    shape = header.shape
    if len(shape) == 0:
        raise ShapeError("shape must be non-empty")
    if len(shape) > MAX_DIMS:
        raise ShapeError(f"{len(shape)} dims exceeds the {MAX_DIMS}-dim limit")
    for d in shape:
        if d < 1:
            raise ShapeError(f"all dims must be >= 1, got {list(shape)}")
    if header.nbytes > MAX_PAYLOAD_BYTES:
        raise ShapeError(f"declared payload of {header.nbytes} bytes is implausible")


def write_tensor_file(path: str | Path, header: TensorHeader, payload: bytes) -> None:
    """Write one tensor to ``path``; payload length must match the header."""
    validate_header(header)
    if len(payload) != header.nbytes:
        raise HeaderMismatchError(
            f"payload is {len(payload)} bytes but header declares {header.nbytes}"
        )
    head = header.to_json_bytes()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(head)))
        fh.write(head)
        fh.write(payload)


def read_tensor_file(path: str | Path) -> tuple[TensorHeader, bytes]:
    """Exact inverse of :func:`write_tensor_file`; rejects malformed files."""
    raw = Path(path).read_bytes()
    if len(raw) < 4:
        raise TruncatedFileError(f"{path}: file shorter than the magic")
    if raw[:4] != MAGIC:
        raise BadMagicError(f"{path}: bad magic {raw[:4]!r}")
    if len(raw) < 8:
        raise TruncatedFileError(f"{path}: missing header length")
    (head_len,) = struct.unpack("<I", raw[4:8])
    if len(raw) < 8 + head_len:
        raise TruncatedFileError(f"{path}: truncated mid-header")
    header = TensorHeader.from_json_bytes(raw[8 : 8 + head_len])
    payload = raw[8 + head_len :]
    if len(payload) < header.nbytes:
        raise TruncatedFileError(
            f"{path}: payload is {len(payload)} bytes, header declares {header.nbytes}"
        )
    if len(payload) > header.nbytes:
        raise HeaderMismatchError(
            f"{path}: {len(payload) - header.nbytes} trailing bytes after payload"
        )
    return header, payload


def write_array(path: str | Path, array: np.ndarray) -> None:
    """Store a float32 or uint8 ndarray as an ABTF file."""
    arr = np.ascontiguousarray(array)
    if arr.dtype == np.float32:
        dtype = "f32"
        arr = arr.astype("<f4", copy=False)
    elif arr.dtype == np.uint8:
        dtype = "u8"
    else:
        raise UnknownDtypeError(f"only float32/uint8 arrays are storable, got {arr.dtype}")
    header = TensorHeader(dtype=dtype, shape=arr.shape)
    write_tensor_file(path, header, arr.tobytes())


def read_array(path: str | Path) -> np.ndarray:
    header, payload = read_tensor_file(path)
    arr = np.frombuffer(payload, dtype=NUMPY_DTYPES[header.dtype])
    return arr.reshape(header.shape).copy()
