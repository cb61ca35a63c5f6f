"""ABTF in five minutes: the tensor container every other demo builds on.

Everything the metric kernels consume travels as .abtf files: a 4-byte
magic, a u32 header length, a canonical-JSON header, then raw bytes.
"""

import tempfile
from pathlib import Path

import numpy as np

from animetric import MaskSequence, TensorHeader, read_array, read_tensor_file, write_array

workdir = Path(tempfile.mkdtemp(prefix="abtf-demo-"))
print(f"working in {workdir}\n")

# A float tensor round-trips bit-exactly.
flow = np.random.default_rng(0).normal(size=(3, 8, 8, 2)).astype(np.float32)
write_array(workdir / "demo.flow.abtf", flow)
back = read_array(workdir / "demo.flow.abtf")
print(f"flow round-trip exact: {np.array_equal(flow, back)}")

# The header is readable without any library: magic, length, JSON.
header, payload = read_tensor_file(workdir / "demo.flow.abtf")
print(f"header: {header}")
print(f"payload bytes: {len(payload)}")
print(f"canonical header JSON: {header.to_json_bytes().decode()}\n")

# Typed wrappers add invariants: masks must be binary, at least 2 frames.
masks = MaskSequence(data=(np.random.default_rng(1).random((4, 16, 16)) > 0.5).astype(np.uint8))
masks.save(workdir / "demo.masks.abtf")
print(f"mask sequence saved and reloaded: {MaskSequence.load(workdir / 'demo.masks.abtf').frame_count} frames")

# Corruption is rejected loudly, never silently mis-read.
blob = bytearray((workdir / "demo.flow.abtf").read_bytes())
blob[:4] = b"XXXX"
(workdir / "corrupt.abtf").write_bytes(bytes(blob))
try:
    read_tensor_file(workdir / "corrupt.abtf")
except Exception as exc:
    print(f"corrupt file rejected: {type(exc).__name__}: {exc}")
