"""Tensor file format and checkpoint directories.

File layout: magic b"AGRT", version byte 0x01, dtype byte (0x01 float32,
0x02 float64), rank byte, rank little-endian uint32 dims, then the row-major
little-endian payload. A checkpoint is a directory of tensor files plus a
JSON index mapping each parameter name to its file, shape and layer.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"AGRT"
VERSION = 1
_DTYPE_CODE = {np.dtype(np.float32): 0x01, np.dtype(np.float64): 0x02}
_CODE_DTYPE = {v: k for k, v in _DTYPE_CODE.items()}


class TensorFormatError(IOError):
    pass


def save_tensor(path: str | Path, arr: np.ndarray) -> None:
    arr = np.ascontiguousarray(arr)
    if arr.dtype not in _DTYPE_CODE:
        raise TensorFormatError(f"{path}: unsupported dtype {arr.dtype} (float32/float64 only)")
    header = MAGIC + struct.pack("<BBB", VERSION, _DTYPE_CODE[arr.dtype], arr.ndim)
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    payload = arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes()
    Path(path).write_bytes(header + payload)


def load_tensor(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 7:
        raise TensorFormatError(f"{path}: truncated header")
    if raw[:4] != MAGIC:
        raise TensorFormatError(f"{path}: bad magic bytes {raw[:4]!r}")
    version, dtype_code, rank = struct.unpack("<BBB", raw[4:7])
    if version != VERSION:
        raise TensorFormatError(f"{path}: unsupported version {version}")
    if dtype_code not in _CODE_DTYPE:
        raise TensorFormatError(f"{path}: unknown dtype code {dtype_code:#x}")
    dims_end = 7 + 4 * rank
    if len(raw) < dims_end:
        raise TensorFormatError(f"{path}: truncated dims")
    dims = struct.unpack(f"<{rank}I", raw[7:dims_end])
    dtype = _CODE_DTYPE[dtype_code]
    expected = int(np.prod(dims, dtype=np.int64)) * dtype.itemsize if rank else dtype.itemsize
    payload = raw[dims_end:]
    if len(payload) != expected:
        raise TensorFormatError(f"{path}: payload is {len(payload)} bytes, expected {expected}")
    arr = np.frombuffer(payload, dtype=dtype.newbyteorder("<")).astype(dtype, copy=True)
    return arr.reshape(dims)


def _flat_name(name: str) -> str:
    return name.replace("/", "_").replace(".", "_") + ".agrt"


def save_named_tensors(directory: str | Path, tensors: dict[str, np.ndarray],
                       layer_of: dict[str, str] | None = None,
                       meta: dict | None = None) -> None:
    """Write tensors plus an index.json; meta is stored alongside the index."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    index = {}
    for name, arr in tensors.items():
        fname = _flat_name(name)
        save_tensor(directory / fname, arr)
        index[name] = {
            "file": fname,
            "shape": list(arr.shape),
            "layer": (layer_of or {}).get(name, name.split(".")[0]),
        }
    doc = {"tensors": index}
    if meta is not None:
        doc["meta"] = meta
    (directory / "index.json").write_text(json.dumps(doc, indent=2, sort_keys=True))


def load_named_tensors(directory: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    directory = Path(directory)
    index_path = directory / "index.json"
    if not index_path.exists():
        raise TensorFormatError(f"{index_path}: missing checkpoint index")
    doc = json.loads(index_path.read_text())
    tensors = {}
    for name, entry in doc["tensors"].items():
        arr = load_tensor(directory / entry["file"])
        if list(arr.shape) != entry["shape"]:
            raise TensorFormatError(
                f"{directory / entry['file']}: shape {list(arr.shape)} does not match index {entry['shape']}"
            )
        tensors[name] = arr
    return tensors, doc.get("meta", {})
