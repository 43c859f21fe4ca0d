"""Binary containers: float32 embedding stores and float64 model checkpoints.

Embedding store layout (little-endian, bit-exact):
    magic b"EMBS" | u32 version=1 | u32 count | u32 dim | count*dim float32 row-major

Checkpoint layout (same container style):
    magic b"MDL1" | u32 version=1 | u32 meta_len | meta (UTF-8 JSON)
    | u32 n_tensors | per tensor: u32 name_len | name | u32 ndim | u32 dims... | float64 data
Tensors are written in sorted-name order so identical contents give identical bytes.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

STORE_MAGIC = b"EMBS"
STORE_VERSION = 1
CHECKPOINT_MAGIC = b"MDL1"
CHECKPOINT_VERSION = 1


class StoreFormatError(Exception):
    """Raised for bad magic, unknown version, truncated or trailing payload."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = str(path)


def write_store(path, matrix) -> None:
    matrix = np.ascontiguousarray(matrix, dtype=np.float32)
    if matrix.ndim != 2:
        raise ValueError(f"embedding store needs a 2-D matrix, got shape {matrix.shape}")
    if not np.isfinite(matrix).all():
        raise ValueError("embedding store entries must be finite")
    count, dim = matrix.shape
    with open(path, "wb") as fh:
        fh.write(STORE_MAGIC)
        fh.write(struct.pack("<III", STORE_VERSION, count, dim))
        fh.write(matrix.astype("<f4").tobytes())


def read_store_header(path) -> tuple[int, int]:
    """Read (count, dim) and validate the payload size without loading it."""
    path = Path(path)
    with open(path, "rb") as fh:
        header = fh.read(16)
    if len(header) < 16:
        raise StoreFormatError(path, f"file too short for a store header ({len(header)} bytes)")
    magic = header[:4]
    if magic != STORE_MAGIC:
        raise StoreFormatError(path, f"bad magic {magic!r}, expected {STORE_MAGIC!r}")
    version, count, dim = struct.unpack("<III", header[4:16])
    if version != STORE_VERSION:
        raise StoreFormatError(path, f"unknown store version {version}")
    expected = 16 + count * dim * 4
    actual = path.stat().st_size
    if actual < expected:
        raise StoreFormatError(path, f"truncated payload: header says {count}x{dim}, file holds {actual} bytes")
    if actual > expected:
        raise StoreFormatError(path, f"{actual - expected} trailing bytes after {count}x{dim} payload")
    return count, dim


def read_store(path) -> np.ndarray:
    count, dim = read_store_header(path)
    with open(path, "rb") as fh:
        fh.seek(16)
        payload = fh.read(count * dim * 4)
    matrix = np.frombuffer(payload, dtype="<f4").reshape(count, dim)
    if not np.isfinite(matrix).all():
        raise StoreFormatError(path, "non-finite entries in payload")
    return matrix


def write_checkpoint(path, meta: dict, tensors: dict[str, np.ndarray]) -> None:
    meta_bytes = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(meta_bytes)))
        fh.write(meta_bytes)
        fh.write(struct.pack("<I", len(tensors)))
        for name in sorted(tensors):
            # np.asarray, not ascontiguousarray: the latter promotes 0-d to 1-d
            arr = np.asarray(tensors[name], dtype=np.float64)
            name_bytes = name.encode("utf-8")
            fh.write(struct.pack("<I", len(name_bytes)))
            fh.write(name_bytes)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.astype("<f8").tobytes())


def read_checkpoint(path) -> tuple[dict, dict[str, np.ndarray]]:
    path = Path(path)
    data = path.read_bytes()
    if data[:4] != CHECKPOINT_MAGIC:
        raise StoreFormatError(path, f"bad magic {data[:4]!r}, expected {CHECKPOINT_MAGIC!r}")
    offset = 4

    def take(fmt):
        nonlocal offset
        size = struct.calcsize(fmt)
        if offset + size > len(data):
            raise StoreFormatError(path, "truncated checkpoint")
        values = struct.unpack_from(fmt, data, offset)
        offset += size
        return values

    (version, meta_len) = take("<II")
    if version != CHECKPOINT_VERSION:
        raise StoreFormatError(path, f"unknown checkpoint version {version}")
    if offset + meta_len > len(data):
        raise StoreFormatError(path, "truncated checkpoint metadata")
    meta = json.loads(data[offset : offset + meta_len].decode("utf-8"))
    offset += meta_len
    (n_tensors,) = take("<I")
    tensors: dict[str, np.ndarray] = {}
    for _ in range(n_tensors):
        (name_len,) = take("<I")
        name = data[offset : offset + name_len].decode("utf-8")
        offset += name_len
        (ndim,) = take("<I")
        shape = take(f"<{ndim}I")
        size = int(np.prod(shape, dtype=np.int64)) * 8
        if offset + size > len(data):
            raise StoreFormatError(path, f"truncated tensor payload for {name!r}")
        tensors[name] = np.frombuffer(data, dtype="<f8", count=size // 8, offset=offset).reshape(shape).copy()
        offset += size
    if offset != len(data):
        raise StoreFormatError(path, f"{len(data) - offset} trailing bytes after last tensor")
    return meta, tensors
