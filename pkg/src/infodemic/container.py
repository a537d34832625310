"""Versioned binary model container.

Layout (all integers little-endian):

    magic   4 bytes  "IFDM"
    version 1 byte   (currently 1)
    meta    uint32 length + UTF-8 JSON: model kind, architecture or
            hyperparameters, vocabulary hash, preprocessing-config hash
    count   uint32 number of named arrays
    arrays  uint16 name length + name, uint8 dtype code, uint8 ndim,
            ndim * uint32 dims, raw little-endian payload

Neural parameters are stored as float32; tree node tables and count
tables use int32/int64/float64 as declared per array.
"""

from __future__ import annotations

import json
import struct

import numpy as np

MAGIC = b"IFDM"
VERSION = 1

_DTYPES = {0: "<f4", 1: "<f8", 2: "<i8", 3: "<i4"}
_CODES = {np.dtype("float32"): 0, np.dtype("float64"): 1,
          np.dtype("int64"): 2, np.dtype("int32"): 3}


class ContainerError(Exception):
    pass


def save_container(path, meta: dict, arrays: dict[str, np.ndarray]) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<B", VERSION))
        blob = json.dumps(meta, sort_keys=True).encode("utf-8")
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(struct.pack("<I", len(arrays)))
        for name, arr in arrays.items():
            arr = np.ascontiguousarray(arr)
            if arr.dtype not in _CODES:
                raise ContainerError(f"unsupported array dtype {arr.dtype} for {name!r}")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<BB", _CODES[arr.dtype], arr.ndim))
            for dim in arr.shape:
                fh.write(struct.pack("<I", dim))
            fh.write(arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes())


def load_container(path) -> tuple[dict, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise ContainerError(f"{path}: not a model container (bad magic)")
        (version,) = struct.unpack("<B", fh.read(1))
        if version != VERSION:
            raise ContainerError(f"{path}: unsupported container version {version}")
        (meta_len,) = struct.unpack("<I", fh.read(4))
        meta = json.loads(fh.read(meta_len).decode("utf-8"))
        (count,) = struct.unpack("<I", fh.read(4))
        arrays: dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", fh.read(2))
            name = fh.read(name_len).decode("utf-8")
            code, ndim = struct.unpack("<BB", fh.read(2))
            if code not in _DTYPES:
                raise ContainerError(f"{path}: unknown dtype code {code}")
            shape = tuple(struct.unpack("<I", fh.read(4))[0] for _ in range(ndim))
            dtype = np.dtype(_DTYPES[code])
            n_items = int(np.prod(shape)) if shape else 1
            data = fh.read(n_items * dtype.itemsize)
            arrays[name] = np.frombuffer(data, dtype=dtype).reshape(shape).copy()
    return meta, arrays


def verify_pipeline_hashes(meta: dict, vocab_hash: str | None,
                           preprocess_hash: str | None) -> None:
    """Refuse to pair a model with a pipeline it was not trained against."""
    stored_v = meta.get("vocab_hash")
    if vocab_hash is not None and stored_v is not None and stored_v != vocab_hash:
        raise ContainerError(
            "vocabulary hash mismatch: the model was trained against a "
            f"different vocabulary ({stored_v[:12]}... != {vocab_hash[:12]}...)")
    stored_p = meta.get("preprocess_hash")
    if preprocess_hash is not None and stored_p is not None and stored_p != preprocess_hash:
        raise ContainerError(
            "preprocessing-config hash mismatch: the model was trained with "
            f"different preprocessing ({stored_p[:12]}... != {preprocess_hash[:12]}...)")
