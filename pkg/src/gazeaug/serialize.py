"""Versioned binary container for fitted models.

Layout (all little-endian):

    bytes 0..7    magic b"GZAUG001"
    bytes 8..11   uint32 header length H
    bytes 12..12+H-1   UTF-8 JSON header:
        {"kind": str, "meta": {...},
         "arrays": [{"name": str, "shape": [...], "dtype": "<f8"|"<i8"}, ...]}
    remainder     the arrays' raw C-order buffers, concatenated in
                  manifest order

Only float64 and int64 arrays are stored; everything else goes in meta.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import SchemaMismatch

MAGIC = b"GZAUG001"
_DTYPES = {"<f8": np.dtype("<f8"), "<i8": np.dtype("<i8")}


def save_model(path, kind: str, meta: dict, arrays: dict[str, np.ndarray]) -> None:
    manifest = []
    buffers = []
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        if arr.dtype == np.float64:
            code = "<f8"
        elif arr.dtype == np.int64:
            code = "<i8"
        else:
            arr = arr.astype(np.float64)
            code = "<f8"
        arr = arr.astype(_DTYPES[code], copy=False)
        manifest.append({"name": name, "shape": list(arr.shape), "dtype": code})
        buffers.append(arr.tobytes(order="C"))
    header = json.dumps({"kind": kind, "meta": meta, "arrays": manifest},
                        sort_keys=True).encode("utf-8")
    with Path(path).open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for buf in buffers:
            fh.write(buf)


def load_model(path) -> tuple[str, dict, dict[str, np.ndarray]]:
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise SchemaMismatch(f"{path}: not a gazeaug model file (bad magic)")
    (hlen,) = struct.unpack("<I", raw[8:12])
    header = json.loads(raw[12 : 12 + hlen].decode("utf-8"))
    offset = 12 + hlen
    arrays = {}
    for entry in header["arrays"]:
        dtype = _DTYPES[entry["dtype"]]
        count = int(np.prod(entry["shape"])) if entry["shape"] else 1
        nbytes = count * dtype.itemsize
        arr = np.frombuffer(raw[offset : offset + nbytes], dtype=dtype).reshape(entry["shape"])
        arrays[entry["name"]] = arr.copy()
        offset += nbytes
    return header["kind"], header["meta"], arrays
