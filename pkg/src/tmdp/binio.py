"""Deterministic binary container: one JSON header plus named ndarray payloads.

Layout: 6-byte magic, big-endian uint32 header length, UTF-8 JSON header
(sorted keys, compact separators), then the raw C-order bytes of each array
in the order listed by the header. Byte-for-byte reproducible for identical
content, which the determinism guarantees of the CLI/HTTP pipelines rely on.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Any, Mapping

import numpy as np

_MAGIC = b"TMDPB1"


def dumps_blob(meta: Mapping[str, Any], arrays: Mapping[str, np.ndarray]) -> bytes:
    names = sorted(arrays)
    directory = []
    payload = bytearray()
    for name in names:
        arr = np.ascontiguousarray(arrays[name])
        directory.append({"name": name, "dtype": arr.dtype.str, "shape": list(arr.shape)})
        payload += arr.tobytes()
    header = json.dumps(
        {"meta": dict(meta), "arrays": directory},
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    return _MAGIC + struct.pack(">I", len(header)) + header + bytes(payload)


def loads_blob(data: bytes) -> tuple[dict[str, Any], dict[str, np.ndarray]]:
    if data[: len(_MAGIC)] != _MAGIC:
        raise ValueError("not a tmdp binary blob (bad magic)")
    (hlen,) = struct.unpack(">I", data[len(_MAGIC) : len(_MAGIC) + 4])
    start = len(_MAGIC) + 4
    header = json.loads(data[start : start + hlen].decode("utf-8"))
    offset = start + hlen
    arrays: dict[str, np.ndarray] = {}
    for entry in header["arrays"]:
        dtype = np.dtype(entry["dtype"])
        shape = tuple(entry["shape"])
        nbytes = dtype.itemsize * int(np.prod(shape, dtype=np.int64)) if shape else dtype.itemsize
        n_items = int(np.prod(shape, dtype=np.int64))
        nbytes = dtype.itemsize * n_items
        arrays[entry["name"]] = np.frombuffer(
            data, dtype=dtype, count=n_items, offset=offset
        ).reshape(shape).copy()
        offset += nbytes
    return header["meta"], arrays


def write_blob(path: str | Path, meta: Mapping[str, Any], arrays: Mapping[str, np.ndarray]) -> None:
    Path(path).write_bytes(dumps_blob(meta, arrays))


def read_blob(path: str | Path) -> tuple[dict[str, Any], dict[str, np.ndarray]]:
    return loads_blob(Path(path).read_bytes())


def dump_json(obj: Any, path: str | Path) -> None:
    """Canonical JSON file: sorted keys, 2-space indent, trailing newline."""
    Path(path).write_text(canonical_json(obj), encoding="utf-8")


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"
