"""Minimal TFRE writer/reader used by the exporter.

Byte layout (integers little-endian):

    magic   4 bytes  'TFRE'
    version u32      1
    count   u32      number of item records
    dim     u32      vector length
    records count x { id_len: u16, id: UTF-8 bytes, dim x float32 }

This mirrors the consuming recommender's on-disk contract; the exporter
deliberately reimplements it so the two packages share only the file format.
"""

from __future__ import annotations

import struct
from typing import Dict, List, Tuple

import numpy as np

from .errors import TableFormatError

MAGIC = b"TFRE"
VERSION = 1


def write_table(path, dim: int, entries: List[Tuple[str, np.ndarray]]) -> None:
    """Write records in the given order; vectors truncate to float32."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<III", VERSION, len(entries), dim))
        for item_id, vec in entries:
            vec = np.asarray(vec, dtype="<f4")
            if vec.shape != (dim,):
                raise TableFormatError(f"vector for {item_id!r} has shape {vec.shape}, expected ({dim},)", 0)
            raw = item_id.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise TableFormatError(f"item id too long: {len(raw)} bytes", 0)
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(vec.tobytes())


def read_table(path) -> Tuple[int, Dict[str, np.ndarray]]:
    """(dim, id -> float32 vector); faults carry the byte offset."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 16:
        raise TableFormatError("file shorter than the 16-byte header", len(data))
    if data[:4] != MAGIC:
        raise TableFormatError(f"bad magic {data[:4]!r}", 0)
    version, count, dim = struct.unpack_from("<III", data, 4)
    if version != VERSION:
        raise TableFormatError(f"unsupported version {version}", 4)
    offset = 16
    entries: Dict[str, np.ndarray] = {}
    for _ in range(count):
        if offset + 2 > len(data):
            raise TableFormatError("truncated record header", offset)
        (id_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if offset + id_len + 4 * dim > len(data):
            raise TableFormatError("truncated record payload", offset)
        item_id = data[offset : offset + id_len].decode("utf-8")
        offset += id_len
        entries[item_id] = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).copy()
        offset += 4 * dim
    if offset != len(data):
        raise TableFormatError(f"{len(data) - offset} trailing bytes after last record", offset)
    return dim, entries
