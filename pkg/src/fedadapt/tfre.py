"""Reader/writer for the TFRE embedding-table file format.

Layout (all integers little-endian):

    magic   4 bytes  'TFRE'
    version u32      currently 1
    count   u32      number of item records
    dim     u32      vector length
    records count x { id_len: u16, id: UTF-8 bytes, dim x float32 }

Vectors are stored as float32 and upcast to float64 on load. ``store`` after
``load`` reproduces the file bit-for-bit.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from .errors import FormatError, MissingItemError

MAGIC = b"TFRE"
VERSION = 1


@dataclass
class EmbeddingTable:
    """Frozen map item_id -> embedding vector of fixed dimension."""

    dim: int
    entries: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        for item_id, vec in self.entries.items():
            self._check(item_id, vec)

    def _check(self, item_id: str, vec: np.ndarray):
        if vec.shape != (self.dim,):
            raise FormatError(f"vector for {item_id!r} has shape {vec.shape}, expected ({self.dim},)", 0)
        if not np.all(np.isfinite(vec)):
            raise FormatError(f"non-finite entries in vector for {item_id!r}", 0)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, item_id: str) -> bool:
        return item_id in self.entries

    def lookup(self, item_id: str) -> np.ndarray:
        try:
            return self.entries[item_id]
        except KeyError:
            raise MissingItemError(f"item {item_id!r} not in embedding table") from None


def store_embedding_table(table: EmbeddingTable, path) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<III", VERSION, len(table.entries), table.dim))
        for item_id, vec in table.entries.items():
            raw = item_id.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise FormatError(f"item id too long: {len(raw)} bytes", 0)
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(np.asarray(vec, dtype="<f4").tobytes())


def load_embedding_table(path) -> EmbeddingTable:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 16:
        raise FormatError("file shorter than the 16-byte header", len(data))
    if data[:4] != MAGIC:
        raise FormatError(f"bad magic {data[:4]!r}", 0)
    version, count, dim = struct.unpack_from("<III", data, 4)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", 4)
    offset = 16
    entries: Dict[str, np.ndarray] = {}
    vec_bytes = 4 * dim
    for _ in range(count):
        if offset + 2 > len(data):
            raise FormatError("truncated record header", offset)
        (id_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if offset + id_len + vec_bytes > len(data):
            raise FormatError("truncated record payload", offset)
        item_id = data[offset : offset + id_len].decode("utf-8")
        offset += id_len
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).astype(np.float64)
        offset += vec_bytes
        entries[item_id] = vec
    if offset != len(data):
        raise FormatError(f"{len(data) - offset} trailing bytes after last record", offset)
    return EmbeddingTable(dim=dim, entries=entries)
