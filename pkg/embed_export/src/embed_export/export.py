"""Manifest -> embedding-table export and table-vs-manifest verification."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from .encoder import TextEncoder
from .errors import TableFormatError
from .manifest import read_manifest
from .tfre_io import read_table, write_table


def export_table(manifest_path, model_id: str, pooling: str, out_path) -> int:
    """Embed every manifest title and write the table; returns the item count.

    Identical titles share one encoder pass, so they get bit-identical
    vectors. An empty manifest still produces a valid header-only file with
    the encoder's dimension recorded.
    """
    records = read_manifest(manifest_path)
    encoder = TextEncoder(model_id)
    cache: Dict[str, np.ndarray] = {}
    entries = []
    for item_id, title in records:
        if title not in cache:
            cache[title] = encoder.embed(title, pooling)
        entries.append((item_id, cache[title]))
    write_table(out_path, encoder.dim, entries)
    return len(entries)


@dataclass
class VerifyReport:
    ok: bool
    count: int
    dim: int
    problems: List[str] = field(default_factory=list)

    def render(self) -> str:
        head = f"{'PASS' if self.ok else 'FAIL'}: {self.count} vectors, dim {self.dim}"
        return "\n".join([head] + [f"  - {p}" for p in self.problems])


def verify_table(tfre_path, manifest_path) -> VerifyReport:
    """Check a table against its manifest: coverage, dimension, finiteness."""
    try:
        dim, entries = read_table(tfre_path)
    except TableFormatError as exc:
        return VerifyReport(ok=False, count=0, dim=0, problems=[str(exc)])
    problems: List[str] = []
    manifest_ids = [item_id for item_id, _ in read_manifest(manifest_path)]
    for item_id in manifest_ids:
        if item_id not in entries:
            problems.append(f"manifest id {item_id!r} missing from table")
    manifest_set = set(manifest_ids)
    for item_id in entries:
        if item_id not in manifest_set:
            problems.append(f"table id {item_id!r} not in manifest")
    if dim < 1 and entries:
        problems.append(f"non-positive dimension {dim}")
    for item_id, vec in entries.items():
        if vec.shape != (dim,):
            problems.append(f"vector for {item_id!r} has {vec.size} entries, expected {dim}")
        elif not np.all(np.isfinite(vec)):
            problems.append(f"non-finite entries in vector for {item_id!r}")
    return VerifyReport(ok=not problems, count=len(entries), dim=dim, problems=problems)
