"""Item-text manifest: UTF-8 lines of ``item_id<TAB>title``."""

from __future__ import annotations

from pathlib import Path
from typing import List, Tuple

from .errors import ManifestError


def parse_manifest_lines(lines) -> List[Tuple[str, str]]:
    """Ordered (item_id, title) pairs; ids unique, titles non-empty."""
    seen = set()
    records: List[Tuple[str, str]] = []
    for line_no, line in enumerate(lines, start=1):
        line = line.rstrip("\n")
        if not line.strip():
            continue
        if "\t" not in line:
            raise ManifestError(f"expected 'item_id<TAB>title', got {line!r}", line_no)
        item_id, _, title = line.partition("\t")
        item_id = item_id.strip()
        title = title.strip()
        if not item_id:
            raise ManifestError("empty item id", line_no)
        if not title:
            raise ManifestError(f"empty title for item {item_id!r}", line_no)
        if item_id in seen:
            raise ManifestError(f"duplicate item id {item_id!r}", line_no)
        seen.add(item_id)
        records.append((item_id, title))
    return records


def read_manifest(path) -> List[Tuple[str, str]]:
    text = Path(path).read_text(encoding="utf-8")
    return parse_manifest_lines(text.splitlines())
