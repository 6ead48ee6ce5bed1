"""Binary table writer/reader: round trips and fault offsets."""

import struct

import numpy as np
import pytest

from embed_export.errors import TableFormatError
from embed_export.tfre_io import read_table, write_table


def _entries(n=3, dim=4, seed=0):
    rng = np.random.default_rng(seed)
    return [(f"id-{i}", rng.normal(size=dim).astype("<f4")) for i in range(n)]


def test_round_trip(tmp_path):
    path = tmp_path / "t.tfre"
    entries = _entries()
    write_table(path, 4, entries)
    dim, loaded = read_table(path)
    assert dim == 4
    assert list(loaded) == [i for i, _ in entries]
    for item_id, vec in entries:
        np.testing.assert_array_equal(loaded[item_id], vec)


def test_empty_table_is_header_only(tmp_path):
    path = tmp_path / "e.tfre"
    write_table(path, 7, [])
    assert path.read_bytes() == b"TFRE" + struct.pack("<III", 1, 0, 7)
    dim, loaded = read_table(path)
    assert dim == 7 and loaded == {}


def test_rewrite_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.tfre", tmp_path / "b.tfre"
    entries = _entries(seed=1)
    write_table(a, 4, entries)
    dim, loaded = read_table(a)
    write_table(b, dim, list(loaded.items()))
    assert a.read_bytes() == b.read_bytes()


def test_bad_magic_offset_zero(tmp_path):
    path = tmp_path / "bad.tfre"
    path.write_bytes(b"NOPE" + struct.pack("<III", 1, 0, 4))
    with pytest.raises(TableFormatError) as exc:
        read_table(path)
    assert exc.value.offset == 0


def test_bad_version_offset_four(tmp_path):
    path = tmp_path / "v.tfre"
    path.write_bytes(b"TFRE" + struct.pack("<III", 9, 0, 4))
    with pytest.raises(TableFormatError) as exc:
        read_table(path)
    assert exc.value.offset == 4


def test_truncated_record_reports_offset(tmp_path):
    path = tmp_path / "t.tfre"
    write_table(path, 4, _entries())
    data = path.read_bytes()
    path.write_bytes(data[:-5])
    with pytest.raises(TableFormatError) as exc:
        read_table(path)
    assert 16 <= exc.value.offset < len(data)


def test_trailing_bytes_rejected(tmp_path):
    path = tmp_path / "t.tfre"
    write_table(path, 4, _entries())
    path.write_bytes(path.read_bytes() + b"\x00")
    with pytest.raises(TableFormatError):
        read_table(path)


def test_wrong_vector_shape_rejected(tmp_path):
    with pytest.raises(TableFormatError):
        write_table(tmp_path / "x.tfre", 4, [("a", np.zeros(3, dtype="<f4"))])
