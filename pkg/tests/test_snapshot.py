# tests/test_snapshot.py
import numpy as np
import pytest

from src.fields.snapshot import (
    HEADER,
    HEADER_SIZE,
    FieldKind,
    SnapshotError,
    read_snapshot,
    write_snapshot,
)


def test_header_is_64_bytes():
    assert HEADER.size == HEADER_SIZE == 64


def test_state_snapshot_preserves_payload(tmp_path):
    data = np.random.default_rng(1).normal(size=(8, 8, 10))
    path = tmp_path / "nested" / "state.bin"
    write_snapshot(path, data, FieldKind.STATE, time=0.25, step=250)

    snapshot = read_snapshot(path)
    assert (snapshot.dim, snapshot.n, snapshot.kind) == (2, 8, FieldKind.STATE)
    assert snapshot.time == 0.25 and snapshot.step == 250
    assert np.array_equal(snapshot.data, data)
    assert path.stat().st_size == HEADER_SIZE + data.size * 8


def test_rejects_wrong_component_count(tmp_path):
    with pytest.raises(SnapshotError):
        write_snapshot(tmp_path / "q.bin", np.zeros((8, 8, 3)), FieldKind.QTENSOR, 0.0, 0)


def test_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.bin"
    write_snapshot(path, np.zeros((8, 8, 1)), FieldKind.SCALAR, 0.0, 0)
    raw = bytearray(path.read_bytes())
    raw[:8] = b"NOTASNAP"
    path.write_bytes(bytes(raw))
    with pytest.raises(SnapshotError):
        read_snapshot(path)


def test_rejects_truncated_payload(tmp_path):
    path = tmp_path / "short.bin"
    write_snapshot(path, np.zeros((8, 8, 8, 3)), FieldKind.VECTOR, 1.0, 10)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(SnapshotError):
        read_snapshot(path)


def test_missing_file(tmp_path):
    with pytest.raises(SnapshotError):
        read_snapshot(tmp_path / "absent.bin")
