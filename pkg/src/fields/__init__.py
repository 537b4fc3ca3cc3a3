from src.fields.grid import Grid, fft_workers
from src.fields.snapshot import FieldKind, Snapshot, SnapshotError, read_snapshot, write_snapshot

__all__ = [
    "FieldKind",
    "Grid",
    "Snapshot",
    "SnapshotError",
    "fft_workers",
    "read_snapshot",
    "write_snapshot",
]
