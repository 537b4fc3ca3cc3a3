"""
Binary snapshot files.

Layout: a 64-byte little-endian header followed by the payload as
little-endian float64 in row-major order, shape (*grid, components).

Header: magic b"NEMSNAP1", dim, n, kind, components (uint32 each),
time (float64), step (int64), zero padding.
"""
import logging
import struct
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Union

import numpy as np
from numpy.typing import NDArray

from src.errors import NematicError
from src.observability import ErrorCategory

logger = logging.getLogger(__name__)

MAGIC = b"NEMSNAP1"
HEADER = struct.Struct("<8sIIIIdq24x")
HEADER_SIZE = 64


class FieldKind(IntEnum):
    STATE = 0
    SCALAR = 1
    VECTOR = 2
    QTENSOR = 3


# Components per grid point; STATE packs u(3), Q(5), theta, p.
KIND_COMPONENTS = {
    FieldKind.STATE: 10,
    FieldKind.SCALAR: 1,
    FieldKind.VECTOR: 3,
    FieldKind.QTENSOR: 5,
}


class SnapshotError(NematicError):
    category = ErrorCategory.IO


@dataclass
class Snapshot:
    dim: int
    n: int
    kind: FieldKind
    time: float
    step: int
    data: NDArray[np.float64]  # (*grid, components)


def write_snapshot(
    path: Union[str, Path],
    data: NDArray[np.float64],
    kind: FieldKind,
    time: float,
    step: int,
):
    """Write one field (or a packed state) with its header.

    Args:
        data: Array of shape (*grid, components) on an n^dim grid
    """
    data = np.asarray(data, dtype=np.float64)
    dim = data.ndim - 1
    n = data.shape[0]
    components = KIND_COMPONENTS[kind]
    if dim not in (2, 3) or data.shape != (n,) * dim + (components,):
        raise SnapshotError(f"cannot store array of shape {data.shape} as {kind.name}")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = HEADER.pack(MAGIC, dim, n, int(kind), components, float(time), int(step))
    with open(path, "wb") as handle:
        handle.write(header)
        handle.write(np.ascontiguousarray(data, dtype="<f8").tobytes(order="C"))
    logger.debug(f"Wrote snapshot {path} ({kind.name}, t={time}, step={step})")


def read_snapshot(path: Union[str, Path]) -> Snapshot:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise SnapshotError(f"cannot read snapshot {path}: {e}") from e

    if len(raw) < HEADER_SIZE:
        raise SnapshotError(f"{path}: truncated header")
    magic, dim, n, kind, components, time, step = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise SnapshotError(f"{path}: bad magic {magic!r}")
    try:
        kind = FieldKind(kind)
    except ValueError as e:
        raise SnapshotError(f"{path}: unknown field kind {kind}") from e
    if components != KIND_COMPONENTS[kind]:
        raise SnapshotError(f"{path}: {kind.name} with {components} components")

    shape = (n,) * dim + (components,)
    expected = int(np.prod(shape)) * 8
    payload = raw[HEADER_SIZE:]
    if len(payload) != expected:
        raise SnapshotError(f"{path}: payload has {len(payload)} bytes, expected {expected}")

    data = np.frombuffer(payload, dtype="<f8").reshape(shape).astype(np.float64)
    return Snapshot(dim=dim, n=n, kind=kind, time=time, step=step, data=data)
