"""Binary state files and CSV tables.

Floats are written with 17 significant digits, so every table round-trips
exactly through ``read_csv``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

MAGIC = b"FRGS"
VERSION = 1
# magic, version, dim, n, m, alpha, padding to 32 bytes
_HEADER = struct.Struct("<4sIIIId4x")


def fmt(x: float) -> str:
    return "%.17g" % x


@dataclass(frozen=True)
class StateHeader:
    dim: int
    points: int
    m: int
    alpha: float


def write_state(path: Path | str, values: np.ndarray, alpha: float) -> None:
    """Write ``values`` (shape ``(m, n, ..., n)``) as a little-endian state file."""
    values = np.asarray(values, dtype=np.float64)
    m, dim, n = values.shape[0], values.ndim - 1, values.shape[1]
    if values.shape[1:] != (n,) * dim:
        raise ValueError(f"state values must be (m, n, ..., n), got {values.shape}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, dim, n, m, float(alpha)))
        fh.write(values.astype("<f8").tobytes(order="C"))


def read_state(path: Path | str) -> tuple[StateHeader, np.ndarray]:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError(f"{path}: too short for a state file")
    magic, version, dim, n, m, alpha = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    body = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    if body.size != m * n**dim:
        raise ValueError(f"{path}: expected {m * n**dim} values, found {body.size}")
    return StateHeader(dim, n, m, alpha), body.reshape((m,) + (n,) * dim).astype(np.float64)


def write_csv(path: Path | str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Write a table; floats get 17 significant digits, other cells str()."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) if isinstance(v, (float, np.floating)) else str(v) for v in row) + "\n")


def read_csv(path: Path | str) -> tuple[list[str], np.ndarray]:
    """Read a table written by :func:`write_csv` as (header, 2-D float array)."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    body = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if body.size and body.shape[1] != len(header):
        raise ValueError(f"{path}: {body.shape[1]} columns but {len(header)} header fields")
    return header, body
