"""
Snapshots and CSV series.

Snapshot layout (little-endian):

    offset  0  magic b"EMHDSNAP"
    offset  8  uint32 version (= 1)
    offset 12  uint32 N
    offset 16  float64 L, t, mu
    offset 40  a samples, N*N float64, row-major
               b samples, N*N float64, row-major
"""
import csv
import logging
import math
import struct
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple, Union

import numpy as np

from emhd_lab.exceptions import (
    BadMagicError, NonFiniteSnapshotError, SeriesWriteError, SnapshotError,
    TruncatedSnapshotError, UnsupportedVersionError,
)
from emhd_lab.models import ScalarField, StateAB, TorusGrid

logger = logging.getLogger(__name__)

MAGIC = b"EMHDSNAP"
VERSION = 1
_COUNTS = struct.Struct("<II")
_SCALARS = struct.Struct("<ddd")
HEADER_SIZE = len(MAGIC) + _COUNTS.size + _SCALARS.size
_SAMPLE = np.dtype("<f8")

SERIES_HEADERS: Dict[str, Tuple[str, ...]] = {
    "simulate": ("t", "E", "D", "work", "residual"),
    "audit": ("t", "E", "D", "work", "residual"),
    "sync": ("t", "hs_norm", "Q_index", "lambda_Q"),
    "radial": ("check", "residual", "scale", "bound", "passed"),
    "wavenumber": ("kind", "Q_index", "lambda_Q", "r", "c_r", "mu"),
    "monitor": ("t", "f1", "f2", "lr_norm_b", "int_f1", "int_f2", "int_lps", "Q_a", "Q_b"),
    "scale-check": ("shell", "original", "rescaled", "relative_error"),
}


def save_snapshot(state: StateAB) -> bytes:
    """Encode a state bit-exactly."""
    grid = state.grid
    header = MAGIC + _COUNTS.pack(VERSION, grid.n) + _SCALARS.pack(grid.length, state.t, state.mu)
    payload = [np.ascontiguousarray(f.physical, dtype=_SAMPLE).tobytes() for f in (state.a, state.b)]
    return header + b"".join(payload)


def load_snapshot(data: bytes) -> StateAB:
    """Decode a snapshot.

    Args:
        data: Bytes produced by save_snapshot

    Returns:
        The stored state

    Raises:
        SnapshotError: Or one of its subclasses, with the offending byte offset
    """
    data = bytes(data)
    head = data[:len(MAGIC)]
    if head != MAGIC[:len(head)] or not head:
        raise BadMagicError(f"expected magic {MAGIC!r}, found {head!r}", offset=0)
    if len(data) < len(MAGIC) + _COUNTS.size:
        raise TruncatedSnapshotError("snapshot ends inside the header", offset=len(data))
    version, n = _COUNTS.unpack_from(data, len(MAGIC))
    if version != VERSION:
        raise UnsupportedVersionError(
            f"snapshot version {version} is not supported (reader version {VERSION})", offset=8)
    if len(data) < HEADER_SIZE:
        raise TruncatedSnapshotError("snapshot ends inside the header", offset=len(data))
    if n < 16 or n % 2 != 0:
        raise SnapshotError(f"invalid grid size N={n}", offset=12)
    length, t, mu = _SCALARS.unpack_from(data, 16)
    if not (math.isfinite(length) and length > 0):
        raise SnapshotError(f"invalid period L={length}", offset=16)
    if not math.isfinite(t):
        raise NonFiniteSnapshotError("non-finite time tag", offset=24)
    if not (math.isfinite(mu) and mu > 0):
        raise SnapshotError(f"invalid resistivity mu={mu}", offset=32)

    count = n * n
    expected = HEADER_SIZE + 2 * count * _SAMPLE.itemsize
    if len(data) < expected:
        raise TruncatedSnapshotError(f"payload needs {expected} bytes, got {len(data)}", offset=len(data))
    if len(data) > expected:
        raise SnapshotError(f"{len(data) - expected} trailing byte(s) after the payload", offset=expected)
    samples = np.frombuffer(data, dtype=_SAMPLE, count=2 * count, offset=HEADER_SIZE)
    bad = np.flatnonzero(~np.isfinite(samples))
    if bad.size:
        raise NonFiniteSnapshotError("non-finite sample in payload",
                                     offset=HEADER_SIZE + _SAMPLE.itemsize * int(bad[0]))

    grid = TorusGrid(n, length)
    a = ScalarField.from_physical(grid, samples[:count].reshape(n, n))
    b = ScalarField.from_physical(grid, samples[count:].reshape(n, n))
    return StateAB(a, b, t=t, mu=mu)


def write_snapshot(path: Union[str, Path], state: StateAB) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(save_snapshot(state))
    logger.info("snapshot written to %s (t=%.6g)", path, state.t)
    return path


def read_snapshot(path: Union[str, Path]) -> StateAB:
    try:
        data = Path(path).read_bytes()
    except OSError as error:
        raise SnapshotError(f"cannot read {path}: {error}", offset=0) from error
    return load_snapshot(data)


def format_value(value: Any) -> str:
    """CSV text of one value: 17 significant digits for floats, inf for the sentinel."""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    return str(value)


class CsvSeriesWriter:
    """Append-only CSV series with a fixed header; flushes after every row.

    Args:
        path: Target file, created together with its parent directory
        header: Column names written as the first row
    """

    def __init__(self, path: Union[str, Path], header: Sequence[str]):
        self.path = Path(path)
        self.header = tuple(header)
        self.rows_written = 0
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._handle = self.path.open("w", encoding="utf-8", newline="")
        except OSError as error:
            raise SeriesWriteError(str(self.path), str(error)) from error
        self._writer = csv.writer(self._handle, lineterminator="\n")
        self._write(self.header)

    @classmethod
    def for_experiment(cls, out_dir: Union[str, Path], name: str) -> "CsvSeriesWriter":
        return cls(Path(out_dir) / f"{name}.csv", SERIES_HEADERS[name])

    def _write(self, cells: Sequence[str]) -> None:
        try:
            self._writer.writerow(cells)
            self._handle.flush()
        except (OSError, ValueError) as error:
            raise SeriesWriteError(str(self.path), str(error)) from error

    def append(self, row: Sequence[Any]) -> None:
        """Write one row; its length must match the header."""
        if len(row) != len(self.header):
            raise SeriesWriteError(str(self.path),
                                   f"row has {len(row)} values, header has {len(self.header)}")
        self._write([format_value(v) for v in row])
        self.rows_written += 1

    def close(self) -> None:
        if not self._handle.closed:
            self._handle.close()

    def __enter__(self) -> "CsvSeriesWriter":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def read_series(path: Union[str, Path]) -> Tuple[List[str], List[List[str]]]:
    """Read a series back as (header, rows of text cells)."""
    with Path(path).open(encoding="utf-8", newline="") as handle:
        rows = list(csv.reader(handle))
    return rows[0], rows[1:]
