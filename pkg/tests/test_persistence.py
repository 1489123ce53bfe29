"""Tests for snapshots and CSV series."""
import math
import struct

import numpy as np
import pytest

from emhd_lab.exceptions import (
    BadMagicError, NonFiniteSnapshotError, SeriesWriteError, SnapshotError,
    TruncatedSnapshotError, UnsupportedVersionError,
)
from emhd_lab.services import (
    CsvSeriesWriter, SERIES_HEADERS, load_snapshot, random_lowmode_state, read_series,
    read_snapshot, run_simulation, run_sync_experiment, save_snapshot, write_snapshot,
)
from emhd_lab.services.persistence import HEADER_SIZE, format_value


@pytest.fixture
def state(grid32):
    current = random_lowmode_state(grid32, seed=11, energy=0.5, shells=2, mu=0.03)
    return current.with_fields(current.a, current.b, t=0.125)


def test_snapshot_roundtrip_is_bit_exact(state):
    """Decoding an encoded state gives back identical samples and scalars"""
    decoded = load_snapshot(save_snapshot(state))
    assert decoded.grid.n == 32
    assert decoded.grid.length == 1.0
    assert decoded.t == 0.125
    assert decoded.mu == 0.03
    assert np.array_equal(decoded.a.physical, state.a.physical)
    assert np.array_equal(decoded.b.physical, state.b.physical)


def test_snapshot_layout(state):
    """Header fields sit at their documented offsets"""
    data = save_snapshot(state)
    assert data[:8] == b"EMHDSNAP"
    assert struct.unpack_from("<II", data, 8) == (1, 32)
    assert struct.unpack_from("<ddd", data, 16) == (1.0, 0.125, 0.03)
    assert len(data) == HEADER_SIZE + 2 * 32 * 32 * 8
    assert HEADER_SIZE == 40


class TestCorruptSnapshots:
    """Each corruption is rejected with the offset where it was found."""

    def test_bad_magic(self, state):
        data = bytearray(save_snapshot(state))
        data[0:8] = b"NOTASNAP"
        with pytest.raises(BadMagicError) as info:
            load_snapshot(bytes(data))
        assert info.value.offset == 0

    def test_empty_input(self):
        with pytest.raises(BadMagicError):
            load_snapshot(b"")

    def test_unsupported_version(self, state):
        data = bytearray(save_snapshot(state))
        struct.pack_into("<I", data, 8, 7)
        with pytest.raises(UnsupportedVersionError) as info:
            load_snapshot(bytes(data))
        assert info.value.offset == 8

    def test_truncated_header(self, state):
        with pytest.raises(TruncatedSnapshotError):
            load_snapshot(save_snapshot(state)[:20])

    def test_truncated_payload(self, state):
        data = save_snapshot(state)
        with pytest.raises(TruncatedSnapshotError) as info:
            load_snapshot(data[:-8])
        assert info.value.offset == len(data) - 8

    def test_trailing_bytes(self, state):
        data = save_snapshot(state)
        with pytest.raises(SnapshotError) as info:
            load_snapshot(data + b"\x00")
        assert info.value.offset == len(data)

    def test_non_finite_sample_reports_its_offset(self, state):
        data = bytearray(save_snapshot(state))
        index = 32 * 32 + 5
        struct.pack_into("<d", data, HEADER_SIZE + 8 * index, math.nan)
        with pytest.raises(NonFiniteSnapshotError) as info:
            load_snapshot(bytes(data))
        assert info.value.offset == 40 + 8 * index

    def test_invalid_resistivity(self, state):
        data = bytearray(save_snapshot(state))
        struct.pack_into("<d", data, 32, -1.0)
        with pytest.raises(SnapshotError) as info:
            load_snapshot(bytes(data))
        assert info.value.offset == 32

    def test_odd_grid_size(self, state):
        data = bytearray(save_snapshot(state))
        struct.pack_into("<I", data, 12, 31)
        with pytest.raises(SnapshotError) as info:
            load_snapshot(bytes(data))
        assert info.value.offset == 12


def test_snapshot_files(tmp_path, state):
    """Snapshots written to disk read back unchanged; missing files raise SnapshotError"""
    path = write_snapshot(tmp_path / "nested" / "state.snap", state)
    assert path.exists()
    restored = read_snapshot(path)
    assert np.array_equal(restored.b.physical, state.b.physical)

    with pytest.raises(SnapshotError):
        read_snapshot(tmp_path / "missing.snap")


@pytest.mark.parametrize("value,text", [
    (math.inf, "inf"),
    (-math.inf, "-inf"),
    (True, "1"),
    (np.int64(3), "3"),
    (0.1, "0.10000000000000001"),
    (np.float64(2.5), "2.5"),
    ("j2_radial", "j2_radial"),
])
def test_format_value(value, text):
    assert format_value(value) == text


def test_series_roundtrip(tmp_path):
    """Rows written through the writer come back as text cells"""
    with CsvSeriesWriter.for_experiment(tmp_path, "sync") as writer:
        writer.append([0.0, 1.5, -1, 0.5])
        writer.append([0.1, 0.75, math.inf, math.inf])
        assert writer.rows_written == 2

    header, rows = read_series(tmp_path / "sync.csv")
    assert tuple(header) == SERIES_HEADERS["sync"]
    assert rows == [["0", "1.5", "-1", "0.5"], ["0.10000000000000001", "0.75", "inf", "inf"]]


def test_series_row_length_mismatch(tmp_path):
    writer = CsvSeriesWriter(tmp_path / "series.csv", ("t", "E"))
    with pytest.raises(SeriesWriteError):
        writer.append([0.0])
    writer.close()


def test_series_unwritable_path(tmp_path):
    """A directory in place of the target file is a write failure"""
    (tmp_path / "taken.csv").mkdir()
    with pytest.raises(SeriesWriteError):
        CsvSeriesWriter(tmp_path / "taken.csv", ("t",))


def test_every_experiment_has_a_header():
    assert set(SERIES_HEADERS) == {
        "simulate", "audit", "sync", "radial", "wavenumber", "monitor", "scale-check",
    }


@pytest.mark.parametrize("name", ["simulate", "sync"])
def test_same_seed_gives_identical_series(make_config, tmp_path, name):
    """Two runs from one seed write byte-identical CSV files"""
    config = make_config(experiment__name=name, experiment__energy=1e-6, integrator__mode="fixed",
                         integrator__dt=1e-3, integrator__t_end=0.01, diag__cadence=2, seed=6)
    run = run_simulation if name == "simulate" else run_sync_experiment
    for out in ("first", "second"):
        with CsvSeriesWriter.for_experiment(tmp_path / out, name) as writer:
            run(config, sink=writer.append)
    first = (tmp_path / "first" / f"{name}.csv").read_bytes()
    assert len(first.splitlines()) == 7
    assert first == (tmp_path / "second" / f"{name}.csv").read_bytes()
