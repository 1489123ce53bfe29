"""Shared fixtures for the EMHD Lab tests."""
import numpy as np
import pytest

from emhd_lab.models import ScalarField, StateAB, TorusGrid
from emhd_lab.services import LittlewoodPaleyService, load_config


@pytest.fixture
def grid32():
    return TorusGrid(32)


@pytest.fixture
def grid64():
    return TorusGrid(64)


@pytest.fixture
def bank32(grid32):
    return LittlewoodPaleyService.build_filter_bank(grid32)


@pytest.fixture
def bank64(grid64):
    return LittlewoodPaleyService.build_filter_bank(grid64)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def make_config():
    """Build a RunConfig from dotted keys on top of a small grid."""
    def build(**keys):
        lines = ["grid.n=32"]
        for key, value in keys.items():
            lines.append(f"{key.replace('__', '.')}={value}")
        return load_config("\n".join(lines) + "\n")
    return build


def mode_field(grid: TorusGrid, k1: int, k2: int, amplitude: float = 1.0,
               kind: str = "cos") -> ScalarField:
    """amplitude * cos or sin of 2 pi (k1 x + k2 y) / L sampled on the grid."""
    x, y = grid.coordinates
    phase = 2.0 * np.pi * (k1 * x + k2 * y) / grid.length
    wave = np.cos(phase) if kind == "cos" else np.sin(phase)
    return ScalarField.from_physical(grid, amplitude * wave)


def state_of(a: ScalarField, b: ScalarField, mu: float = 0.1, t: float = 0.0) -> StateAB:
    return StateAB(a, b, t=t, mu=mu)
