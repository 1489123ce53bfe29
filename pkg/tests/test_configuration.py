"""Tests for loading, validating and echoing configuration files."""
import logging
import math

import pytest

from emhd_lab.exceptions import ConfigError
from emhd_lab.models import StepMode, Variant
from emhd_lab.services import echo_config, load_config
from emhd_lab.services.configuration import known_keys, parse_pairs


def test_defaults():
    """Only grid.n is required; everything else has a default"""
    config = load_config("grid.n=64\n")
    assert config.grid.n == 64
    assert config.grid.l == 1.0
    assert config.physics.variant is Variant.EMHD1
    assert config.physics.mu == 0.1
    assert config.integrator.mode is None
    assert config.step_policy().mode is StepMode.FIXED
    assert config.diag.r == 3.0
    assert config.diag.c_r == 0.01
    assert config.diag.s is None
    assert config.experiment.name == "simulate"
    assert config.seed == 0


def test_step_mode_default_applies_only_when_unset():
    unset = load_config("grid.n=32\nexperiment.name=sync\n")
    assert unset.step_policy(StepMode.ADAPTIVE).mode is StepMode.ADAPTIVE
    fixed = load_config("grid.n=32\nexperiment.name=sync\nintegrator.mode=fixed\n")
    assert fixed.step_policy(StepMode.ADAPTIVE).mode is StepMode.FIXED
    assert "integrator.mode=" not in echo_config(unset)
    assert load_config(echo_config(fixed)) == fixed


def test_comments_and_blank_lines():
    text = """
    # resolution
    grid.n=32   # inline comment

    physics.variant=EMHD2
    integrator.mode=adaptive
    diag.r=inf
    """
    config = load_config(text)
    assert config.grid.n == 32
    assert config.physics.variant is Variant.EMHD2
    assert config.integrator.mode is StepMode.ADAPTIVE
    assert math.isinf(config.diag.r)


def test_missing_grid_size():
    with pytest.raises(ConfigError) as info:
        load_config("physics.mu=0.2\n")
    assert any("grid" in v for v in info.value.violations)


def test_all_violations_reported_together():
    """Every bad value shows up in one error"""
    with pytest.raises(ConfigError) as info:
        load_config("grid.n=15\nphysics.mu=-1\nintegrator.cfl=2\n")
    violations = info.value.violations
    assert len(violations) == 3
    assert any("grid.n" in v for v in violations)
    assert any("physics.mu" in v for v in violations)
    assert any("integrator.cfl" in v for v in violations)


class TestMalformedFiles:
    """Structural problems are caught before validation."""

    def test_unknown_key(self):
        with pytest.raises(ConfigError) as info:
            load_config("grid.n=32\ngrid.m=3\n")
        assert "grid.m" in info.value.violations[0]

    def test_duplicate_key(self):
        with pytest.raises(ConfigError) as info:
            load_config("grid.n=32\ngrid.n=64\n")
        assert "duplicate" in info.value.violations[0]

    def test_line_without_equals(self):
        with pytest.raises(ConfigError) as info:
            parse_pairs("grid.n 32\n")
        assert "line 1" in info.value.violations[0]

    def test_step_bounds(self):
        with pytest.raises(ConfigError):
            load_config("grid.n=32\nintegrator.dt_min=0.1\nintegrator.dt_max=0.01\n")

    def test_bad_forcing_text(self):
        with pytest.raises(ConfigError):
            load_config("grid.n=32\nphysics.forcing=b,1,0\n")


def test_echo_roundtrip():
    """Loading the echo of a config gives the same config"""
    config = load_config(
        "grid.n=48\nphysics.mu=0.1\nphysics.forcing=b,1,0,0.5,0;a,0,2,0.1,0.4,10\n"
        "diag.s=8\ndiag.r=inf\nexperiment.name=monitor\ndiag.allow_out_of_range=true\nseed=42\n"
    )
    echoed = echo_config(config)
    assert load_config(echoed) == config
    assert echoed.splitlines() == sorted(echoed.splitlines())
    assert "physics.mu=0.10000000000000001" in echoed
    assert "diag.r=inf" in echoed


def test_echo_omits_unset_exponent():
    echoed = echo_config(load_config("grid.n=32\n"))
    assert "diag.s=" not in echoed
    assert "grid.n=32" in echoed


def test_known_keys():
    keys = known_keys()
    assert "grid.n" in keys
    assert "seed" in keys
    assert "diag.allow_out_of_range" in keys


class TestCrossFieldChecks:
    """Checks that span several sections."""

    def test_forcing_above_cutoff(self):
        with pytest.raises(ConfigError) as info:
            load_config("grid.n=32\nphysics.forcing=b,11,0,1,0\n")
        assert "cutoff" in info.value.violations[0]

    def test_forcing_at_cutoff(self):
        config = load_config("grid.n=32\nphysics.forcing=b,10,-10,1,0\n")
        assert len(config.forcing_spec().modes) == 1

    def test_sync_exponent_out_of_range(self):
        with pytest.raises(ConfigError) as info:
            load_config("grid.n=32\nexperiment.name=sync\ndiag.r=5\n")
        assert any("diag.r=5" in v for v in info.value.violations)

    def test_out_of_range_allowed_with_warning(self, caplog):
        with caplog.at_level(logging.WARNING):
            config = load_config("grid.n=32\nexperiment.name=wavenumber\ndiag.r=5\n"
                                 "diag.allow_out_of_range=true\n")
        assert config.diag.r == 5.0
        assert "allow_out_of_range" in caplog.text

    def test_sync_sobolev_exponent(self):
        with pytest.raises(ConfigError) as info:
            load_config("grid.n=32\nexperiment.name=sync\ndiag.sobolev_s=0\n")
        assert any("diag.sobolev_s" in v for v in info.value.violations)

    def test_monitor_needs_finite_exponent(self):
        with pytest.raises(ConfigError):
            load_config("grid.n=32\nexperiment.name=monitor\ndiag.r=inf\n")

    def test_lps_exponent_pair(self):
        with pytest.raises(ConfigError) as info:
            load_config("grid.n=32\ndiag.r=3\ndiag.s=3\n")
        assert "diag.s" in info.value.violations[0]
        assert load_config("grid.n=32\ndiag.r=3\ndiag.s=6\n").diag.s == 6.0

    def test_wide_radial_bump(self):
        with pytest.raises(ConfigError) as info:
            load_config("grid.n=32\nexperiment.name=radial\nexperiment.sigma_a=0.3\n")
        assert "experiment.sigma_a" in info.value.violations[0]


def test_overrides_apply_before_validation():
    config = load_config("grid.n=32\nseed=1\n", {"seed": 7, "output.dir": None})
    assert config.seed == 7
    assert config.output.dir == "out"

    with pytest.raises(ConfigError):
        load_config("grid.n=32\n", {"grid.points": 64})
    with pytest.raises(ConfigError):
        load_config("grid.n=32\n", {"grid.n": 17})
