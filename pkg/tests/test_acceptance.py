"""Reference-scale runs.

These take minutes and are deselected by default; run them with `pytest -m slow`.
"""
import math

import pytest

from emhd_lab.services import load_config, run_energy_audit, run_sync_experiment

pytestmark = pytest.mark.slow


def test_energy_identity_reference_run():
    """Unforced EMHD1 at N=128 keeps E(T) - E(0) + mu int D within 1e-6"""
    # the whistler limit of unit-energy data at N=128 sits far below 1e-4
    config = load_config(
        "grid.n=128\nphysics.mu=0.1\nexperiment.energy=1\nintegrator.mode=adaptive\n"
        "integrator.dt_max=1e-4\nintegrator.t_end=1\ndiag.cadence=1\nseed=1\n"
    )
    ledger = run_energy_audit(config)
    assert ledger.rows[0].energy == pytest.approx(1.0, rel=1e-12)
    assert ledger.rows[-1].t == pytest.approx(1.0, abs=1e-12)
    assert abs(ledger.rows[-1].residual) <= 1e-6
    assert ledger.max_abs_residual <= 1e-6


def test_low_mode_synchronization_reference_run():
    """Two solutions sharing their low modes converge by two orders of magnitude"""
    config = load_config(
        "grid.n=128\nphysics.mu=0.1\nexperiment.name=sync\nexperiment.energy=1e-10\n"
        "diag.r=3\ndiag.sobolev_s=-0.5\ndiag.c_r=0.01\nintegrator.t_end=5\n"
        "diag.cadence=50\nseed=3\n"
    )
    report = run_sync_experiment(config)
    assert not report.aborted
    assert report.samples[-1].t == pytest.approx(5.0)
    # an infinite Q(B) merges the runs and makes the decay vacuous
    assert report.saturated_fraction <= 0.1
    finite = [sample for sample in report.samples if math.isfinite(sample.q_index)]
    assert len(finite) >= 0.9 * len(report.samples)
    assert math.isfinite(report.decay_ratio)
    assert report.decay_ratio >= 100.0
    assert report.monotone_after_transient
    for sample in report.samples:
        assert sample.low_mode_norm <= 1e-13 * sample.hs_norm
