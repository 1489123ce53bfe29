"""Services module for EMHD Lab."""
from .spectral import SpectralService
from .littlewood_paley import LittlewoodPaleyService, chi, phi, smooth_step
from .emhd import EMHDModel
from .integrator import TimeIntegrator
from .wavenumbers import (
    WavenumberService, LPSAccumulator, MonitorRecorder, TrapezoidIntegral,
    check_lps_pair, critical_lps_exponent,
)
from .configuration import load_config, echo_config, DEFAULT_CONFIG_TEXT
from .persistence import (
    save_snapshot, load_snapshot, write_snapshot, read_snapshot,
    CsvSeriesWriter, SERIES_HEADERS, read_series,
)
from .run_log import RunLogService
from .experiments import (
    random_lowmode_state, gaussian_bump, periodization_bound,
    run_simulation, run_energy_audit, run_sync_experiment, run_radial_suite,
    run_scaling_check, run_monitor, wavenumber_reports,
    EnergyLedgerRecorder, RunningIntegral, LowModeSynchronizer,
)

__all__ = [
    'SpectralService',
    'LittlewoodPaleyService',
    'chi',
    'phi',
    'smooth_step',
    'EMHDModel',
    'TimeIntegrator',
    'WavenumberService',
    'LPSAccumulator',
    'MonitorRecorder',
    'TrapezoidIntegral',
    'check_lps_pair',
    'critical_lps_exponent',
    'load_config',
    'echo_config',
    'DEFAULT_CONFIG_TEXT',
    'save_snapshot',
    'load_snapshot',
    'write_snapshot',
    'read_snapshot',
    'CsvSeriesWriter',
    'SERIES_HEADERS',
    'read_series',
    'RunLogService',
    'random_lowmode_state',
    'gaussian_bump',
    'periodization_bound',
    'run_simulation',
    'run_energy_audit',
    'run_sync_experiment',
    'run_radial_suite',
    'run_scaling_check',
    'run_monitor',
    'wavenumber_reports',
    'EnergyLedgerRecorder',
    'RunningIntegral',
    'LowModeSynchronizer',
]
