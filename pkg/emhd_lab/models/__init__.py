"""
Core models for EMHD Lab.

Grid, field and state types plus the diagnostic reports built from them.
"""
from .fields import (
    TorusGrid, ScalarField, StateAB, VectorField3, Variant,
    ForcingMode, ForcingSpec, StepMode, StepPolicy, DyadicFilterBank,
    conj_reflect, hermitian_part,
)
from .reports import (
    INFINITE_INDEX, ShellSpectrum, ShellTest, WavenumberReport,
    MonitorSample, MonitorSeries, LedgerRow, EnergyLedger,
    SyncSample, SyncReport, RadialCheck, RadialReport,
    ScalingRow, ScalingReport, CommutatorEnsemble, IntegrationResult,
    format_index,
)

__all__ = [
    'TorusGrid',
    'ScalarField',
    'StateAB',
    'VectorField3',
    'Variant',
    'ForcingMode',
    'ForcingSpec',
    'StepMode',
    'StepPolicy',
    'DyadicFilterBank',
    'conj_reflect',
    'hermitian_part',
    'INFINITE_INDEX',
    'ShellSpectrum',
    'ShellTest',
    'WavenumberReport',
    'MonitorSample',
    'MonitorSeries',
    'LedgerRow',
    'EnergyLedger',
    'SyncSample',
    'SyncReport',
    'RadialCheck',
    'RadialReport',
    'ScalingRow',
    'ScalingReport',
    'CommutatorEnsemble',
    'IntegrationResult',
    'format_index',
]
