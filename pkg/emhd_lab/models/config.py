"""
Run configuration.

Sections mirror the dotted keys of the configuration file: `grid.n` lives in
RunConfig.grid.n and so on. Each section validates its own fields; checks
that span sections live in services/configuration.py.
"""
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from emhd_lab.models.fields import ForcingSpec, StepMode, StepPolicy, TorusGrid, Variant

ExperimentName = Literal["simulate", "audit", "sync", "radial", "wavenumber", "monitor", "scale-check"]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GridConfig(_Section):
    n: int = Field(description="Points per dimension (even, >= 16)")
    l: float = Field(default=1.0, gt=0.0, description="Period of the box")

    @field_validator("n")
    @classmethod
    def validate_points(cls, v: int) -> int:
        if v < 16 or v % 2 != 0:
            raise ValueError(f"grid.n must be even and >= 16, got {v}")
        return v


class PhysicsConfig(_Section):
    variant: Variant = Variant.EMHD1
    mu: float = Field(default=0.1, gt=0.0, description="Resistivity")
    forcing: str = Field(default="", description="target,k1,k2,amplitude,phase[,omega];...")

    @field_validator("forcing")
    @classmethod
    def validate_forcing(cls, v: str) -> str:
        ForcingSpec.parse(v)
        return v.strip()


class IntegratorConfig(_Section):
    mode: Optional[StepMode] = Field(default=None, description="Unset means fixed steps, adaptive for sync runs")
    dt: float = Field(default=1e-3, gt=0.0)
    cfl: float = Field(default=0.5, gt=0.0, le=1.0)
    dt_max: float = Field(default=1e-2, gt=0.0)
    dt_min: float = Field(default=1e-10, gt=0.0)
    t_end: float = Field(default=1.0, ge=0.0)

    @model_validator(mode="after")
    def validate_step_bounds(self) -> "IntegratorConfig":
        if not self.dt_min < self.dt_max:
            raise ValueError(f"integrator.dt_min ({self.dt_min}) must be below integrator.dt_max ({self.dt_max})")
        return self


class DiagConfig(_Section):
    r: float = Field(default=3.0, ge=1.0, description="Lebesgue exponent of the wavenumbers and LPS monitor")
    c_r: float = Field(default=0.01, gt=0.0)
    s: Optional[float] = Field(default=None, gt=0.0, description="LPS time exponent, critical when unset")
    sobolev_s: float = Field(default=-0.5, description="H^s exponent of the synchronization error")
    cadence: int = Field(default=10, ge=1, description="Steps between diagnostic samples")
    allow_out_of_range: bool = False


class ExperimentConfig(_Section):
    name: ExperimentName = "simulate"
    energy: float = Field(default=1.0, ge=0.0, description="E(0) of random initial data")
    shells: int = Field(default=2, ge=-1, description="Random data fills shells q <= shells")
    sigma_a: float = Field(default=0.08, gt=0.0)
    sigma_b: float = Field(default=0.07, gt=0.0)
    m: int = Field(default=1, ge=0, description="Dyadic exponent of the scale check")


class OutputConfig(_Section):
    dir: str = "out"
    snapshots: bool = False


class RunConfig(_Section):
    """Validated configuration of one run."""
    grid: GridConfig
    physics: PhysicsConfig = PhysicsConfig()
    integrator: IntegratorConfig = IntegratorConfig()
    diag: DiagConfig = DiagConfig()
    experiment: ExperimentConfig = ExperimentConfig()
    output: OutputConfig = OutputConfig()
    seed: int = Field(default=0, ge=0, le=2 ** 64 - 1)

    def torus_grid(self) -> TorusGrid:
        return TorusGrid(self.grid.n, self.grid.l)

    def forcing_spec(self) -> ForcingSpec:
        return ForcingSpec.parse(self.physics.forcing)

    def step_policy(self, default_mode: StepMode = StepMode.FIXED) -> StepPolicy:
        """Step control of the run; `default_mode` applies when integrator.mode is unset."""
        section = self.integrator
        return StepPolicy(mode=section.mode or default_mode, dt=section.dt, cfl=section.cfl,
                          dt_max=section.dt_max, dt_min=section.dt_min)
