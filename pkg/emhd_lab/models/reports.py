"""
Diagnostic records produced by the services.

Reports are plain dataclasses so they can be printed, compared in tests and
turned into CSV rows without extra machinery.
"""
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from emhd_lab.models.fields import StateAB

INFINITE_INDEX = math.inf

ShellIndex = Union[int, float]  # an int, or math.inf for the empty-set sentinel


def format_index(q: ShellIndex) -> str:
    return "inf" if q == INFINITE_INDEX else str(int(q))


@dataclass(frozen=True)
class ShellSpectrum:
    """Per-shell norms of one field for q = -1 .. q_max."""
    shells: Tuple[int, ...]
    l2: np.ndarray
    lr: np.ndarray
    linf: np.ndarray
    r: float
    source: str = ""

    def populated(self, tolerance: float = 1e-12) -> List[int]:
        """Shells whose L2 norm exceeds tolerance times the largest shell norm."""
        top = float(np.max(self.l2)) if len(self.l2) else 0.0
        if top == 0.0:
            return []
        return [q for q, v in zip(self.shells, self.l2) if v > tolerance * top]


@dataclass(frozen=True)
class ShellTest:
    """Evaluation of the defining conditions at one candidate index q."""
    q: int
    shell_quantity: float           # lambda_q^(n/r) ||u_q||_{L^r}
    shell_ok: bool
    tail_ok: bool                   # every p > q passes its shell clause
    lowpass_linf: Optional[float]   # ||B_{<=q}||_inf, B reports only
    linf_ok: bool
    passes: bool


@dataclass(frozen=True)
class WavenumberReport:
    """Dissipation wavenumber of one kind (B, a or b) at one instant."""
    kind: str
    q_index: ShellIndex
    lambda_q: float
    r: float
    c_r: float
    mu: float
    n: int
    records: Tuple[ShellTest, ...]

    @property
    def is_finite(self) -> bool:
        return self.q_index != INFINITE_INDEX

    @property
    def threshold(self) -> float:
        return self.c_r * self.mu

    def record(self, q: int) -> ShellTest:
        for rec in self.records:
            if rec.q == q:
                return rec
        raise KeyError(q)

    def check_minimality(self) -> bool:
        """True when the records fail below Q and pass at Q (or never pass for the sentinel)."""
        if not self.is_finite:
            return not any(rec.passes for rec in self.records)
        q = int(self.q_index)
        below = [rec for rec in self.records if rec.q < q]
        return self.record(q).passes and not any(rec.passes for rec in below)


@dataclass(frozen=True)
class MonitorSample:
    t: float
    f1: float
    f2: float
    lr_norm_b: float
    int_f1: float
    int_f2: float
    int_lps: float
    q_a: ShellIndex
    q_b: ShellIndex

    def as_row(self) -> List[Any]:
        return [self.t, self.f1, self.f2, self.lr_norm_b, self.int_f1,
                self.int_f2, self.int_lps, self.q_a, self.q_b]


@dataclass
class MonitorSeries:
    """Low-mode regularity monitors along a trajectory."""
    r: float
    s: float
    samples: List[MonitorSample] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([smp.t for smp in self.samples])

    @property
    def lps_integral(self) -> float:
        return self.samples[-1].int_lps if self.samples else 0.0


@dataclass(frozen=True)
class LedgerRow:
    t: float
    energy: float
    dissipation: float
    work: float
    residual: float

    def as_row(self) -> List[float]:
        return [self.t, self.energy, self.dissipation, self.work, self.residual]


@dataclass
class EnergyLedger:
    """Energy balance E(t) - E(0) + mu * int D - int work along a run."""
    mu: float
    rows: List[LedgerRow] = field(default_factory=list)
    sup_a_h1: float = 0.0
    sup_b_l2: float = 0.0
    int_a_h2_sq: float = 0.0
    int_b_h1_sq: float = 0.0

    @property
    def max_abs_residual(self) -> float:
        return max((abs(row.residual) for row in self.rows), default=0.0)


@dataclass(frozen=True)
class SyncSample:
    t: float
    hs_norm: float
    q_index: ShellIndex
    lambda_q: float
    low_mode_norm: float    # ||h_{<=Q}||_{H^s} right after the overwrite
    drift: float            # ||h_{<=Q}||_{H^s} accumulated over the preceding step

    def as_row(self) -> List[Any]:
        return [self.t, self.hs_norm, self.q_index, self.lambda_q]


@dataclass
class SyncReport:
    """Outcome of the low-mode synchronization experiment."""
    s: float
    r: float
    c_r: float
    initial_hs_norm: float = 0.0
    samples: List[SyncSample] = field(default_factory=list)
    decay_ratio: float = 1.0
    monotone_after_transient: bool = True
    aborted: Optional[str] = None
    # samples where Q(B) was infinite and every mode was overwritten
    saturated_samples: int = 0

    @property
    def saturated_fraction(self) -> float:
        return self.saturated_samples / len(self.samples) if self.samples else 0.0

    @property
    def times(self) -> np.ndarray:
        return np.array([smp.t for smp in self.samples])

    @property
    def hs_norms(self) -> np.ndarray:
        return np.array([smp.hs_norm for smp in self.samples])


@dataclass(frozen=True)
class RadialCheck:
    name: str
    residual: float
    scale: float
    bound: float
    passed: bool

    def as_row(self) -> List[Any]:
        return [self.name, self.residual, self.scale, self.bound, int(self.passed)]


@dataclass
class RadialReport:
    """Cancellation residuals for radial data."""
    periodization_bound: float
    j2_history: List[float] = field(default_factory=list)
    heat_mode_errors: Dict[Tuple[int, int], float] = field(default_factory=dict)
    hall_residual: float = 0.0
    checks: List[RadialCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)


@dataclass(frozen=True)
class ScalingRow:
    shell: int
    original: float
    rescaled: float
    relative_error: float

    def as_row(self) -> List[Any]:
        return [self.shell, self.original, self.rescaled, self.relative_error]


@dataclass
class ScalingReport:
    """Shell-by-shell comparison of a state with its dyadic rescaling."""
    m: int
    r: float
    tolerance: float
    shell_rows: List[ScalingRow] = field(default_factory=list)
    linf_rows: List[ScalingRow] = field(default_factory=list)

    @property
    def max_relative_error(self) -> float:
        rows = self.shell_rows + self.linf_rows
        return max((row.relative_error for row in rows), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_relative_error <= self.tolerance


@dataclass(frozen=True)
class CommutatorEnsemble:
    """Empirical constants of the commutator estimates over random draws."""
    n: int
    q: int
    p: int
    transport: np.ndarray
    curl: np.ndarray
    curl_integral: np.ndarray

    def summary(self) -> Dict[str, float]:
        return {
            "transport_max": float(np.max(self.transport)),
            "curl_max": float(np.max(self.curl)),
            "curl_integral_max": float(np.max(self.curl_integral)),
        }


@dataclass
class IntegrationResult:
    """Final state of a run and whatever the hooks returned along the way."""
    state: StateAB
    outputs: Dict[str, List[Any]] = field(default_factory=dict)
    steps: int = 0
