"""
Dissipation wavenumbers and low-mode regularity monitors.

A report scans the shells q = -1 .. q_max of its filter bank and returns
the smallest q meeting the defining conditions, or the +inf sentinel when
none does.
"""
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from emhd_lab.exceptions import RangeError
from emhd_lab.models import (
    INFINITE_INDEX, DyadicFilterBank, MonitorSample, MonitorSeries, ScalarField,
    ShellTest, StateAB, WavenumberReport,
)
from emhd_lab.services.emhd import EMHDModel
from emhd_lab.services.littlewood_paley import LittlewoodPaleyService
from emhd_lab.services.spectral import SpectralService

logger = logging.getLogger(__name__)

FIELD_DIMENSION = 2


def critical_lps_exponent(r: float) -> float:
    """Time exponent s with 2/s + 2/r = 1."""
    if math.isinf(r):
        return 2.0
    return 2.0 * r / (r - 2.0)


def check_lps_pair(r: float, s: float) -> None:
    """Reject exponent pairs outside r in (2, inf] with 2/s + 2/r <= 1."""
    if not r > 2:
        raise RangeError(f"LPS criterion needs r > 2, got r={r}")
    if not s > 0:
        raise RangeError(f"LPS time exponent must be positive, got s={s}")
    total = 2.0 / s + (0.0 if math.isinf(r) else 2.0 / r)
    if total > 1.0 + 1e-12:
        raise RangeError(f"exponents r={r}, s={s} violate 2/s + 2/r <= 1 (got {total:.6g})")


class WavenumberService:
    """Evaluate the defining conditions of the dissipation wavenumbers.

    Args:
        bank: Filter bank of the grid the states live on
        c_r: Threshold constant; the condition is quantity < c_r * mu
        oversample: Quadrature refinement for the shell L^r norms
        allow_out_of_range: Downgrade exponent range violations to warnings
    """

    B_RANGE = (2.0, 4.0)          # open interval (n, 2n)
    POTENTIAL_RANGE = (2.0, math.inf)  # [2, inf)

    def __init__(self, bank: DyadicFilterBank, c_r: float = 0.01, oversample: int = 1,
                 allow_out_of_range: bool = False):
        if not c_r > 0:
            raise ValueError(f"c_r must be positive, got {c_r}")
        self.bank = bank
        self.c_r = c_r
        self.oversample = oversample
        self.allow_out_of_range = allow_out_of_range

    def _check_range(self, r: float, low: float, high: float, closed_low: bool, label: str) -> None:
        inside = (r >= low if closed_low else r > low) and r < high
        if inside:
            return
        bracket = "[" if closed_low else "("
        message = f"r={r} outside {bracket}{low}, {high}) for the {label} wavenumber"
        if self.allow_out_of_range:
            logger.warning("%s; continuing because out-of-range exponents are allowed", message)
            return
        raise RangeError(message)

    def _scan(self, kind: str, state: StateAB, components: Sequence[ScalarField], r: float,
              n: int, with_linf: bool) -> WavenumberReport:
        bank = self.bank
        threshold = self.c_r * state.mu
        spectrum = LittlewoodPaleyService.vector_shell_spectrum(
            components, r, bank, oversample=self.oversample, source=kind)
        shells = list(spectrum.shells)
        quantities = [bank.wavenumber(q) ** (n / r) * spectrum.lr[i] for i, q in enumerate(shells)]
        shell_ok = [value < threshold for value in quantities]

        records: List[ShellTest] = []
        q_index = INFINITE_INDEX
        for i, q in enumerate(shells):
            tail_ok = all(shell_ok[i + 1:])
            lowpass_linf = None
            linf_ok = True
            if with_linf:
                parts = [LittlewoodPaleyService.lowpass(c, q, bank) for c in components]
                lowpass_linf = SpectralService.vector_lebesgue_norm(parts, math.inf)
                linf_ok = lowpass_linf < threshold
            passes = tail_ok and linf_ok
            records.append(ShellTest(q, float(quantities[i]), shell_ok[i], tail_ok,
                                     lowpass_linf, linf_ok, passes))
            if passes and q_index == INFINITE_INDEX:
                q_index = q
        report = WavenumberReport(
            kind=kind, q_index=q_index, lambda_q=bank.wavenumber(q_index),
            r=r, c_r=self.c_r, mu=state.mu, n=n, records=tuple(records),
        )
        logger.debug("wavenumber %s: Q=%s", kind, q_index)
        return report

    def dissipation_wavenumber_B(self, state: StateAB, r: float = 3.0,
                                 n: int = FIELD_DIMENSION) -> WavenumberReport:
        """Q(B): shell quantities above q and ||B_{<=q}||_inf below c_r mu.

        Args:
            state: Potentials the field is reconstructed from
            r: Lebesgue exponent in (n, 2n)
            n: Space dimension in the scaling weight lambda_p^(n/r)

        Returns:
            WavenumberReport of kind "B"
        """
        self._check_range(r, float(n), 2.0 * n, False, "B")
        field = EMHDModel.magnetic_field(state)
        return self._scan("B", state, list(field), r, n, with_linf=True)

    def wavenumber_a(self, state: StateAB, r: float = 3.0, n: int = FIELD_DIMENSION) -> WavenumberReport:
        """Q(a) from the shells of the horizontal field curl(a e_z) = (a_y, -a_x)."""
        self._check_range(r, *self.POTENTIAL_RANGE, True, "a")
        field = EMHDModel.magnetic_field(state)
        return self._scan("a", state, [field.b1, field.b2], r, n, with_linf=False)

    def wavenumber_b(self, state: StateAB, r: float = 3.0, n: int = FIELD_DIMENSION) -> WavenumberReport:
        """Q(b) from the shells of b."""
        self._check_range(r, *self.POTENTIAL_RANGE, True, "b")
        return self._scan("b", state, [state.b], r, n, with_linf=False)

    def lowmode_monitors(self, state: StateAB, r: float = 3.0,
                         q_override: Optional[Tuple[float, float]] = None) -> Tuple[float, float, float, float]:
        """f1 = ||grad b_{<=Q(b)}||_{B^1_inf,inf}, f2 = ||grad grad a_{<=Q(a)}||_{B^1_inf,inf}.

        Args:
            state: Current potentials
            r: Exponent of the a and b wavenumbers
            q_override: Pinned (Q(a), Q(b)) instead of the computed reports

        Returns:
            (f1, f2, Q(a), Q(b))
        """
        if q_override is None:
            q_a = self.wavenumber_a(state, r).q_index
            q_b = self.wavenumber_b(state, r).q_index
        else:
            q_a, q_b = q_override
        lp = LittlewoodPaleyService
        besov = lp.besov_b1inf_norm
        low_b = lp.lowpass(state.b, q_b, self.bank)
        low_a = lp.lowpass(state.a, q_a, self.bank)
        f1 = max(besov(SpectralService.derivative(low_b, m), self.bank) for m in ((1, 0), (0, 1)))
        f2 = max(besov(SpectralService.derivative(low_a, m), self.bank)
                 for m in ((2, 0), (1, 1), (0, 2)))
        return f1, f2, q_a, q_b

    def critical_norms(self, state: StateAB) -> Dict[str, float]:
        """Scale-invariant Besov quantities sup_{q>=0} lambda_q ||a_q||_inf and sup_{q>=0} ||b_q||_inf."""
        lp = LittlewoodPaleyService
        a_norm = 0.0
        b_norm = 0.0
        for q in range(0, self.bank.q_max + 1):
            a_q = lp.project(state.a, q, self.bank)
            b_q = lp.project(state.b, q, self.bank)
            a_norm = max(a_norm, self.bank.wavenumber(q) * float(np.max(np.abs(a_q.physical))))
            b_norm = max(b_norm, float(np.max(np.abs(b_q.physical))))
        return {"a_critical": a_norm, "b_critical": b_norm}


class TrapezoidIntegral:
    """Running trapezoidal integral of samples (t, value)."""

    def __init__(self):
        self.value = 0.0
        self._last: Optional[Tuple[float, float]] = None

    def add(self, t: float, value: float) -> float:
        if self._last is not None:
            t_prev, v_prev = self._last
            if t < t_prev:
                raise ValueError(f"samples must be time-ordered, got {t} after {t_prev}")
            self.value += 0.5 * (t - t_prev) * (value + v_prev)
        self._last = (t, value)
        return self.value


class LPSAccumulator:
    """Running integral of ||b(t)||_{L^r}^s along a trajectory.

    Args:
        r: Space exponent in (2, inf]
        s: Time exponent; the critical 2r/(r-2) when omitted
    """

    def __init__(self, r: float, s: Optional[float] = None):
        self.r = r
        self.s = critical_lps_exponent(r) if s is None else s
        check_lps_pair(self.r, self.s)
        self._integral = TrapezoidIntegral()
        self.last_norm = 0.0

    @property
    def integral(self) -> float:
        return self._integral.value

    def add(self, t: float, state: StateAB) -> float:
        """Add one sample and return the running integral."""
        self.last_norm = SpectralService.lebesgue_norm(state.b, self.r)
        return self._integral.add(t, self.last_norm ** self.s)


class MonitorRecorder:
    """Collect f1, f2, ||b||_{L^r} and their running integrals into a MonitorSeries."""

    def __init__(self, service: WavenumberService, r: float, s: Optional[float] = None,
                 q_override: Optional[Tuple[float, float]] = None):
        self.service = service
        self.r = r
        self.q_override = q_override
        self.lps = LPSAccumulator(r, s)
        self._f1 = TrapezoidIntegral()
        self._f2 = TrapezoidIntegral()
        self.series = MonitorSeries(r=r, s=self.lps.s)

    def record(self, state: StateAB) -> MonitorSample:
        f1, f2, q_a, q_b = self.service.lowmode_monitors(state, self.r, self.q_override)
        int_lps = self.lps.add(state.t, state)
        sample = MonitorSample(
            t=state.t, f1=f1, f2=f2, lr_norm_b=self.lps.last_norm,
            int_f1=self._f1.add(state.t, f1), int_f2=self._f2.add(state.t, f2),
            int_lps=int_lps, q_a=q_a, q_b=q_b,
        )
        self.series.samples.append(sample)
        return sample

    __call__ = record
