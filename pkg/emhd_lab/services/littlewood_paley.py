"""
Littlewood-Paley analysis on the periodic grid.

The cut-off chi equals 1 on |xi| <= 3/4, vanishes for |xi| >= 1 and is
joined by a C-infinity smooth step in between. phi(xi) = chi(xi/2) - chi(xi),
phi_q(k) = phi(2^-q |k|) for q >= 0 and phi_-1(k) = chi(|k|).
"""
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from emhd_lab.exceptions import RangeError
from emhd_lab.models import (
    CommutatorEnsemble, DyadicFilterBank, ScalarField, ShellSpectrum,
    TorusGrid, VectorField3,
)
from emhd_lab.services.spectral import SpectralService

logger = logging.getLogger(__name__)

PLATEAU = 0.75
SUPPORT_EDGE = 1.0


def smooth_step(t) -> np.ndarray:
    """psi(t) = g(t) / (g(t) + g(1 - t)) with g(t) = exp(-1/t) for t > 0, else 0."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        g_t = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        s = 1.0 - t
        g_s = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
    return g_t / (g_t + g_s)


def chi(xi) -> np.ndarray:
    """Radial low-pass cut-off evaluated at |xi|."""
    r = np.abs(np.asarray(xi, dtype=float))
    transition = smooth_step((SUPPORT_EDGE - r) / (SUPPORT_EDGE - PLATEAU))
    return np.where(r <= PLATEAU, 1.0, np.where(r >= SUPPORT_EDGE, 0.0, transition))


def phi(xi) -> np.ndarray:
    """Dyadic annulus multiplier chi(xi/2) - chi(xi)."""
    xi = np.asarray(xi, dtype=float)
    return chi(xi / 2.0) - chi(xi)


def top_shell(grid: TorusGrid) -> int:
    """Smallest q whose low-pass plateau covers every retained mode.

    The retained square reaches |k| = sqrt(2) * cutoff on its diagonal, so
    we need (3/4) 2^(q+1) >= sqrt(2) * cutoff.
    """
    corner = math.sqrt(2.0) * grid.cutoff
    q = -1
    while PLATEAU * 2.0 ** (q + 1) < corner:
        q += 1
    return q


class LittlewoodPaleyService:
    """Dyadic projections, norms, paraproducts and commutators."""

    SOBOLEV_RANGE = (-2.0, 4.0)

    @staticmethod
    def build_filter_bank(grid: TorusGrid) -> DyadicFilterBank:
        """Tabulate phi_q on the lattice for q = -1 .. q_max.

        Args:
            grid: Grid whose lattice the multipliers live on

        Returns:
            An immutable DyadicFilterBank

        Raises:
            RangeError: If the grid cannot host the q = -1 band
        """
        if grid.cutoff < 1:
            raise RangeError(f"grid with N={grid.n} retains no non-zero mode")
        q_max = top_shell(grid)
        magnitude = grid.k_magnitude
        tables = [chi(magnitude)]
        for q in range(0, q_max + 1):
            tables.append(phi(magnitude / 2.0 ** q))
        multipliers = np.stack(tables)
        multipliers.setflags(write=False)
        logger.debug("filter bank for N=%d: shells -1..%d", grid.n, q_max)
        return DyadicFilterBank(grid=grid, q_max=q_max, multipliers=multipliers)

    @staticmethod
    def project(field: ScalarField, q: int, bank: DyadicFilterBank) -> ScalarField:
        """Delta_q u: multiply the coefficients by phi_q. Shells outside the bank are zero."""
        if q < bank.q_min or q > bank.q_max:
            return ScalarField.zeros(field.grid)
        return ScalarField.from_spectral(field.grid, field.spectral * bank.multiplier(q), symmetrize=False)

    @staticmethod
    def projections(field: ScalarField, bank: DyadicFilterBank) -> Dict[int, ScalarField]:
        return {q: LittlewoodPaleyService.project(field, q, bank) for q in bank.shells}

    @staticmethod
    def lowpass(field: ScalarField, q: float, bank: DyadicFilterBank) -> ScalarField:
        """u_{<=q}; q may be the +inf sentinel, which returns the field itself."""
        return ScalarField.from_spectral(
            field.grid, field.spectral * bank.lowpass_multiplier(q), symmetrize=False
        )

    @staticmethod
    def tilde_project(field: ScalarField, q: int, bank: DyadicFilterBank) -> ScalarField:
        """u_{q-1} + u_q + u_{q+1}."""
        project = LittlewoodPaleyService.project
        return project(field, q - 1, bank) + project(field, q, bank) + project(field, q + 1, bank)

    @staticmethod
    def shell_spectrum(field: ScalarField, r: float, bank: DyadicFilterBank,
                       oversample: int = 1, source: str = "") -> ShellSpectrum:
        """Per-shell L2, L^r and L^inf norms of one scalar field."""
        return LittlewoodPaleyService.vector_shell_spectrum([field], r, bank, oversample, source)

    @staticmethod
    def vector_shell_spectrum(components: Sequence[ScalarField], r: float, bank: DyadicFilterBank,
                              oversample: int = 1, source: str = "") -> ShellSpectrum:
        """Per-shell norms of the pointwise Euclidean magnitude of a vector field.

        Args:
            components: Field components sharing one grid
            r: Lebesgue exponent of the middle column
            bank: Filter bank on the components' grid
            oversample: Quadrature refinement passed to lebesgue_norm
            source: Label stored in the spectrum

        Returns:
            ShellSpectrum with one entry per shell of the bank
        """
        shells = tuple(bank.shells)
        l2 = np.zeros(len(shells))
        lr = np.zeros(len(shells))
        linf = np.zeros(len(shells))
        for i, q in enumerate(shells):
            parts = [LittlewoodPaleyService.project(c, q, bank) for c in components]
            if not any(np.any(p.spectral) for p in parts):
                continue
            area = bank.grid.area
            magnitude = np.sqrt(sum(SpectralService.upsample(p, oversample) ** 2 for p in parts))
            l2[i] = SpectralService.lebesgue_norm_of_samples(magnitude, area, 2.0)
            lr[i] = SpectralService.lebesgue_norm_of_samples(magnitude, area, r)
            linf[i] = SpectralService.lebesgue_norm_of_samples(magnitude, area, math.inf)
        return ShellSpectrum(shells=shells, l2=l2, lr=lr, linf=linf, r=r, source=source)

    @staticmethod
    def _shell_energies(field: ScalarField, bank: DyadicFilterBank) -> np.ndarray:
        """||u_q||_{L2}^2 per shell via Parseval."""
        power = np.abs(field.spectral) ** 2
        return bank.grid.area * np.einsum("qij,ij->q", bank.multipliers ** 2, power)

    @staticmethod
    def sobolev_norm(field: ScalarField, s: float, bank: DyadicFilterBank) -> float:
        """Equivalent H^s norm (sum_q lambda_q^(2s) ||u_q||_{L2}^2)^(1/2).

        Raises:
            RangeError: If s lies outside [-2, 4]
        """
        return LittlewoodPaleyService.vector_sobolev_norm([field], s, bank)

    @staticmethod
    def vector_sobolev_norm(components: Sequence[ScalarField], s: float, bank: DyadicFilterBank) -> float:
        low, high = LittlewoodPaleyService.SOBOLEV_RANGE
        if not low <= s <= high:
            raise RangeError(f"Sobolev exponent {s} outside [{low}, {high}]")
        weights = np.array([bank.wavenumber(q) ** (2.0 * s) for q in bank.shells])
        total = sum(float(np.dot(weights, LittlewoodPaleyService._shell_energies(c, bank)))
                    for c in components)
        return math.sqrt(max(total, 0.0))

    @staticmethod
    def besov_b1inf_norm(field: ScalarField, bank: DyadicFilterBank) -> float:
        """sup_q lambda_q ||u_q||_{L^inf}."""
        best = 0.0
        for q in bank.shells:
            part = LittlewoodPaleyService.project(field, q, bank)
            best = max(best, bank.wavenumber(q) * float(np.max(np.abs(part.physical))))
        return best

    @staticmethod
    def bony_decompose(u: ScalarField, v: ScalarField, q: int,
                       bank: DyadicFilterBank) -> Tuple[ScalarField, ScalarField, ScalarField]:
        """Split Delta_q(u v) into low-high, high-low and high-high interactions.

        Returns:
            (P1, P2, P3) with P1 + P2 + P3 = Delta_q(u v) on retained modes
        """
        lp = LittlewoodPaleyService
        mul = SpectralService.multiply
        grid = u.grid
        p1 = ScalarField.zeros(grid)
        p2 = ScalarField.zeros(grid)
        p3 = ScalarField.zeros(grid)
        for p in range(max(q - 2, bank.q_min), min(q + 2, bank.q_max) + 1):
            u_p, v_p = lp.project(u, p, bank), lp.project(v, p, bank)
            p1 = p1 + lp.project(mul(lp.lowpass(u, p - 2, bank), v_p), q, bank)
            p2 = p2 + lp.project(mul(u_p, lp.lowpass(v, p - 2, bank)), q, bank)
        for p in range(max(q - 2, bank.q_min), bank.q_max + 1):
            p3 = p3 + lp.project(mul(lp.tilde_project(u, p, bank), lp.project(v, p, bank)), q, bank)
        return p1, p2, p3

    @staticmethod
    def commutator_transport(u: Tuple[ScalarField, ScalarField], v: ScalarField, q: int, p: int,
                             bank: DyadicFilterBank) -> ScalarField:
        """[Delta_q, u_{<=p-2} . grad] v_p with dealiased products."""
        lp = LittlewoodPaleyService
        mul = SpectralService.multiply
        low = [lp.lowpass(c, p - 2, bank) for c in u]
        v_p = lp.project(v, p, bank)
        grad_v = SpectralService.gradient(v_p)
        grad_v_q = SpectralService.gradient(lp.project(v_p, q, bank))
        transport = mul(low[0], grad_v[0]) + mul(low[1], grad_v[1])
        shifted = mul(low[0], grad_v_q[0]) + mul(low[1], grad_v_q[1])
        return lp.project(transport, q, bank) - shifted

    @staticmethod
    def commutator_curl(u: VectorField3, v: VectorField3, q: int, bank: DyadicFilterBank) -> VectorField3:
        """[Delta_q, u x curl] v = Delta_q(u x curl v) - u x curl(Delta_q v)."""
        lp = LittlewoodPaleyService
        whole = SpectralService.cross(u, SpectralService.curl(v))
        v_q = VectorField3(*(lp.project(c, q, bank) for c in v))
        local = SpectralService.cross(u, SpectralService.curl(v_q))
        return VectorField3(*(lp.project(c, q, bank) for c in whole)) - local

    @staticmethod
    def _gradient_sup(components: Sequence[ScalarField], order: int) -> float:
        """L^inf of the pointwise Frobenius norm of all derivatives of the given order."""
        indices = [(m, order - m) for m in range(order + 1)]
        squares = np.zeros(components[0].grid.shape)
        for c in components:
            for m in indices:
                weight = math.comb(order, m[0])
                squares += weight * SpectralService.derivative(c, m).physical ** 2
        return float(np.sqrt(np.max(squares)))

    @staticmethod
    def commutator_ratios(u: VectorField3, v: VectorField3, w: VectorField3, scalar: ScalarField,
                          q: int, p: int, bank: DyadicFilterBank) -> Tuple[float, float, float]:
        """Empirical constants of the three commutator estimates (r1 = r3 = 2, r2 = inf).

        Returns:
            (transport, curl, curl_integral) ratios. A ratio whose bound vanishes is 0.
        """
        lp = LittlewoodPaleyService
        norm = SpectralService.lebesgue_norm
        vec_norm = SpectralService.vector_lebesgue_norm

        horizontal = (u.b1, u.b2)
        transport = lp.commutator_transport(horizontal, scalar, q, p, bank)
        low = [lp.lowpass(c, p - 2, bank) for c in horizontal]
        bound = lp._gradient_sup(low, 1) * norm(lp.project(scalar, p, bank), 2.0)
        transport_ratio = norm(transport, 2.0) / bound if bound > 0 else 0.0

        curl_comm = lp.commutator_curl(u, v, q, bank)
        bound = lp._gradient_sup(list(u), 1) * vec_norm(list(v), 2.0)
        curl_ratio = vec_norm(list(curl_comm), 2.0) / bound if bound > 0 else 0.0

        curl_w = SpectralService.curl(w)
        integrand = sum(a.physical * b.physical for a, b in zip(curl_comm, curl_w))
        integral = abs(float(np.sum(integrand)) * u.grid.cell_area)
        bound = lp._gradient_sup(list(u), 2) * vec_norm(list(v), 2.0) * vec_norm(list(w), 2.0)
        integral_ratio = integral / bound if bound > 0 else 0.0
        return transport_ratio, curl_ratio, integral_ratio

    @staticmethod
    def commutator_ensemble(grid: TorusGrid, q: int = 2, p: int = 3, draws: int = 50,
                            seed: int = 0, kmax: int = 8,
                            bank: Optional[DyadicFilterBank] = None) -> CommutatorEnsemble:
        """Record the commutator ratios over seeded random band-limited fields.

        The fields are drawn on a fixed band, so the same seed gives the same
        functions on every grid that resolves 2 * kmax without aliasing.
        """
        bank = bank or LittlewoodPaleyService.build_filter_bank(grid)
        rng = np.random.default_rng(seed)
        rand = SpectralService.random_band_field
        transport: List[float] = []
        curl: List[float] = []
        integral: List[float] = []
        for _ in range(draws):
            u = VectorField3(*(rand(grid, rng, kmax) for _ in range(3)))
            v = VectorField3(*(rand(grid, rng, kmax) for _ in range(3)))
            w = VectorField3(*(rand(grid, rng, kmax) for _ in range(3)))
            scalar = rand(grid, rng, kmax)
            ratios = LittlewoodPaleyService.commutator_ratios(u, v, w, scalar, q, p, bank)
            transport.append(ratios[0])
            curl.append(ratios[1])
            integral.append(ratios[2])
        logger.info("commutator ensemble: N=%d q=%d p=%d draws=%d", grid.n, q, p, draws)
        return CommutatorEnsemble(
            n=grid.n, q=q, p=p,
            transport=np.array(transport),
            curl=np.array(curl),
            curl_integral=np.array(integral),
        )
