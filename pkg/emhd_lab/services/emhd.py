"""
Right-hand sides of the 2.5D electron MHD system in potential form.

    a_t + (a_y b_x - a_x b_y)          = mu Lap a + f_a
    b_t - (a_y Lap a_x - a_x Lap a_y)  = mu Lap b + f_b

with B = (a_y, -a_x, b). The EMHD2 variant drops the b-nonlinearity.
"""
import logging
from typing import Dict, Optional, Tuple

import numpy as np

from emhd_lab.exceptions import RepresentabilityError
from emhd_lab.models import (
    ForcingSpec, ScalarField, StateAB, TorusGrid, Variant, VectorField3,
)
from emhd_lab.services.spectral import SpectralService

logger = logging.getLogger(__name__)

# coefficients at or below this fraction of the largest one count as empty
CONTENT_THRESHOLD = 1e-14


class EMHDModel:
    """Nonlinear terms, forcing and energy functionals on one grid.

    Args:
        grid: Grid the states live on
        variant: EMHD1 (full) or EMHD2 (b decoupled)
        forcing: Forcing potentials; validated against the dealias cutoff
    """

    def __init__(self, grid: TorusGrid, variant: Variant = Variant.EMHD1,
                 forcing: Optional[ForcingSpec] = None):
        self.grid = grid
        self.variant = Variant(variant)
        self.forcing = forcing or ForcingSpec()
        self.forcing.validate(grid)
        self._dx = SpectralService.derivative_multiplier(grid, (1, 0))
        self._dy = SpectralService.derivative_multiplier(grid, (0, 1))
        self._laplacian = -grid.kappa_sq
        self._mask = grid.dealias_mask
        self._forcing_patterns = self._build_forcing_patterns()

    # -- spectral kernels --------------------------------------------------

    def _to_physical(self, coefficients: np.ndarray) -> np.ndarray:
        return SpectralService.inverse(self.grid, coefficients)

    def _to_spectral(self, samples: np.ndarray) -> np.ndarray:
        return np.where(self._mask, SpectralService.forward(self.grid, samples), 0.0)

    def nonlinear_arrays(self, a_hat: np.ndarray, b_hat: np.ndarray,
                         variant: Optional[Variant] = None) -> Tuple[np.ndarray, np.ndarray]:
        """(N_a, N_b) coefficients for the given (a, b) coefficients."""
        variant = self.variant if variant is None else Variant(variant)
        phys = self._to_physical
        a_x, a_y = phys(self._dx * a_hat), phys(self._dy * a_hat)
        b_x, b_y = phys(self._dx * b_hat), phys(self._dy * b_hat)
        n_a = -self._to_spectral(a_y * b_x - a_x * b_y)
        if variant is Variant.EMHD2:
            return n_a, np.zeros_like(n_a)
        lap_a = self._laplacian * a_hat
        lap_a_x, lap_a_y = phys(self._dx * lap_a), phys(self._dy * lap_a)
        n_b = self._to_spectral(a_y * lap_a_x - a_x * lap_a_y)
        return n_a, n_b

    def rhs_arrays(self, a_hat: np.ndarray, b_hat: np.ndarray, t: float) -> Tuple[np.ndarray, np.ndarray]:
        """Nonlinear terms plus forcing; the diffusion is left to the integrator."""
        n_a, n_b = self.nonlinear_arrays(a_hat, b_hat)
        if self.forcing.is_empty:
            return n_a, n_b
        f_a, f_b = self.forcing_arrays(t)
        return n_a + f_a, n_b + f_b

    # -- forcing -----------------------------------------------------------

    def _build_forcing_patterns(self):
        patterns = []
        for mode in self.forcing.modes:
            pattern = np.zeros(self.grid.shape, dtype=complex)
            plus = self.grid.lattice_index(mode.k1, mode.k2)
            minus = self.grid.lattice_index(-mode.k1, -mode.k2)
            if plus == minus:
                pattern[plus] = mode.amplitude * np.cos(mode.phase)
            else:
                pattern[plus] += 0.5 * mode.amplitude * np.exp(1j * mode.phase)
                pattern[minus] += 0.5 * mode.amplitude * np.exp(-1j * mode.phase)
            patterns.append((mode, pattern))
        return patterns

    def forcing_arrays(self, t: float) -> Tuple[np.ndarray, np.ndarray]:
        f_a = np.zeros(self.grid.shape, dtype=complex)
        f_b = np.zeros(self.grid.shape, dtype=complex)
        for mode, pattern in self._forcing_patterns:
            target = f_a if mode.target == "a" else f_b
            target += mode.modulation(t) * pattern
        return f_a, f_b

    def forcing_eval(self, t: float) -> Tuple[ScalarField, ScalarField]:
        """Synthesize (f_a, f_b) at time t."""
        f_a, f_b = self.forcing_arrays(t)
        return (ScalarField.from_spectral(self.grid, f_a),
                ScalarField.from_spectral(self.grid, f_b))

    def forcing_work(self, state: StateAB, t: Optional[float] = None) -> float:
        """Power injected by the forcing: int(grad a . grad f_a + b f_b)."""
        if self.forcing.is_empty:
            return 0.0
        t = state.t if t is None else t
        f_a, f_b = self.forcing_eval(t)
        d = SpectralService.derivative
        integrand = (d(state.a, (1, 0)).physical * d(f_a, (1, 0)).physical
                     + d(state.a, (0, 1)).physical * d(f_a, (0, 1)).physical
                     + state.b.physical * f_b.physical)
        return float(np.sum(integrand) * self.grid.cell_area)

    # -- field level -------------------------------------------------------

    @staticmethod
    def magnetic_field(state: StateAB) -> VectorField3:
        """B = (a_y, -a_x, b)."""
        d = SpectralService.derivative
        return VectorField3(d(state.a, (0, 1)), -d(state.a, (1, 0)), state.b)

    def nonlinear_rhs(self, state: StateAB,
                      variant: Optional[Variant] = None) -> Tuple[ScalarField, ScalarField]:
        """Dealiased nonlinear terms (N_a, N_b) of the evolution equations.

        Args:
            state: Current potentials
            variant: Overrides the model's variant for this evaluation

        Returns:
            N_a = -(a_y b_x - a_x b_y) and N_b = a_y Lap a_x - a_x Lap a_y (zero for EMHD2)
        """
        n_a, n_b = self.nonlinear_arrays(state.a.spectral, state.b.spectral, variant)
        return (ScalarField.from_spectral(self.grid, n_a),
                ScalarField.from_spectral(self.grid, n_b))

    @staticmethod
    def hall_term_3d(field: VectorField3) -> VectorField3:
        """curl((curl B) x B) with dealiased products."""
        current = SpectralService.curl(field)
        return SpectralService.curl(SpectralService.cross(current, field))

    def hall_consistency(self, state: StateAB) -> float:
        """Relative L2 mismatch between -curl((curl B) x B) and (dy N_a, -dx N_a, N_b).

        Uses the EMHD1 nonlinearity regardless of the model's variant.
        """
        hall = self.hall_term_3d(self.magnetic_field(state))
        n_a, n_b = self.nonlinear_rhs(state, Variant.EMHD1)
        d = SpectralService.derivative
        expected = VectorField3(d(n_a, (0, 1)), -d(n_a, (1, 0)), n_b)
        mismatch = SpectralService.vector_lebesgue_norm(list(expected + hall), 2.0)
        scale = SpectralService.vector_lebesgue_norm(list(hall), 2.0)
        if scale == 0.0:
            return mismatch
        return mismatch / scale

    @staticmethod
    def energy_and_dissipation(state: StateAB) -> Tuple[float, float]:
        """E = 1/2 int(a_x^2 + a_y^2 + b^2), D = int(a_xx^2 + 2 a_xy^2 + a_yy^2 + b_x^2 + b_y^2)."""
        def d(field: ScalarField, m: Tuple[int, int]) -> np.ndarray:
            return SpectralService.derivative(field, m).physical

        a, b = state.a, state.b
        cell = state.grid.cell_area
        energy = 0.5 * cell * float(np.sum(d(a, (1, 0)) ** 2 + d(a, (0, 1)) ** 2 + b.physical ** 2))
        dissipation = cell * float(np.sum(
            d(a, (2, 0)) ** 2 + 2.0 * d(a, (1, 1)) ** 2 + d(a, (0, 2)) ** 2
            + d(b, (1, 0)) ** 2 + d(b, (0, 1)) ** 2
        ))
        return energy, dissipation

    @staticmethod
    def energy_space_norms(state: StateAB) -> Dict[str, float]:
        """Inhomogeneous Sobolev norms of the energy space: a in H1 and H2, b in L2 and H1."""
        grid = state.grid
        weight = 1.0 + grid.kappa_sq
        power_a = np.abs(state.a.spectral) ** 2
        power_b = np.abs(state.b.spectral) ** 2

        def norm(power, s):
            return float(np.sqrt(grid.area * np.sum(weight ** s * power)))

        return {
            "a_h1": norm(power_a, 1),
            "a_h2": norm(power_a, 2),
            "b_l2": norm(power_b, 0),
            "b_h1": norm(power_b, 1),
        }

    @staticmethod
    def rescale(state: StateAB, m: int) -> StateAB:
        """Dyadic rescaling a -> lambda^-1 a(lambda x, lambda^2 t), b -> b(lambda x, lambda^2 t).

        Mode k moves to 2^m k. The time tag is divided by lambda^2, not
        multiplied: the original state at time t is the rescaled solution at
        time t / lambda^2.

        Raises:
            RepresentabilityError: If a mode with content lands above the cutoff
        """
        if m < 0:
            raise ValueError(f"rescale exponent must be >= 0, got {m}")
        if m == 0:
            return state
        grid = state.grid
        factor = 2 ** m

        def dilate(field: ScalarField, prefactor: float, name: str) -> ScalarField:
            coefficients = field.spectral
            peak = float(np.max(np.abs(coefficients)))
            present = np.abs(coefficients) > CONTENT_THRESHOLD * peak if peak > 0 else np.zeros(grid.shape, bool)
            k1 = grid.k1[present].astype(int)
            k2 = grid.k2[present].astype(int)
            top = int(np.max(np.maximum(np.abs(k1), np.abs(k2)))) if k1.size else 0
            if factor * top > grid.cutoff:
                raise RepresentabilityError(
                    f"{name} has content at |k| = {top}, which maps above the cutoff "
                    f"{grid.cutoff} under lambda = {factor}"
                )
            dilated = np.zeros(grid.shape, dtype=complex)
            dilated[(factor * k1) % grid.n, (factor * k2) % grid.n] = prefactor * coefficients[present]
            return ScalarField.from_spectral(grid, dilated)

        a = dilate(state.a, 1.0 / factor, "a")
        b = dilate(state.b, 1.0, "b")
        logger.debug("rescaled state by lambda=%d", factor)
        return state.with_fields(a, b, t=state.t / factor ** 2)
