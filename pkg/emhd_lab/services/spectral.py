"""
Spectral core: transforms, derivatives, dealiasing and quadrature.

All operations are pure and return new fields. Derivative multipliers
are built from integer powers of i so that k and -k stay exactly conjugate.
"""
import logging
from typing import Optional, Sequence, Tuple

import numpy as np

from emhd_lab.exceptions import FieldValueError, RangeError
from emhd_lab.models import ScalarField, TorusGrid, VectorField3, conj_reflect

logger = logging.getLogger(__name__)

_I_POWERS = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)


class SpectralService:
    """Pseudo-spectral toolkit on a TorusGrid.

    Stateless: every method is a static method so one instance (or none)
    can be shared freely between simulations.
    """

    MAX_DERIVATIVE_ORDER = 4

    @staticmethod
    def forward(grid: TorusGrid, samples: np.ndarray) -> np.ndarray:
        """Physical samples -> Fourier coefficients, u_hat(0) = mean(u)."""
        return np.fft.fft2(samples) / (grid.n ** 2)

    @staticmethod
    def inverse(grid: TorusGrid, coefficients: np.ndarray) -> np.ndarray:
        """Fourier coefficients -> real physical samples."""
        return np.fft.ifft2(coefficients).real * (grid.n ** 2)

    @staticmethod
    def transform_roundtrip(field: ScalarField) -> ScalarField:
        """Forward then inverse transform of the physical samples.

        Raises:
            FieldValueError: If any sample is NaN or infinite
        """
        samples = field.physical
        if not np.all(np.isfinite(samples)):
            raise FieldValueError("cannot transform a field with non-finite samples")
        grid = field.grid
        coefficients = SpectralService.forward(grid, samples)
        return ScalarField.from_physical(grid, SpectralService.inverse(grid, coefficients))

    @staticmethod
    def derivative_multiplier(grid: TorusGrid, multi_index: Tuple[int, int]) -> np.ndarray:
        """(i 2 pi k1 / L)^m1 (i 2 pi k2 / L)^m2 on the lattice.

        Odd orders vanish on the Nyquist row/column, which has no conjugate partner.
        """
        m1, m2 = (int(m) for m in multi_index)
        if m1 < 0 or m2 < 0:
            raise ValueError(f"derivative orders must be non-negative, got {multi_index}")
        if m1 + m2 > SpectralService.MAX_DERIVATIVE_ORDER:
            raise ValueError(
                f"derivative order {m1 + m2} exceeds {SpectralService.MAX_DERIVATIVE_ORDER}"
            )
        scale = grid.wavenumber_scale
        real_part = (scale * grid.k1) ** m1 * (scale * grid.k2) ** m2
        half = grid.n // 2
        if m1 % 2 == 1:
            real_part = np.where(grid.k1 == -half, 0.0, real_part)
        if m2 % 2 == 1:
            real_part = np.where(grid.k2 == -half, 0.0, real_part)
        return _I_POWERS[(m1 + m2) % 4] * real_part

    @staticmethod
    def derivative(field: ScalarField, multi_index: Tuple[int, int]) -> ScalarField:
        """Spectral partial derivative d^m1/dx^m1 d^m2/dy^m2."""
        multiplier = SpectralService.derivative_multiplier(field.grid, multi_index)
        return ScalarField.from_spectral(field.grid, field.spectral * multiplier, symmetrize=False)

    @staticmethod
    def laplacian(field: ScalarField) -> ScalarField:
        return ScalarField.from_spectral(field.grid, -field.grid.kappa_sq * field.spectral, symmetrize=False)

    @staticmethod
    def dealias(field: ScalarField) -> ScalarField:
        """Zero every coefficient with max(|k1|, |k2|) > floor(N/3)."""
        mask = field.grid.dealias_mask
        return ScalarField.from_spectral(field.grid, np.where(mask, field.spectral, 0.0), symmetrize=False)

    @staticmethod
    def multiply(u: ScalarField, v: ScalarField) -> ScalarField:
        """Pseudo-spectral product, dealiased."""
        if u.grid != v.grid:
            raise ValueError("fields live on different grids")
        grid = u.grid
        coefficients = SpectralService.forward(grid, u.physical * v.physical)
        return ScalarField.from_spectral(grid, np.where(grid.dealias_mask, coefficients, 0.0))

    @staticmethod
    def gradient(field: ScalarField) -> Tuple[ScalarField, ScalarField]:
        return (SpectralService.derivative(field, (1, 0)),
                SpectralService.derivative(field, (0, 1)))

    @staticmethod
    def curl(vector: VectorField3) -> VectorField3:
        """Curl with d/dz = 0: (dy B3, -dx B3, dx B2 - dy B1)."""
        d = SpectralService.derivative
        return VectorField3(
            d(vector.b3, (0, 1)),
            -d(vector.b3, (1, 0)),
            d(vector.b2, (1, 0)) - d(vector.b1, (0, 1)),
        )

    @staticmethod
    def cross(u: VectorField3, v: VectorField3) -> VectorField3:
        """Pointwise u x v with dealiased products."""
        mul = SpectralService.multiply
        return VectorField3(
            mul(u.b2, v.b3) - mul(u.b3, v.b2),
            mul(u.b3, v.b1) - mul(u.b1, v.b3),
            mul(u.b1, v.b2) - mul(u.b2, v.b1),
        )

    @staticmethod
    def upsample(field: ScalarField, factor: int) -> np.ndarray:
        """Spectral interpolation of the field onto a (factor*N)^2 lattice.

        Nyquist modes are dropped; dealiased fields carry none.
        """
        factor = int(factor)
        if factor < 1:
            raise ValueError(f"oversampling factor must be >= 1, got {factor}")
        grid = field.grid
        if factor == 1:
            return field.physical
        fine_n = grid.n * factor
        keep = ~grid.nyquist_mask
        fine = np.zeros((fine_n, fine_n), dtype=complex)
        rows = grid.k1[keep].astype(int) % fine_n
        cols = grid.k2[keep].astype(int) % fine_n
        fine[rows, cols] = field.spectral[keep]
        return np.fft.ifft2(fine).real * (fine_n ** 2)

    @staticmethod
    def lebesgue_norm_of_samples(samples: np.ndarray, area: float, r: float) -> float:
        """Uniform-grid quadrature of the L^r norm of sampled values."""
        if not r >= 1:
            raise RangeError(f"Lebesgue exponent must be >= 1, got {r}")
        magnitude = np.abs(samples)
        if np.isinf(r):
            return float(np.max(magnitude)) if magnitude.size else 0.0
        cell = area / magnitude.size
        if r == 2:
            return float(np.sqrt(cell * np.sum(magnitude * magnitude)))
        peak = float(np.max(magnitude))
        if peak == 0.0:
            return 0.0
        # scale by the peak so large r does not overflow
        return peak * float((cell * np.sum((magnitude / peak) ** r)) ** (1.0 / r))

    @staticmethod
    def lebesgue_norm(field: ScalarField, r: float, oversample: int = 1) -> float:
        """L^r norm by uniform-grid quadrature; r = inf gives the lattice max.

        Args:
            field: Field to measure
            r: Exponent in [1, inf]
            oversample: Evaluate on a spectrally interpolated lattice this many times finer

        Returns:
            The quadrature value of ||field||_{L^r}
        """
        samples = SpectralService.upsample(field, oversample)
        return SpectralService.lebesgue_norm_of_samples(samples, field.grid.area, r)

    @staticmethod
    def vector_lebesgue_norm(components: Sequence[ScalarField], r: float, oversample: int = 1) -> float:
        """L^r norm of the pointwise Euclidean magnitude of a vector field."""
        area = components[0].grid.area
        squares = sum(SpectralService.upsample(c, oversample) ** 2 for c in components)
        return SpectralService.lebesgue_norm_of_samples(np.sqrt(squares), area, r)

    @staticmethod
    def parseval_norm(field: ScalarField) -> float:
        """(L^2 sum_k |u_hat(k)|^2)^(1/2)."""
        return float(np.sqrt(field.grid.area * np.sum(np.abs(field.spectral) ** 2)))

    @staticmethod
    def hermitian_defect(field: ScalarField) -> float:
        """max |u_hat(k) - conj(u_hat(-k))|."""
        coefficients = field.spectral
        return float(np.max(np.abs(coefficients - conj_reflect(coefficients))))

    @staticmethod
    def random_band_field(grid: TorusGrid, rng: np.random.Generator, kmax: int,
                          amplitude: float = 1.0, exclude_mean: bool = True,
                          radius: Optional[float] = None) -> ScalarField:
        """Random real field with content at max(|k1|, |k2|) <= kmax.

        The draws are laid out on a (2 kmax + 1)^2 block independent of N, so
        the same generator state gives the same function on every grid that
        resolves the band. `radius` further restricts the content to |k| < radius.
        """
        if kmax > grid.cutoff:
            raise RangeError(f"band {kmax} exceeds the dealias cutoff {grid.cutoff}")
        width = 2 * kmax + 1
        block = rng.standard_normal((width, width)) + 1j * rng.standard_normal((width, width))
        block *= amplitude / np.sqrt(2.0)
        coefficients = np.zeros(grid.shape, dtype=complex)
        band = np.arange(-kmax, kmax + 1)
        rows, cols = np.meshgrid(band % grid.n, band % grid.n, indexing="ij")
        coefficients[rows, cols] = block
        if exclude_mean:
            coefficients[0, 0] = 0.0
        if radius is not None:
            coefficients = np.where(grid.k_magnitude < radius, coefficients, 0.0)
        return ScalarField.from_spectral(grid, coefficients)
