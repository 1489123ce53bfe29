"""
Core data models: the periodic grid, scalar fields and the (a, b) state.

A ScalarField keeps its physical samples and its Fourier coefficients in
sync. Either representation may be the one it was built from; the other is
computed on first access and cached. Fields are immutable values.
"""
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import ClassVar, Iterator, List, Optional, Tuple

import numpy as np

from emhd_lab.exceptions import FieldValueError, RepresentabilityError


def conj_reflect(coefficients: np.ndarray) -> np.ndarray:
    """Return conj(c(-k)) on the FFT-ordered lattice."""
    flipped = np.flip(coefficients, axis=(0, 1))
    return np.conj(np.roll(flipped, 1, axis=(0, 1)))


def hermitian_part(coefficients: np.ndarray) -> np.ndarray:
    """Project coefficients onto the Hermitian-symmetric (real-field) subspace."""
    return 0.5 * (coefficients + conj_reflect(coefficients))


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class TorusGrid:
    """Uniform N x N discretization of the periodic box [0, L)^2.

    Arrays are indexed [i, j] with i along x and j along y. Integer
    wavenumbers follow FFT order, i.e. the lattice {-N/2, ..., N/2-1}^2.
    """
    n: int
    length: float = 1.0

    dim: ClassVar[int] = 2

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n:
            raise ValueError(f"points per dimension must be an integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if self.n < 16 or self.n % 2 != 0:
            raise ValueError(f"points per dimension must be even and >= 16, got {self.n}")
        if not np.isfinite(self.length) or self.length <= 0:
            raise ValueError(f"period must be positive, got {self.length}")
        object.__setattr__(self, "length", float(self.length))

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.n, self.n)

    @property
    def cutoff(self) -> int:
        """Largest retained |k_i| under the 2/3 rule."""
        return self.n // 3

    @property
    def area(self) -> float:
        return self.length ** 2

    @property
    def cell_area(self) -> float:
        return (self.length / self.n) ** 2

    @property
    def wavenumber_scale(self) -> float:
        """Physical wavenumber of the unit lattice step, 2*pi/L."""
        return 2.0 * np.pi / self.length

    @property
    def kappa_max(self) -> float:
        return self.wavenumber_scale * self.cutoff

    @cached_property
    def k1(self) -> np.ndarray:
        k = np.fft.fftfreq(self.n, d=1.0 / self.n)
        return _frozen(np.broadcast_to(k[:, None], self.shape).copy())

    @cached_property
    def k2(self) -> np.ndarray:
        k = np.fft.fftfreq(self.n, d=1.0 / self.n)
        return _frozen(np.broadcast_to(k[None, :], self.shape).copy())

    @cached_property
    def k_magnitude(self) -> np.ndarray:
        """|k| of the integer lattice point."""
        return _frozen(np.hypot(self.k1, self.k2))

    @cached_property
    def kappa_sq(self) -> np.ndarray:
        """Squared physical wavenumber (2*pi/L)^2 |k|^2."""
        return _frozen(self.wavenumber_scale ** 2 * (self.k1 ** 2 + self.k2 ** 2))

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """True on retained modes: max(|k1|, |k2|) <= floor(N/3)."""
        keep = (np.abs(self.k1) <= self.cutoff) & (np.abs(self.k2) <= self.cutoff)
        return _frozen(keep)

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """True on the k_i = -N/2 row and column."""
        half = self.n // 2
        return _frozen((self.k1 == -half) | (self.k2 == -half))

    @cached_property
    def coordinates(self) -> Tuple[np.ndarray, np.ndarray]:
        """Grid points x_j = j L / N as an (x, y) pair of N x N arrays."""
        axis = np.arange(self.n) * (self.length / self.n)
        x, y = np.meshgrid(axis, axis, indexing="ij")
        return _frozen(x), _frozen(y)

    def lattice_index(self, k1: int, k2: int) -> Tuple[int, int]:
        """Array index of the integer wavenumber (k1, k2)."""
        half = self.n // 2
        if not (-half <= k1 < half and -half <= k2 < half):
            raise RepresentabilityError(f"wavenumber ({k1}, {k2}) is not on the {self.n}^2 lattice")
        return (k1 % self.n, k2 % self.n)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """One real periodic scalar with synchronized physical/spectral forms.

    Normalization: u_hat = fft2(u) / N^2, so u_hat(0) is the mean of u.
    Use the from_physical / from_spectral constructors.
    """
    grid: TorusGrid
    _physical: Optional[np.ndarray] = field(default=None, repr=False)
    _spectral: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self._physical is None and self._spectral is None:
            raise ValueError("a field needs at least one representation")

    @classmethod
    def from_physical(cls, grid: TorusGrid, samples) -> "ScalarField":
        values = np.array(samples, dtype=float)
        if values.shape != grid.shape:
            raise ValueError(f"expected samples of shape {grid.shape}, got {values.shape}")
        if not np.all(np.isfinite(values)):
            bad = int(np.count_nonzero(~np.isfinite(values)))
            raise FieldValueError(f"{bad} non-finite sample(s) in physical data")
        return cls(grid, _physical=_frozen(values))

    @classmethod
    def from_spectral(cls, grid: TorusGrid, coefficients, symmetrize: bool = True) -> "ScalarField":
        values = np.array(coefficients, dtype=complex)
        if values.shape != grid.shape:
            raise ValueError(f"expected coefficients of shape {grid.shape}, got {values.shape}")
        if not np.all(np.isfinite(values)):
            bad = int(np.count_nonzero(~np.isfinite(values)))
            raise FieldValueError(f"{bad} non-finite Fourier coefficient(s)")
        if symmetrize:
            values = hermitian_part(values)
        return cls(grid, _spectral=_frozen(values))

    @classmethod
    def zeros(cls, grid: TorusGrid) -> "ScalarField":
        return cls.from_spectral(grid, np.zeros(grid.shape, dtype=complex), symmetrize=False)

    @classmethod
    def constant(cls, grid: TorusGrid, value: float) -> "ScalarField":
        return cls.from_physical(grid, np.full(grid.shape, float(value)))

    @property
    def representation(self) -> str:
        """Which representations are currently held: physical, spectral or both."""
        if self._physical is not None and self._spectral is not None:
            return "both"
        return "physical" if self._physical is not None else "spectral"

    @property
    def physical(self) -> np.ndarray:
        if self._physical is None:
            samples = np.fft.ifft2(self._spectral).real * (self.grid.n ** 2)
            object.__setattr__(self, "_physical", _frozen(samples))
        return self._physical

    @property
    def spectral(self) -> np.ndarray:
        if self._spectral is None:
            coefficients = np.fft.fft2(self._physical) / (self.grid.n ** 2)
            object.__setattr__(self, "_spectral", _frozen(coefficients))
        return self._spectral

    def coefficient(self, k1: int, k2: int) -> complex:
        return complex(self.spectral[self.grid.lattice_index(k1, k2)])

    def _check_grid(self, other: "ScalarField") -> None:
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")

    def _combine(self, other: "ScalarField", sign: float) -> "ScalarField":
        self._check_grid(other)
        both_physical = self._physical is not None and other._physical is not None
        if both_physical and (self._spectral is None or other._spectral is None):
            return ScalarField.from_physical(self.grid, self.physical + sign * other.physical)
        return ScalarField.from_spectral(self.grid, self.spectral + sign * other.spectral, symmetrize=False)

    def __add__(self, other: "ScalarField") -> "ScalarField":
        return self._combine(other, 1.0)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        return self._combine(other, -1.0)

    def __neg__(self) -> "ScalarField":
        return self * -1.0

    def __mul__(self, scalar: float) -> "ScalarField":
        if isinstance(scalar, ScalarField):
            raise TypeError("use SpectralService.multiply for field products")
        if self._spectral is not None:
            return ScalarField.from_spectral(self.grid, self._spectral * float(scalar), symmetrize=False)
        return ScalarField.from_physical(self.grid, self._physical * float(scalar))

    __rmul__ = __mul__


class Variant(Enum):
    """Which right-hand side is evolved."""
    EMHD1 = "EMHD1"  # full 2.5D system
    EMHD2 = "EMHD2"  # b-equation reduced to the heat equation


@dataclass(frozen=True)
class StateAB:
    """The potentials (a, b) at time t with resistivity mu.

    B = (a_y, -a_x, b). Both fields share one grid.
    """
    a: ScalarField
    b: ScalarField
    t: float = 0.0
    mu: float = 0.1

    def __post_init__(self):
        if self.a.grid != self.b.grid:
            raise ValueError("a and b must share one grid")
        if not np.isfinite(self.mu) or self.mu <= 0:
            raise ValueError(f"resistivity mu must be positive, got {self.mu}")

    @property
    def grid(self) -> TorusGrid:
        return self.a.grid

    @classmethod
    def zeros(cls, grid: TorusGrid, mu: float = 0.1, t: float = 0.0) -> "StateAB":
        return cls(ScalarField.zeros(grid), ScalarField.zeros(grid), t=t, mu=mu)

    def with_fields(self, a: ScalarField, b: ScalarField, t: Optional[float] = None) -> "StateAB":
        return replace(self, a=a, b=b, t=self.t if t is None else t)

    def scaled(self, factor: float) -> "StateAB":
        return replace(self, a=self.a * factor, b=self.b * factor)


@dataclass(frozen=True)
class VectorField3:
    """Three components on the 2D grid with no z-dependence."""
    b1: ScalarField
    b2: ScalarField
    b3: ScalarField

    def __post_init__(self):
        if not (self.b1.grid == self.b2.grid == self.b3.grid):
            raise ValueError("vector components must share one grid")

    @property
    def grid(self) -> TorusGrid:
        return self.b1.grid

    @property
    def components(self) -> Tuple[ScalarField, ScalarField, ScalarField]:
        return (self.b1, self.b2, self.b3)

    def __iter__(self) -> Iterator[ScalarField]:
        return iter(self.components)

    def __sub__(self, other: "VectorField3") -> "VectorField3":
        return VectorField3(*(u - v for u, v in zip(self, other)))

    def __add__(self, other: "VectorField3") -> "VectorField3":
        return VectorField3(*(u + v for u, v in zip(self, other)))

    def __mul__(self, scalar: float) -> "VectorField3":
        return VectorField3(*(u * scalar for u in self))

    __rmul__ = __mul__

    @classmethod
    def zeros(cls, grid: TorusGrid) -> "VectorField3":
        return cls(ScalarField.zeros(grid), ScalarField.zeros(grid), ScalarField.zeros(grid))

    def magnitude(self) -> np.ndarray:
        """Pointwise Euclidean magnitude on the grid."""
        return np.sqrt(sum(c.physical ** 2 for c in self))


@dataclass(frozen=True)
class ForcingMode:
    """One forcing mode A * m(t) * cos(2*pi*(k1 x + k2 y)/L + phase).

    m(t) = 1 for a steady mode and sin(omega t) when omega is given.
    """
    target: str
    k1: int
    k2: int
    amplitude: float
    phase: float = 0.0
    omega: Optional[float] = None

    def __post_init__(self):
        if self.target not in ("a", "b"):
            raise ValueError(f"forcing target must be 'a' or 'b', got {self.target!r}")

    def modulation(self, t: float) -> float:
        if self.omega is None:
            return 1.0
        return float(np.sin(self.omega * t))


@dataclass(frozen=True)
class ForcingSpec:
    """Forcing potentials (f_a, f_b) as a list of Fourier modes."""
    modes: Tuple[ForcingMode, ...] = ()

    @property
    def is_empty(self) -> bool:
        return len(self.modes) == 0

    @classmethod
    def parse(cls, text: str) -> "ForcingSpec":
        """Parse `target,k1,k2,amplitude,phase[,omega]` entries separated by `;`."""
        modes: List[ForcingMode] = []
        for entry in (part.strip() for part in text.split(";")):
            if not entry:
                continue
            parts = [p.strip() for p in entry.split(",")]
            if len(parts) not in (5, 6):
                raise ValueError(f"forcing entry {entry!r} needs 5 or 6 comma-separated values")
            omega = float(parts[5]) if len(parts) == 6 else None
            modes.append(ForcingMode(
                target=parts[0],
                k1=int(parts[1]),
                k2=int(parts[2]),
                amplitude=float(parts[3]),
                phase=float(parts[4]),
                omega=omega,
            ))
        return cls(tuple(modes))

    def validate(self, grid: TorusGrid) -> None:
        """Reject modes above the dealias cutoff of the grid."""
        for mode in self.modes:
            if max(abs(mode.k1), abs(mode.k2)) > grid.cutoff:
                raise RepresentabilityError(
                    f"forcing mode ({mode.k1}, {mode.k2}) lies above the dealias cutoff {grid.cutoff}"
                )


class StepMode(Enum):
    FIXED = "fixed"
    ADAPTIVE = "adaptive"


@dataclass(frozen=True)
class StepPolicy:
    """Time step control.

    In fixed mode `dt` is used (shortened so the run lands on its end time);
    in adaptive mode the whistler-limited step is capped by dt_max.
    """
    mode: StepMode = StepMode.FIXED
    dt: float = 1e-3
    cfl: float = 0.5
    dt_max: float = 1e-2
    dt_min: float = 1e-10

    def __post_init__(self):
        if isinstance(self.mode, str):
            object.__setattr__(self, "mode", StepMode(self.mode))
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not 0 < self.cfl <= 1:
            raise ValueError(f"CFL constant must lie in (0, 1], got {self.cfl}")
        if not 0 < self.dt_min < self.dt_max:
            raise ValueError(f"need 0 < dt_min < dt_max, got {self.dt_min} and {self.dt_max}")


@dataclass(frozen=True, eq=False)
class DyadicFilterBank:
    """Littlewood-Paley multipliers phi_q tabulated on the lattice.

    multipliers[q + 1] holds phi_q for q = -1 .. q_max; lambda_q = 2^q / L.
    """
    grid: TorusGrid
    q_max: int
    multipliers: np.ndarray = field(repr=False)
    q_min: int = -1

    @property
    def shells(self) -> range:
        return range(self.q_min, self.q_max + 1)

    def wavenumber(self, q: float) -> float:
        """lambda_q = 2^q / L (infinite for the sentinel)."""
        if q == float("inf"):
            return float("inf")
        return 2.0 ** q / self.grid.length

    def multiplier(self, q: int) -> np.ndarray:
        if not self.q_min <= q <= self.q_max:
            raise ValueError(f"shell {q} outside the bank range [{self.q_min}, {self.q_max}]")
        return self.multipliers[q - self.q_min]

    def lowpass_multiplier(self, q: float) -> np.ndarray:
        """Sum of phi_p for p <= q; q may be the +inf sentinel (all ones)."""
        if q == float("inf"):
            return np.ones(self.grid.shape)
        if q < self.q_min:
            return np.zeros(self.grid.shape)
        top = min(int(q), self.q_max)
        return self.multipliers[: top - self.q_min + 1].sum(axis=0)

    def lowpass_support(self, q: float) -> np.ndarray:
        """Lattice points where the low-pass multiplier up to q is non-zero (|k| < 2^(q+1))."""
        if q == float("inf"):
            return np.ones(self.grid.shape, dtype=bool)
        if q < self.q_min:
            return np.zeros(self.grid.shape, dtype=bool)
        return self.grid.k_magnitude < 2.0 ** (int(q) + 1)
