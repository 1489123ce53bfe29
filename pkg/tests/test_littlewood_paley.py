"""
Tests for the dyadic filter bank, norms, Bony decomposition and commutators.
"""
import math

import numpy as np
import pytest

from emhd_lab.exceptions import RangeError
from emhd_lab.models import ScalarField, TorusGrid, VectorField3
from emhd_lab.services import LittlewoodPaleyService, SpectralService, chi, phi, smooth_step
from emhd_lab.services.littlewood_paley import top_shell
from tests.conftest import mode_field

lp = LittlewoodPaleyService


def test_smooth_step_endpoints():
    values = smooth_step(np.array([-1.0, 0.0, 0.5, 1.0, 2.0]))
    assert values.tolist() == pytest.approx([0.0, 0.0, 0.5, 1.0, 1.0])


def test_chi_plateau_and_support():
    assert chi(0.0) == 1.0
    assert chi(0.75) == 1.0
    assert chi(1.0) == 0.0
    assert chi(3.0) == 0.0
    middle = float(chi(0.875))
    assert 0.0 < middle < 1.0
    assert float(phi(1.2)) == pytest.approx(1.0)
    assert float(phi(0.5)) == 0.0


@pytest.mark.parametrize("n", [64, 128])
def test_partition_of_unity(n):
    """Sum of all multipliers is 1 on every retained lattice point."""
    grid = TorusGrid(n)
    bank = lp.build_filter_bank(grid)
    total = bank.multipliers.sum(axis=0)
    assert np.max(np.abs(total[grid.dealias_mask] - 1.0)) <= 1e-12


def test_top_shell_covers_the_diagonal(grid64):
    # cutoff 21, corner sqrt(2) * 21 = 29.7 <= 0.75 * 2^6
    assert top_shell(grid64) == 5
    assert lp.build_filter_bank(grid64).shells == range(-1, 6)


def test_lambda_q_scales_with_period():
    bank = lp.build_filter_bank(TorusGrid(32, 2.0))
    assert bank.wavenumber(3) == pytest.approx(4.0)
    assert bank.wavenumber(-1) == pytest.approx(0.25)
    assert math.isinf(bank.wavenumber(math.inf))


def test_projections_sum_to_the_field(grid64, bank64, rng):
    field = SpectralService.random_band_field(grid64, rng, grid64.cutoff, exclude_mean=False)
    total = ScalarField.zeros(grid64)
    for part in lp.projections(field, bank64).values():
        total = total + part
    assert np.max(np.abs(total.physical - field.physical)) <= 1e-12 * np.max(np.abs(field.physical))


def test_project_outside_bank_is_zero(grid32, bank32):
    field = mode_field(grid32, 1, 0)
    assert not np.any(lp.project(field, bank32.q_max + 1, bank32).spectral)
    assert not np.any(lp.project(field, -2, bank32).spectral)


def test_distant_shells_are_orthogonal(grid64, bank64, rng):
    """Delta_p Delta_q u = 0 whenever |p - q| >= 2"""
    field = SpectralService.random_band_field(grid64, rng, grid64.cutoff, exclude_mean=False)
    scale = np.max(np.abs(field.physical))
    for q in bank64.shells:
        shell = lp.project(field, q, bank64)
        for p in bank64.shells:
            if abs(p - q) >= 2:
                both = lp.project(shell, p, bank64)
                assert np.max(np.abs(both.physical)) <= 1e-12 * scale


def test_shell_sum_is_equivalent_to_l2(grid64, bank64, rng):
    """The s = 0 shell sum stays within a factor sqrt(3) of the L^2 norm"""
    for _ in range(100):
        kmax = int(rng.integers(1, grid64.cutoff + 1))
        field = SpectralService.random_band_field(grid64, rng, kmax, exclude_mean=False)
        ratio = lp.sobolev_norm(field, 0.0, bank64) / SpectralService.parseval_norm(field)
        assert 1.0 / math.sqrt(3.0) <= ratio <= math.sqrt(3.0)


def test_lowpass_sentinel_is_identity(grid32, bank32, rng):
    field = SpectralService.random_band_field(grid32, rng, 8)
    assert np.allclose(lp.lowpass(field, math.inf, bank32).spectral, field.spectral)
    assert not np.any(lp.lowpass(field, -2, bank32).spectral)


def test_single_shell_mode(grid32, bank32):
    """|k| = 4 sits where phi_2 = 1 and every other multiplier vanishes."""
    field = mode_field(grid32, 4, 0)
    assert np.allclose(lp.project(field, 2, bank32).physical, field.physical)
    for q in (1, 3):
        assert not np.any(np.abs(lp.project(field, q, bank32).spectral) > 1e-15)


def test_sobolev_norm_of_single_shell_mode(grid32, bank32):
    field = mode_field(grid32, 4, 0)
    for s in (-1.0, 0.0, 0.5, 2.0):
        assert lp.sobolev_norm(field, s, bank32) == pytest.approx(4.0 ** s * math.sqrt(0.5), rel=1e-12)


def test_sobolev_exponent_range(grid32, bank32):
    with pytest.raises(RangeError):
        lp.sobolev_norm(ScalarField.zeros(grid32), 5.0, bank32)


def test_besov_norm_of_single_shell_mode(grid32, bank32):
    field = mode_field(grid32, 4, 0, amplitude=2.0)
    assert lp.besov_b1inf_norm(field, bank32) == pytest.approx(8.0, rel=1e-12)


def test_vector_shell_spectrum_uses_magnitude(grid32, bank32):
    c = mode_field(grid32, 4, 0)
    s = mode_field(grid32, 4, 0, kind="sin")
    spectrum = lp.vector_shell_spectrum([c, s], 3.0, bank32, source="test")
    index = spectrum.shells.index(2)
    # |(cos, sin)| = 1 everywhere
    assert spectrum.lr[index] == pytest.approx(1.0, rel=1e-12)
    assert spectrum.linf[index] == pytest.approx(1.0, rel=1e-12)
    assert spectrum.populated() == [2]


def test_build_filter_bank_is_read_only(bank32):
    with pytest.raises(ValueError):
        bank32.multipliers[0, 0, 0] = 2.0


class TestBonyDecomposition:
    def test_cosine_square(self, grid64, bank64):
        """P1 + P2 + P3 reproduces Delta_q(cos^2(2 pi x)) on every shell."""
        u = mode_field(grid64, 1, 0)
        product = SpectralService.multiply(u, u)
        for q in bank64.shells:
            p1, p2, p3 = lp.bony_decompose(u, u, q, bank64)
            direct = lp.project(product, q, bank64)
            assert np.max(np.abs((p1 + p2 + p3 - direct).physical)) <= 1e-13

    def test_random_pairs(self, grid64, bank64, rng):
        for _ in range(10):
            u = SpectralService.random_band_field(grid64, rng, grid64.cutoff, exclude_mean=False)
            v = SpectralService.random_band_field(grid64, rng, grid64.cutoff, exclude_mean=False)
            product = SpectralService.multiply(u, v)
            scale = SpectralService.lebesgue_norm(product, 2.0)
            for q in bank64.shells:
                p1, p2, p3 = lp.bony_decompose(u, v, q, bank64)
                residual = p1 + p2 + p3 - lp.project(product, q, bank64)
                assert SpectralService.lebesgue_norm(residual, 2.0) <= 1e-10 * scale


class TestCommutators:
    def test_constant_coefficients_commute(self, grid32, bank32, rng):
        """A constant transport velocity commutes with every projection."""
        one = ScalarField.constant(grid32, 1.0)
        v = SpectralService.random_band_field(grid32, rng, 8)
        for q, p in [(1, 2), (2, 3), (3, 3)]:
            comm = lp.commutator_transport((one, one), v, q, p, bank32)
            assert np.max(np.abs(comm.physical)) <= 1e-10

    def test_curl_commutator_with_constant_field(self, grid32, bank32, rng):
        u = VectorField3(ScalarField.constant(grid32, 1.0), ScalarField.constant(grid32, -2.0),
                         ScalarField.constant(grid32, 0.5))
        v = VectorField3(*(SpectralService.random_band_field(grid32, rng, 8) for _ in range(3)))
        scale = max(np.max(np.abs(c.physical)) for c in SpectralService.curl(v))
        for q in bank32.shells:
            comm = lp.commutator_curl(u, v, q, bank32)
            assert max(np.max(np.abs(c.physical)) for c in comm) <= 1e-12 * scale

    def test_curl_commutator_with_zero_field(self, grid32, bank32, rng):
        v = VectorField3(*(SpectralService.random_band_field(grid32, rng, 8) for _ in range(3)))
        comm = lp.commutator_curl(VectorField3.zeros(grid32), v, 2, bank32)
        assert all(not np.any(c.spectral) for c in comm)

    def test_curl_commutator_of_curl_free_field(self, grid32, bank32, rng):
        """v = (dx f, dy f, 0) has no curl, and neither has any shell of it"""
        u = VectorField3(*(SpectralService.random_band_field(grid32, rng, 4) for _ in range(3)))
        f_x, f_y = SpectralService.gradient(mode_field(grid32, 3, 1))
        v = VectorField3(f_x, f_y, ScalarField.zeros(grid32))
        scale = max(np.max(np.abs(c.physical)) for c in u) * np.max(np.abs(f_x.physical))
        for q in bank32.shells:
            comm = lp.commutator_curl(u, v, q, bank32)
            assert max(np.max(np.abs(c.physical)) for c in comm) <= 1e-12 * scale

    def test_small_ensemble_is_finite(self, grid32):
        ensemble = lp.commutator_ensemble(grid32, q=2, p=3, draws=3, seed=1, kmax=4)
        assert ensemble.transport.shape == (3,)
        for values in (ensemble.transport, ensemble.curl, ensemble.curl_integral):
            assert np.all(np.isfinite(values)) and np.all(values >= 0)
        assert set(ensemble.summary()) == {"transport_max", "curl_max", "curl_integral_max"}

    @pytest.mark.slow
    def test_ensemble_stable_across_resolution(self):
        coarse = lp.commutator_ensemble(TorusGrid(64), draws=50, seed=11).summary()
        fine = lp.commutator_ensemble(TorusGrid(128), draws=50, seed=11).summary()
        for key, value in coarse.items():
            assert math.isfinite(value) and value > 0
            assert 0.5 <= fine[key] / value <= 2.0
