"""
Tests for the spectral core: transforms, derivatives, dealiasing, quadrature.
"""
import math

import numpy as np
import pytest

from emhd_lab.exceptions import FieldValueError, RangeError
from emhd_lab.models import ScalarField, TorusGrid, VectorField3
from emhd_lab.services import SpectralService
from tests.conftest import mode_field


def test_transform_roundtrip(grid64, rng):
    """Forward then inverse reproduces the samples to round-off."""
    samples = rng.standard_normal(grid64.shape)
    field = ScalarField.from_physical(grid64, samples)
    back = SpectralService.transform_roundtrip(field)
    assert np.max(np.abs(back.physical - samples)) <= 1e-12


def test_roundtrip_rejects_non_finite(grid32):
    samples = np.zeros(grid32.shape)
    samples[3, 4] = np.nan
    field = ScalarField(grid32, _physical=samples)
    with pytest.raises(FieldValueError):
        SpectralService.transform_roundtrip(field)


def test_mean_is_zero_mode(grid32):
    field = ScalarField.constant(grid32, 2.5)
    assert field.coefficient(0, 0) == pytest.approx(2.5)


@pytest.mark.parametrize("m", [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 1)])
def test_single_mode_derivatives(grid64, m):
    """Derivatives of sin(2 pi (2x + 3y)) match the symbolic values."""
    k1, k2 = 2, 3
    field = mode_field(grid64, k1, k2, kind="sin")
    x, y = grid64.coordinates
    theta = 2.0 * np.pi * (k1 * x + k2 * y)
    order = m[0] + m[1]
    factor = (2.0 * np.pi * k1) ** m[0] * (2.0 * np.pi * k2) ** m[1]
    # d^n/dtheta^n sin = sin(theta + n pi / 2)
    expected = factor * np.sin(theta + order * np.pi / 2.0)
    result = SpectralService.derivative(field, m).physical
    assert np.max(np.abs(result - expected)) <= 1e-12 * factor


def test_laplacian_of_mode(grid32):
    field = mode_field(grid32, 1, 2)
    expected = -(2.0 * np.pi) ** 2 * 5 * field.physical
    assert np.allclose(SpectralService.laplacian(field).physical, expected, rtol=0, atol=1e-10)


def test_odd_derivative_kills_nyquist(grid32):
    """The Nyquist column has no conjugate partner; odd derivatives drop it."""
    x, _ = grid32.coordinates
    field = ScalarField.from_physical(grid32, np.cos(np.pi * grid32.n * x))
    assert np.max(np.abs(SpectralService.derivative(field, (1, 0)).physical)) == 0.0
    second = SpectralService.derivative(field, (2, 0))
    assert np.max(np.abs(second.physical)) > 0.0


def test_derivative_order_limit(grid32):
    with pytest.raises(ValueError):
        SpectralService.derivative_multiplier(grid32, (3, 2))
    with pytest.raises(ValueError):
        SpectralService.derivative_multiplier(grid32, (-1, 0))


def test_dealias_zeroes_top_third(grid32, rng):
    field = ScalarField.from_physical(grid32, rng.standard_normal(grid32.shape))
    clean = SpectralService.dealias(field)
    outside = ~grid32.dealias_mask
    assert np.all(clean.spectral[outside] == 0)
    assert np.allclose(clean.spectral[~outside], field.spectral[~outside])


def test_multiply_exact_for_low_modes(grid32):
    """cos(2 pi x)^2 = 1/2 + cos(4 pi x)/2."""
    u = mode_field(grid32, 1, 0)
    product = SpectralService.multiply(u, u)
    x, _ = grid32.coordinates
    assert np.max(np.abs(product.physical - (0.5 + 0.5 * np.cos(4 * np.pi * x)))) <= 1e-13


def test_curl_of_gradient_free_field(grid32):
    """curl(a_y, -a_x, 0) has only the z component -Lap a."""
    a = mode_field(grid32, 1, 1) + mode_field(grid32, 2, -1, kind="sin")
    field = VectorField3(SpectralService.derivative(a, (0, 1)),
                         -SpectralService.derivative(a, (1, 0)),
                         ScalarField.zeros(grid32))
    curl = SpectralService.curl(field)
    assert np.max(np.abs(curl.b1.physical)) <= 1e-12
    assert np.max(np.abs(curl.b2.physical)) <= 1e-12
    expected = -SpectralService.laplacian(a).physical
    assert np.max(np.abs(curl.b3.physical - expected)) <= 1e-9


def test_cross_product_of_unit_vectors(grid32):
    one, zero = ScalarField.constant(grid32, 1.0), ScalarField.zeros(grid32)
    ex = VectorField3(one, zero, zero)
    ey = VectorField3(zero, one, zero)
    ez = SpectralService.cross(ex, ey)
    assert np.allclose(ez.b3.physical, 1.0)
    assert np.allclose(ez.b1.physical, 0.0)


class TestLebesgueNorms:
    def test_constant_field(self, grid32):
        field = ScalarField.constant(grid32, -3.0)
        for r in (1.0, 2.0, 3.0, 7.5, math.inf):
            assert SpectralService.lebesgue_norm(field, r) == pytest.approx(3.0, rel=1e-13)

    def test_period_enters_through_area(self):
        grid = TorusGrid(32, 2.0)
        field = ScalarField.constant(grid, 1.0)
        assert SpectralService.lebesgue_norm(field, 2.0) == pytest.approx(2.0)
        assert SpectralService.lebesgue_norm(field, 4.0) == pytest.approx(4.0 ** 0.25)

    def test_cosine_l2_and_sup(self, grid32):
        field = mode_field(grid32, 2, 1)
        assert SpectralService.lebesgue_norm(field, 2.0) == pytest.approx(math.sqrt(0.5), rel=1e-13)
        assert SpectralService.lebesgue_norm(field, math.inf) == pytest.approx(1.0, rel=1e-13)
        assert SpectralService.parseval_norm(field) == pytest.approx(math.sqrt(0.5), rel=1e-13)

    def test_oversampled_l2_agrees(self, grid32, rng):
        field = SpectralService.random_band_field(grid32, rng, 5)
        plain = SpectralService.lebesgue_norm(field, 2.0)
        fine = SpectralService.lebesgue_norm(field, 2.0, oversample=3)
        assert fine == pytest.approx(plain, rel=1e-12)

    def test_parseval_on_random_draws(self, grid64, rng):
        """Grid quadrature and the coefficient sum agree for band-limited data"""
        for kmax in (1, 5, 13, grid64.cutoff):
            field = SpectralService.random_band_field(grid64, rng, kmax, exclude_mean=False)
            quadrature = SpectralService.lebesgue_norm(field, 2.0)
            assert quadrature == pytest.approx(SpectralService.parseval_norm(field), rel=1e-12)

    def test_large_exponent_does_not_overflow(self, grid32):
        field = mode_field(grid32, 1, 0, amplitude=1e200)
        value = SpectralService.lebesgue_norm(field, 50.0)
        assert math.isfinite(value) and 0 < value <= 1e200

    def test_rejects_exponent_below_one(self, grid32):
        with pytest.raises(RangeError):
            SpectralService.lebesgue_norm(ScalarField.zeros(grid32), 0.5)

    def test_vector_norm_uses_euclidean_magnitude(self, grid32):
        three = ScalarField.constant(grid32, 3.0)
        four = ScalarField.constant(grid32, 4.0)
        assert SpectralService.vector_lebesgue_norm([three, four], 3.0) == pytest.approx(5.0)


def test_physical_fields_are_hermitian(grid32, rng):
    field = ScalarField.from_physical(grid32, rng.standard_normal(grid32.shape))
    assert SpectralService.hermitian_defect(field) <= 1e-15


def test_random_band_field_is_resolution_independent():
    """Same seed, same function on every grid resolving the band."""
    coarse = SpectralService.random_band_field(TorusGrid(32), np.random.default_rng(5), 6)
    fine = SpectralService.random_band_field(TorusGrid(64), np.random.default_rng(5), 6)
    for k in [(0, 1), (3, -2), (-6, 6), (5, 0)]:
        assert coarse.coefficient(*k) == pytest.approx(fine.coefficient(*k), abs=1e-15)
    assert coarse.coefficient(0, 0) == 0


def test_random_band_field_rejects_band_above_cutoff(grid32, rng):
    with pytest.raises(RangeError):
        SpectralService.random_band_field(grid32, rng, grid32.cutoff + 1)
