"""
Tests del módulo espectral del toro plano

Valida:
- Geometría de la malla y autovalores de Λ²
- Transformadas directa/inversa, hermiticidad y Parseval
- Normas de Sobolev
- Gradiente, laplaciano y regla de 2/3
"""

import numpy as np
import pytest

from modules.spectral import TWO_PI, SpectralField, TorusGrid


class TestTorusGrid:
    """Construcción y geometría de la malla"""

    def test_rejects_odd_or_small_n(self):
        with pytest.raises(ValueError, match="par"):
            TorusGrid(1, 5)
        with pytest.raises(ValueError):
            TorusGrid(1, 2)

    def test_rejects_unsupported_dim(self):
        with pytest.raises(ValueError, match="dim"):
            TorusGrid(3, 8)

    def test_quadrature_of_one_is_volume(self, grid1d, grid2d):
        for grid in (grid1d, grid2d):
            assert grid.quadrature(np.ones(grid.shape)) == pytest.approx(1.0, rel=1e-14)

    def test_lambda_sq_values(self, grid1d):
        assert grid1d.lambda_sq(0) == 1.0
        assert grid1d.lambda_sq(1) == pytest.approx(1.0 + 4.0 * np.pi ** 2)
        assert grid1d.lambda_sq(1) == pytest.approx(40.4784, abs=1e-4)
        grid = TorusGrid(2, 16)
        assert grid.lambda_sq((3, 4)) == pytest.approx(987.96, abs=1e-2)

    def test_lambda_sq_equals_one_only_at_zero(self, grid2d):
        assert np.count_nonzero(grid2d.lambda_sq_array == 1.0) == 1
        assert np.all(grid2d.lambda_sq_array >= 1.0)

    def test_index_of_rejects_out_of_range(self, grid1d):
        with pytest.raises(ValueError):
            grid1d.index_of(17)
        with pytest.raises(ValueError):
            grid1d.index_of((1, 1))

    def test_dealias_cutoff(self):
        assert TorusGrid(1, 64).dealias_cutoff == 21
        mask = TorusGrid(1, 64).dealias_mask
        assert np.count_nonzero(mask) == 2 * 21 + 1


class TestTransforms:
    """Transformadas, hermiticidad y Parseval"""

    def test_constant_field(self, grid2d):
        field = grid2d.forward_transform(np.full(grid2d.shape, 2.5))
        assert field.coeff((0, 0)) == pytest.approx(2.5)
        others = np.delete(field.coeffs.reshape(-1), 0)
        assert np.max(np.abs(others)) < 1e-14

    def test_cosine_coefficients(self, grid1d):
        field = SpectralField.from_function(grid1d, lambda x: np.cos(TWO_PI * x))
        assert field.coeff(1) == pytest.approx(0.5, abs=1e-14)
        assert field.coeff(-1) == pytest.approx(0.5, abs=1e-14)
        rest = field.coeffs.copy()
        rest[[1, -1]] = 0.0
        assert np.max(np.abs(rest)) < 1e-14

    def test_round_trip(self, grid1d, grid2d, rng):
        for grid in (grid1d, grid2d):
            samples = rng.standard_normal(grid.shape)
            back = grid.inverse_transform(grid.forward_transform(samples))
            assert np.max(np.abs(back - samples)) < 1e-12

    def test_flat_samples_are_reshaped(self, grid2d, rng):
        samples = rng.standard_normal(grid2d.num_points)
        field = grid2d.forward_transform(samples)
        np.testing.assert_allclose(field.to_physical().reshape(-1), samples, atol=1e-12)

    def test_size_mismatch_rejected(self, grid1d):
        with pytest.raises(ValueError, match="muestras"):
            grid1d.forward_transform(np.zeros(31))

    def test_forward_is_hermitian(self, grid2d, rng):
        field = grid2d.forward_transform(rng.standard_normal(grid2d.shape))
        assert field.hermitian
        assert field.hermitian_defect() < 1e-14

    def test_parseval(self, grid1d, grid2d, rng):
        for grid in (grid1d, grid2d):
            samples = rng.standard_normal(grid.shape)
            field = grid.forward_transform(samples)
            assert field.l2_norm_sq() == pytest.approx(grid.quadrature(samples ** 2), rel=1e-12)

    def test_field_is_immutable(self, grid1d):
        field = SpectralField.zeros(grid1d)
        with pytest.raises(ValueError):
            field.coeffs[0] = 1.0

    def test_field_from_other_grid_rejected(self, grid1d):
        other = TorusGrid(1, 16)
        with pytest.raises(ValueError, match="malla"):
            grid1d.inverse_transform(SpectralField.zeros(other))


class TestSobolevNorms:
    """Normas ‖u‖²_{H^s} = Σ λ_k^{2s}|û_k|²"""

    @pytest.mark.parametrize("s", [-1.0, 0.0, 0.5, 2.0])
    def test_constant_field(self, grid1d, s):
        field = grid1d.forward_transform(np.full(grid1d.shape, 3.0))
        assert field.sobolev_norm_sq(s) == pytest.approx(9.0, rel=1e-14)

    def test_cosine_h1(self, grid1d):
        field = SpectralField.from_function(grid1d, lambda x: np.cos(TWO_PI * x))
        assert field.sobolev_norm_sq(1) == pytest.approx((1 + 4 * np.pi ** 2) / 2, rel=1e-12)

    def test_cosine_h_minus_one(self, grid1d):
        field = SpectralField.from_function(grid1d, lambda x: np.cos(TWO_PI * x))
        expected = 1.0 / (2.0 * (1 + 4 * np.pi ** 2))
        assert field.sobolev_norm_sq(-1) == pytest.approx(expected, rel=1e-12)

    def test_zero_index_is_l2(self, grid2d, rng):
        field = grid2d.random_field(rng)
        assert field.sobolev_norm_sq(0) == pytest.approx(field.l2_norm_sq(), rel=1e-14)

    def test_monotone_in_index_without_mean(self, grid1d, rng):
        coeffs = grid1d.random_field(rng, amplitude=0.8).coeffs.copy()
        coeffs[0] = 0.0
        field = SpectralField(grid1d, coeffs)
        norms = [field.sobolev_norm_sq(s) for s in (-1, 0, 1, 2)]
        assert all(b >= a for a, b in zip(norms, norms[1:]))

    def test_batch_matches_single(self, grid1d, rng):
        fields = [grid1d.random_field(rng) for _ in range(3)]
        batch = grid1d.sobolev_norm_sq_batch(np.stack([f.coeffs for f in fields]), 1)
        np.testing.assert_allclose(batch, [f.sobolev_norm_sq(1) for f in fields], rtol=1e-14)


class TestOperators:
    """Gradiente, laplaciano, truncamiento y dealiasing"""

    def test_gradient_of_constant(self, grid2d):
        field = grid2d.forward_transform(np.full(grid2d.shape, 1.7))
        for component in grid2d.gradient(field):
            assert np.max(np.abs(component.coeffs)) < 1e-12

    def test_laplacian_of_sine(self, grid1d):
        field = SpectralField.from_function(grid1d, lambda x: np.sin(TWO_PI * x))
        lap = grid1d.laplacian(field).to_physical()
        expected = -4 * np.pi ** 2 * grid1d.sample(lambda x: np.sin(TWO_PI * x))
        np.testing.assert_allclose(lap, expected, atol=1e-11)

    def test_laplacian_eigenrelation(self, grid2d):
        k = (2, -3)
        mode = np.zeros(grid2d.shape, dtype=complex)
        mode[grid2d.index_of(k)] = 1.0
        lap = grid2d.laplacian(SpectralField(grid2d, mode))
        assert lap.coeff(k) == pytest.approx(1.0 - grid2d.lambda_sq(k), rel=1e-14)

    def test_divergence_of_gradient_is_laplacian(self, grid2d, rng):
        field = grid2d.random_field(rng)
        div = grid2d.divergence(grid2d.gradient(field))
        lap = grid2d.laplacian(field)
        scale = np.max(np.abs(lap.coeffs))
        np.testing.assert_allclose(div.coeffs, lap.coeffs, atol=1e-12 * scale)

    def test_nyquist_mode_has_zero_derivative(self, grid1d):
        field = SpectralField.from_function(grid1d, lambda x: np.cos(np.pi * 32 * x))
        (grad,) = grid1d.gradient(field)
        assert np.max(np.abs(grad.coeffs)) < 1e-12

    def test_laplacian_self_adjoint(self, grid2d, rng):
        u = grid2d.random_field(rng)
        v = grid2d.random_field(rng)
        left = grid2d.quadrature(grid2d.laplacian(u).to_physical() * v.to_physical())
        right = grid2d.quadrature(u.to_physical() * grid2d.laplacian(v).to_physical())
        assert left == pytest.approx(right, rel=1e-10)

    def test_projection_does_not_change_low_modes(self, grid1d, rng):
        field = grid1d.forward_transform(rng.standard_normal(grid1d.shape))
        truncated = grid1d.truncate(field, 5)
        for k in range(-5, 6):
            assert grid1d.inner_with_mode(truncated, k) == pytest.approx(
                grid1d.inner_with_mode(field, k), abs=1e-14)
            assert truncated.coeff(k) == field.coeff(k)
        assert truncated.coeff(6) == 0.0

    def test_dealias_removes_high_modes(self, grid1d, rng):
        field = grid1d.dealias(grid1d.forward_transform(rng.standard_normal(grid1d.shape)))
        k = np.abs(grid1d.wavenumbers[0])
        assert np.all(field.coeffs[k > grid1d.dealias_cutoff] == 0.0)

    def test_random_field_band_and_amplitude(self, grid2d, rng):
        field = grid2d.random_field(rng, kmax=2, amplitude=0.5)
        assert field.l2_norm_sq() == pytest.approx(0.25, rel=1e-12)
        k1, k2 = grid2d.wavenumbers
        outside = (np.abs(k1) > 2) | (np.abs(k2) > 2)
        assert np.all(np.broadcast_to(field.coeffs, grid2d.shape)[outside] == 0.0)
        assert field.hermitian
