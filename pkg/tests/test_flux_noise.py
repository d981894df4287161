"""
Tests de flujos, ruido y del estimador de no-degeneración
"""

import numpy as np
import pytest

from modules.flux_noise import (
    FLUX_DIMS,
    BoundedNoise,
    ConstantNoise,
    LinearNoise,
    check_geometry_compat,
    fv_face_fluxes,
    make_flux,
    make_noise,
    nondegeneracy_measure,
    nondegeneracy_report,
    regularization_gap,
    validate_flux,
    validate_noise,
)
from modules.spectral import TorusGrid


class TestPresets:
    """Construcción de flujos y ruidos por nombre"""

    def test_dims(self):
        for name, dim in FLUX_DIMS.items():
            assert make_flux(name).dim == dim

    def test_unknown_preset(self):
        with pytest.raises(ValueError, match="desconocido"):
            make_flux("kdv")
        with pytest.raises(ValueError, match="desconocido"):
            make_noise("noise-cubic")

    def test_unknown_parameter(self):
        with pytest.raises(ValueError, match="inválidos"):
            make_flux("burgers1d", viscosity=1.0)

    def test_unknown_profile(self):
        with pytest.raises(ValueError, match="Perfil desconocido"):
            make_flux("burgers1d", profile="cubic")

    def test_zero_profile(self, zero_flux):
        assert zero_flux.is_zero
        assert not zero_flux.x_dependent
        assert make_flux("stream2d-rough").x_dependent

    def test_direction_dimension_mismatch(self, burgers, grid2d):
        with pytest.raises(ValueError, match="dimensión"):
            burgers.direction_on(grid2d)


class TestFluxBounds:
    """Constantes de Lipschitz y de crecimiento"""

    def test_burgers_lipschitz_and_growth(self, burgers, grid1d):
        assert burgers.lipschitz_bound(grid1d) == pytest.approx(4.0)
        assert burgers.growth_bound(grid1d) == pytest.approx(1.6)

    def test_sup_abs_on(self, burgers, grid1d):
        d_sup, g_l2 = burgers.sup_abs_on(grid1d, 1.0)
        assert d_sup == pytest.approx(1.0)
        assert g_l2 == pytest.approx(0.25)

    def test_smooth_stream_components_match_exact(self, grid2d):
        flux = make_flux("stream2d-smooth")
        for spectral, exact in zip(flux.direction_on(grid2d), flux.direction.exact(grid2d)):
            np.testing.assert_allclose(spectral, exact, atol=1e-12)

    def test_burgers_values(self, burgers, grid1d):
        u = np.linspace(-1.0, 1.0, 32)
        (f,) = burgers.values(u, grid1d)
        np.testing.assert_allclose(f, 0.5 * u ** 2)


class TestGeometryCompat:
    """div_x f = 0 y residuo de Stokes"""

    @pytest.mark.parametrize("name,n", [
        ("burgers1d", 32), ("stream2d-smooth", 16), ("stream2d-rough", 16),
    ])
    def test_presets_pass(self, name, n, rng):
        flux = make_flux(name)
        grid = TorusGrid(FLUX_DIMS[name], n)
        validation = validate_flux(flux, grid, trials=10, rng=rng)
        assert validation.passed
        assert validation.geometry.trials == 10

    def test_regularized_rough_stays_divergence_free(self, grid2d, rng):
        flux = make_flux("stream2d-rough").regularize(2)
        report = check_geometry_compat(flux, grid2d, trials=5, rng=rng)
        assert report.max_divergence < 1e-10
        assert report.passed()

    def test_fv_faces_discretely_divergence_free(self):
        a1, a2 = fv_face_fluxes(make_flux("stream2d-rough"), 32)
        div = (a1 - np.roll(a1, 1, axis=0)) + (a2 - np.roll(a2, 1, axis=1))
        assert np.max(np.abs(div)) < 1e-11

    def test_report_to_dict(self, burgers, grid1d):
        data = check_geometry_compat(burgers, grid1d).to_dict()
        assert set(data) == {"max_divergence", "stokes_residual", "trials"}


class TestRegularization:
    """Mollifier gaussiano σ(k) = σ₀·2^{−k}"""

    def test_constant_direction_unchanged(self, burgers):
        regular = burgers.regularize(3)
        assert regular.direction == burgers.direction
        assert regular.level == 3

    def test_smooth_direction_unchanged(self):
        flux = make_flux("stream2d-smooth")
        assert flux.regularize(4).direction == flux.direction

    def test_rough_width(self):
        flux = make_flux("stream2d-rough")
        regular = flux.regularize(2)
        assert regular.direction.widths == (pytest.approx(flux.sigma0 / 4),)

    def test_negative_level_rejected(self, burgers):
        with pytest.raises(ValueError):
            burgers.regularize(-1)

    def test_gaussian_composition(self, grid2d):
        direction = make_flux("stream2d-rough").direction
        twice = direction.mollified(0.03).mollified(0.04)
        once = direction.mollified(0.05)
        np.testing.assert_allclose(twice.multiplier(grid2d), once.multiplier(grid2d), rtol=1e-12)

    def test_nonpositive_width_rejected(self):
        with pytest.raises(ValueError):
            make_flux("stream2d-rough").direction.mollified(0.0)

    def test_gap_shrinks_with_level(self):
        grid = TorusGrid(2, 64)
        flux = make_flux("stream2d-rough")
        assert regularization_gap(flux, 4, grid) < regularization_gap(flux, 0, grid)

    def test_gap_vanishes_for_smooth(self, grid2d):
        assert regularization_gap(make_flux("stream2d-smooth"), 3, grid2d) < 1e-10


class TestNoiseModels:
    """Modelos Φ y sus validadores"""

    def test_constant(self, grid1d):
        noise = ConstantNoise(0.3)
        validation = validate_noise(noise, grid1d)
        assert validation.passed
        assert validation.sup_phi_l2 == pytest.approx(0.3)
        assert validation.energy_constant == pytest.approx(0.045)

    def test_linear_is_unbounded(self, grid1d):
        validation = validate_noise(LinearNoise(0.2), grid1d)
        assert validation.passed
        assert np.isinf(validation.sup_phi_l2)
        assert validation.to_dict()["sup_phi_l2"] is None
        assert validation.sup_dphi_l2 == pytest.approx(0.2)

    def test_bounded(self, grid1d):
        noise = BoundedNoise(sigma=0.3, amplitude=0.1)
        assert validate_noise(noise, grid1d).passed
        assert noise.derivative(0.25, 0.0) == pytest.approx(0.3)
        assert noise.values(0.25, 0.0) == pytest.approx(0.1)

    def test_linear_values(self):
        u = np.array([-1.0, 0.5, 2.0])
        np.testing.assert_allclose(LinearNoise(0.2).values(0.0, u), 0.2 * u)

    def test_zero_flags(self):
        assert ConstantNoise(0.0).is_zero
        assert not LinearNoise(0.1).is_zero
        assert BoundedNoise(0.0, 0.0).is_zero


class TestNondegeneracy:
    """Medida de los conjuntos de nivel engrosados del símbolo"""

    def test_burgers_measure_scales_linearly(self, burgers):
        grid = TorusGrid(1, 8)
        wide = nondegeneracy_measure(burgers, grid, eta=0.05, samples=180, m_lambda=2001)
        narrow = nondegeneracy_measure(burgers, grid, eta=0.025, samples=180, m_lambda=2001)
        assert 0.4 < narrow / wide < 0.6

    def test_zero_eta_gives_zero(self, burgers):
        grid = TorusGrid(1, 8)
        assert nondegeneracy_measure(burgers, grid, eta=0.0, samples=90, m_lambda=401) == 0.0

    def test_unrestricted_sphere_is_degenerate(self, burgers):
        grid = TorusGrid(1, 8)
        full = nondegeneracy_measure(burgers, grid, eta=0.01, samples=90, m_lambda=401,
                                     min_xi_prime=0.0)
        assert full == pytest.approx(2.0)

    def test_linear_flux_flagged(self):
        flux = make_flux("burgers1d", profile="linear")
        report = nondegeneracy_report(flux, TorusGrid(1, 8), etas=(0.1, 0.05),
                                      samples=90, m_lambda=401)
        assert report.degenerate
        assert report.monotone
        assert not report.passed

    def test_burgers_report(self, burgers):
        report = nondegeneracy_report(burgers, TorusGrid(1, 8), etas=(0.1, 0.05, 0.025),
                                      samples=90, m_lambda=2001)
        assert report.monotone
        assert not report.degenerate
        assert report.slope == pytest.approx(1.0, abs=0.1)
        assert report.to_dict()["etas"] == [0.1, 0.05, 0.025]

    def test_invalid_inputs(self, burgers):
        grid = TorusGrid(1, 8)
        with pytest.raises(ValueError, match="Retícula"):
            nondegeneracy_measure(burgers, grid, m_lambda=1)
        with pytest.raises(ValueError, match="eta"):
            nondegeneracy_measure(burgers, grid, eta=-0.1)
