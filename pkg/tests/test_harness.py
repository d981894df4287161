"""
Tests del arnés de experimentos

Valida:
- Datos iniciales y perturbaciones
- Ensembles de energía y cotas C₀, C̃₀, C̄₀
- Estabilidad con ruido acoplado
- Estudios de convergencia en dt
- Límite singular (modo reference y self-convergence)
- Estudio cinético y reportes deterministas
"""

import json

import numpy as np
import pandas as pd
import pytest

from modules.flux_noise import ConstantNoise, LinearNoise, make_flux
from modules.galerkin_solver import SolverConfig
from modules.harness import (
    InitialCondition,
    LimitLevel,
    additive_noise_l2,
    bound_c0,
    bound_c0_bar,
    build_initial,
    build_report,
    initial_energy,
    kinetic_compactness,
    kinetic_identity_check,
    ladder,
    limit_study,
    load_report,
    mean_se,
    perturbation,
    run_ensemble,
    sanitize,
    stability_experiment,
    stability_sweep,
    strong_convergence_study,
    translation_study,
    validate_levels,
    velocity_gap,
    weak_residual_study,
    write_csv,
    write_report,
)
from modules.harness.ensemble import within_bound


@pytest.fixture
def sine16():
    return build_initial(InitialCondition("sine"), SolverConfig(n_per_axis=16).grid)


class TestInitialData:
    """Construcción de u₀"""

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="desconocido"):
            InitialCondition("gaussian")

    def test_sine(self, grid1d):
        u0 = build_initial(InitialCondition("sine", amplitude=2.0), grid1d)
        assert u0.coeff(1) == pytest.approx(-1j, abs=1e-14)
        assert u0.l2_norm_sq() == pytest.approx(2.0, rel=1e-12)

    def test_riemann_is_projected(self, grid1d):
        u0 = build_initial(InitialCondition("riemann", left=1.0, right=0.0, x0=0.5), grid1d)
        assert u0.coeff(0).real == pytest.approx(0.5)
        assert u0.coeff(grid1d.dealias_cutoff + 1) == 0.0
        assert u0.hermitian

    def test_random_with_offset(self, grid1d):
        ic = InitialCondition("random", amplitude=0.5, offset=0.2, seed=3, kmax=4)
        u0 = build_initial(ic, grid1d)
        assert u0.coeff(0).real == pytest.approx(0.2 + build_initial(
            InitialCondition("random", amplitude=0.5, seed=3, kmax=4), grid1d).coeff(0).real)
        assert u0.coeff(5) == 0.0
        np.testing.assert_array_equal(u0.coeffs, build_initial(ic, grid1d).coeffs)

    def test_product_in_2d(self, grid2d):
        u0 = build_initial(InitialCondition("product", amplitude=1.0), grid2d)
        assert u0.l2_norm_sq() == pytest.approx(0.25, rel=1e-12)

    def test_perturbation_norm(self, grid1d):
        w = perturbation(grid1d, 1e-3, seed=7)
        assert w.l2_norm_sq() == pytest.approx(1e-6, rel=1e-10)

    def test_dict_roundtrip(self):
        ic = InitialCondition("riemann", left=-1.0, right=1.0, x0=0.25)
        assert InitialCondition.from_dict(ic.to_dict()) == ic


class TestStatistics:
    """Media, error estándar y cotas analíticas"""

    def test_mean_se(self):
        mean, se = mean_se(np.array([1.0, 2.0, 3.0]))
        assert mean == pytest.approx(2.0)
        assert se == pytest.approx(1.0 / np.sqrt(3.0))

    def test_single_member_has_no_se(self):
        mean, se = mean_se(np.array([[4.0, 5.0]]))
        np.testing.assert_array_equal(mean, [4.0, 5.0])
        assert se is None

    def test_within_bound(self):
        assert within_bound(1.0, 0.1, 0.8, se_factor=3.0)
        assert not within_bound(1.0, 0.1, 0.7, se_factor=3.0)
        assert not within_bound(1.0, None, 0.99)

    def test_c0_at_origin(self):
        assert bound_c0(0.0, 0.3, 1.7) == pytest.approx(1.7)
        np.testing.assert_allclose(bound_c0(np.array([0.0, 2.0]), 0.0, 1.7), 1.7)
        assert bound_c0_bar(0.0, 0.0, 0.5) == pytest.approx(12 * 0.25)

    def test_initial_energy_of_cosine(self, grid1d):
        u0 = build_initial(InitialCondition("cosine"), grid1d)
        delta = 0.01
        expected = 0.25 + 0.25 * delta * 4 * np.pi ** 2
        assert initial_energy(u0, delta) == pytest.approx(expected, rel=1e-12)

    def test_additive_noise_from_zero(self, small_config):
        u0 = build_initial(InitialCondition("zero"), small_config.grid)
        assert additive_noise_l2(u0, small_config, 0.3, 0.5) == pytest.approx(0.045)


class TestEnergyEnsemble:
    """Ensembles Monte-Carlo y cotas de energía"""

    def test_zero_forcing_passes(self, small_config, zero_flux, no_noise, sine16):
        report = run_ensemble(small_config, zero_flux, no_noise, sine16, n_paths=3, seed0=0,
                              snapshot_every=2)
        assert report.passed
        assert report.seeds == [0, 1, 2]
        assert report.stats["energy_lhs"][-1] == pytest.approx(report.constants["E0"], rel=1e-10)
        frame = report.to_frame()
        assert {"t", "l2_sq_mean", "l2_sq_se", "C0", "C0_tilde", "C0_bar"} <= set(frame.columns)
        assert len(frame) == 6

    def test_single_path_has_null_errors(self, small_config, burgers, linear_noise, sine16):
        report = run_ensemble(small_config, burgers, linear_noise, sine16, n_paths=1, seed0=0)
        assert report.errors["l2_sq"] is None
        assert report.per_time_series()[0]["l2_sq_se"] is None

    def test_tiny_override_fails(self, small_config, burgers, linear_noise, sine16):
        report = run_ensemble(small_config, burgers, linear_noise, sine16, n_paths=4, seed0=0,
                              c0_override=1e-6)
        assert not report.pass_flags["energy_bound"]
        assert not report.passed

    def test_burgers_linear_noise_passes(self, small_config, burgers, linear_noise, sine16):
        report = run_ensemble(small_config, burgers, linear_noise, sine16, n_paths=16, seed0=5)
        assert report.passed
        assert not report.aborted

    def test_additive_noise_identity(self, zero_flux, sine16):
        config = SolverConfig(n_per_axis=16, dt=1e-2, T=0.5)
        sigma = 0.3
        report = run_ensemble(config, zero_flux, ConstantNoise(sigma), sine16, n_paths=400,
                              seed0=100, se_factor=4.0)
        expected = additive_noise_l2(sine16, config, sigma, config.T)
        mean = report.stats["l2_sq"][-1]
        se = report.errors["l2_sq"][-1]
        assert abs(mean - expected) <= 4 * se
        block = report.additive_identity
        assert block["expected"] == pytest.approx(expected, rel=1e-12)
        assert block["mean"] == pytest.approx(mean, rel=1e-12)
        assert block["se"] == pytest.approx(se, rel=1e-12)
        assert report.pass_flags["additive_identity"] is True

    def test_additive_identity_exact_without_noise(self, zero_flux, sine16):
        """Con σ₀ = 0 la identidad se reduce al decaimiento lineal exacto"""
        config = SolverConfig(n_per_axis=16, dt=1e-2, T=0.5)
        report = run_ensemble(config, zero_flux, ConstantNoise(0.0), sine16, n_paths=2, seed0=0)
        assert report.pass_flags["additive_identity"] is True
        assert report.additive_identity["mean"] == pytest.approx(
            additive_noise_l2(sine16, config, 0.0, config.T), rel=1e-10)

    def test_additive_identity_only_for_additive_noise(self, small_config, burgers,
                                                      linear_noise, sine16):
        report = run_ensemble(small_config, burgers, linear_noise, sine16, n_paths=2, seed0=0)
        assert "additive_identity" not in report.pass_flags
        assert report.additive_identity is None

    def test_independent_of_worker_count(self, small_config, burgers, linear_noise, sine16):
        serial = run_ensemble(small_config, burgers, linear_noise, sine16, n_paths=6, seed0=0,
                              workers=1, chunk_size=2)
        pooled = run_ensemble(small_config, burgers, linear_noise, sine16, n_paths=6, seed0=0,
                              workers=2, chunk_size=2)
        for name, values in serial.stats.items():
            np.testing.assert_array_equal(values, pooled.stats[name])


class TestStability:
    """E sup||u − v||² / ||u₀ − v₀||² con ruido acoplado"""

    def test_linear_heat_contracts(self, small_config, zero_flux, no_noise, sine16):
        v0 = sine16 + perturbation(small_config.grid, 1e-2)
        result = stability_experiment(small_config, zero_flux, no_noise, sine16, v0,
                                      n_paths=2, seed0=0)
        assert result.ratio == pytest.approx(1.0, rel=1e-10)

    def test_identical_initial_data(self, small_config, burgers, linear_noise, sine16):
        result = stability_experiment(small_config, burgers, linear_noise, sine16, sine16,
                                      n_paths=2, seed0=0)
        assert result.identical_initial_data
        assert result.ratio == 0.0

    def test_burgers_ratio_is_finite(self, small_config, burgers, linear_noise, sine16):
        v0 = sine16 + perturbation(small_config.grid, 1e-2)
        result = stability_experiment(small_config, burgers, linear_noise, sine16, v0,
                                      n_paths=4, seed0=0, chunk_size=2)
        assert np.isfinite(result.ratio)
        assert result.ratio >= 1.0 - 1e-12
        assert result.se is not None

    def test_linear_sweep_is_flat(self, small_config, zero_flux, sine16):
        direction = perturbation(small_config.grid, 1.0)
        sweep = stability_sweep(small_config, zero_flux, LinearNoise(0.2), sine16, direction,
                                amplitudes=(1e-1, 1e-2, 1e-3), n_paths=4, seed0=0)
        assert sweep["passed"]
        assert sweep["variation"] == pytest.approx(1.0, rel=1e-6)


class TestConvergence:
    """Orden fuerte y residuo débil"""

    def test_weak_residual_study(self, small_config, burgers, linear_noise, sine16):
        report = weak_residual_study(small_config, burgers, linear_noise, sine16, n_paths=2,
                                     seed0=0)
        assert report.passed
        assert set(report.pass_flags) == {"one", "cos2pix", "sin4pix"}
        assert report.pass_flags["one"]
        assert report.factors["sin4pix"] > 1.5

    def test_strong_order(self, zero_flux):
        config = SolverConfig(n_per_axis=16, dt=1e-2, T=0.1)
        u0 = build_initial(InitialCondition("random", amplitude=0.5, seed=1, kmax=3), config.grid)
        report = strong_convergence_study(config, zero_flux, LinearNoise(0.5), u0,
                                          dts=(1e-2, 1e-3), reference_dt=1e-4, n_paths=16,
                                          seed0=0)
        assert report.errors.shape == (2,)
        assert report.errors[0] > report.errors[1]
        assert 0.25 < report.slope < 0.75
        assert report.to_dict()["dts"] == [1e-2, 1e-3]

    def test_strong_order_with_burgers_drift(self, burgers):
        config = SolverConfig(n_per_axis=16, dt=1e-2, T=0.1)
        u0 = build_initial(InitialCondition("sine", amplitude=0.1), config.grid)
        report = strong_convergence_study(config, burgers, LinearNoise(0.5), u0,
                                          dts=(1e-2, 1e-3), reference_dt=1e-4, n_paths=16,
                                          seed0=0)
        assert report.errors[0] > report.errors[1]
        assert 0.25 < report.slope < 0.75


class TestLimitStudy:
    """Escalera de niveles y estudio del límite"""

    def test_ladder(self):
        levels = ladder(2, 4)
        assert [lv.k for lv in levels] == [2, 3, 4]
        assert levels[0].epsilon == 0.25
        assert levels[0].ratio == pytest.approx(1.0)
        with pytest.raises(ValueError):
            ladder(4, 2)

    def test_validate_levels(self):
        with pytest.raises(ValueError, match="exceeds bound"):
            validate_levels([LimitLevel(2, 0.25, 0.25)], bound=1.0)
        with pytest.raises(ValueError, match="> 0"):
            validate_levels([LimitLevel(2, 0.0, 0.01)])
        with pytest.raises(ValueError, match="vacía"):
            validate_levels([])

    def test_identical_levels_have_zero_gap(self, grid1d, rng):
        samples = rng.uniform(-1, 1, (2, 3) + grid1d.shape)
        times = np.array([0.0, 0.1, 0.2])
        np.testing.assert_array_equal(velocity_gap(samples, samples, times, grid1d, 1.5, 16), 0.0)
        frame = kinetic_compactness([samples] * 3, times, grid1d, 1.5, ks=[2, 3, 4], m_lambda=16)
        assert list(frame["k"]) == [2, 3]
        np.testing.assert_array_equal(frame["gap_mean"], 0.0)

    def test_reference_mode(self, burgers, linear_noise):
        base = SolverConfig(n_per_axis=32, dt=1e-3, T=0.1)
        u0 = build_initial(InitialCondition("sine"), base.grid)
        report = limit_study(ladder(2, 4), base, burgers, linear_noise, u0, n_paths=4, seed0=0,
                             fv_mesh_n=128, snapshot_interval=0.05, m_lambda=16)
        assert report.pass_flags["errors_nonincreasing"]
        assert report.errors.shape == (3,)
        assert report.velocity_gaps.shape == (3,)
        assert report.criterion.startswith("empirical-proxy")
        frame = report.to_frame()
        assert list(frame["k"]) == [2, 3, 4]
        assert "velocity_gap" in frame.columns
        assert report.to_dict()["n_paths"] == 4

    def test_self_convergence_rough_2d(self, linear_noise):
        flux = make_flux("stream2d-rough")
        base = SolverConfig(n_per_axis=16, dt=1e-3, T=0.02, dim=2)
        u0 = build_initial(InitialCondition("product", amplitude=0.5), base.grid)
        report = limit_study(ladder(2, 3), base, flux, linear_noise, u0, n_paths=2, seed0=0,
                             mode="self-convergence", snapshot_interval=0.01, m_lambda=16)
        assert report.errors.shape == (1,)
        assert report.velocity_gaps.shape == (0,)
        assert len(report.to_frame()) == 1
        assert len(report.compactness) == 1

    def test_invalid_study(self, burgers, linear_noise):
        base = SolverConfig(n_per_axis=32, dt=1e-3, T=0.01)
        u0 = build_initial(InitialCondition("sine"), base.grid)
        with pytest.raises(ValueError, match="Modo"):
            limit_study(ladder(2, 3), base, burgers, linear_noise, u0, mode="oracle")
        with pytest.raises(ValueError, match="múltiplo"):
            limit_study(ladder(2, 3), base, burgers, linear_noise, u0, fv_mesh_n=48)
        with pytest.raises(ValueError, match="dos niveles"):
            limit_study(ladder(2, 2), base, burgers, linear_noise, u0, mode="self-convergence")


class TestKineticStudy:
    """Identidades cinéticas y módulo de traslación esperado"""

    def test_identity_check(self, grid1d):
        check = kinetic_identity_check(grid1d, n_fields=10, L=1.0, m_lambda=64)
        assert check["truncation_within_cell"]
        assert check["sign_structure"]
        assert check["lambda_cell_width"] == pytest.approx(2.0 / 64)

    def test_translation_study(self, burgers, linear_noise):
        config = SolverConfig(n_per_axis=16, dt=1e-2, T=0.2)
        u0 = build_initial(InitialCondition("sine", amplitude=0.5), config.grid)
        report = translation_study(config, burgers, linear_noise, u0, n_paths=2, seed0=0,
                                   snapshot_every=2, theta_multiples=(1, 2, 4), m_lambda=16)
        assert report.thetas == pytest.approx([0.02, 0.04, 0.08])
        assert report.modulus_mean.shape == (3,)
        assert np.all(np.diff(report.modulus_mean) >= 0)
        assert len(report.dissipation) == 16
        assert report.N == 4
        assert set(report.pass_flags) == {"translation_slope", "truncation_within_cell",
                                          "sign_structure"}

    def test_translation_needs_two_thetas(self, burgers, linear_noise):
        config = SolverConfig(n_per_axis=16, dt=1e-2, T=0.2)
        u0 = build_initial(InitialCondition("sine", amplitude=0.5), config.grid)
        with pytest.raises(ValueError, match="dos"):
            translation_study(config, burgers, linear_noise, u0, n_paths=1, seed0=0,
                              snapshot_every=2, theta_multiples=(20, 40), m_lambda=16)


class TestReports:
    """report.json determinista y CSV"""

    def test_sanitize(self):
        data = sanitize({"a": np.float64(np.nan), "b": np.arange(3), "c": np.bool_(True),
                         "d": (1.5, np.inf), "e": 2 + 1j, 3: np.int64(4)})
        assert data == {"a": None, "b": [0, 1, 2], "c": True, "d": [1.5, None],
                        "e": [2.0, 1.0], "3": 4}

    def test_sanitize_frame(self):
        frame = pd.DataFrame({"x": [1.0, np.nan]})
        assert sanitize(frame) == [{"x": 1.0}, {"x": None}]

    def test_report_is_sorted_and_roundtrips(self, tmp_path):
        report = build_report("energy-check", {"solver": {"dt": 0.01}}, {"energy_bound": True},
                              [1, 2], per_time_series=[{"t": 0.0, "se": float("nan")}],
                              zeta=np.array([1.0]))
        path = write_report(report, tmp_path / "out")
        text = path.read_text(encoding="utf-8")
        assert text.index('"config_echo"') < text.index('"experiment"') < text.index('"seeds"')
        loaded = load_report(tmp_path / "out")
        assert loaded["per_time_series"][0]["se"] is None
        assert loaded["zeta"] == [1.0]
        assert loaded == json.loads(text)

    def test_write_csv(self, tmp_path):
        path = write_csv(pd.DataFrame({"t": [0.1], "v": [1 / 3]}), tmp_path, "series.csv")
        assert path.read_text().splitlines() == ["t,v", "0.10000000000000001,0.33333333333333331"]
