"""
Corridas de aceptación sobre las configuraciones de data/configs

Tardan minutos; se ejecutan con ``pytest -m slow``.
"""

import numpy as np
import pytest

from config import CONFIGS_DIR
from main import EXIT_ABORT, EXIT_PASS, dispatch
from modules.flux_noise import sample_wiener, validate_flux
from modules.galerkin_solver import decayed_l2_sq, linear_decay_factors, simulate_path
from modules.harness import build_initial, load_report
from modules.run_config import parse_config

pytestmark = pytest.mark.slow


def run(name, tmp_path, **overrides):
    config = parse_config(CONFIGS_DIR / name, overrides={"out": str(tmp_path), **overrides})
    code = dispatch(config)
    return code, load_report(tmp_path)


def test_linear_exactness():
    config = parse_config(CONFIGS_DIR / "energy_zero.yaml")
    solver = config.solver
    u0 = build_initial(config.initial_condition, solver.grid)
    path = sample_wiener(0, solver.dt, solver.T)
    terminal = simulate_path(u0, path, solver, config.build_flux(), config.build_noise()).terminal
    expected = u0.coeffs * linear_decay_factors(solver, solver.T)
    np.testing.assert_allclose(terminal.coeffs, expected, rtol=1e-10, atol=1e-14)
    assert terminal.l2_norm_sq() == pytest.approx(decayed_l2_sq(u0, solver, solver.T), rel=1e-10)


def test_zero_forcing_energy(tmp_path):
    code, report = run("energy_zero.yaml", tmp_path)
    assert code == EXIT_PASS
    assert report["pass_flags"]["energy_bound"]


def test_additive_noise_identity(tmp_path):
    code, report = run("energy_additive.yaml", tmp_path)
    assert report["pass_flags"]["additive_identity"]
    assert code == EXIT_PASS


def test_energy_bounds_burgers(tmp_path):
    code, report = run("energy_burgers.yaml", tmp_path)
    assert code == EXIT_PASS
    assert report["pass_flags"]["higher_order_bound"]
    assert report["pass_flags"]["moment_p4_bound"]


@pytest.mark.parametrize("preset", ["burgers1d", "stream2d-smooth", "stream2d-rough"])
def test_geometry_compatibility(preset):
    config = parse_config({"experiment": "simulate", "flux": {"preset": preset},
                           "solver": {"dim": 1 if preset == "burgers1d" else 2,
                                      "n_per_axis": 32}})
    validation = validate_flux(config.build_flux(), config.solver.grid, trials=100)
    assert validation.geometry.max_divergence < 1e-10
    assert validation.geometry.stokes_residual < 1e-8


def test_stability(tmp_path):
    code, report = run("stability.yaml", tmp_path)
    assert code == EXIT_PASS
    assert report["stability"]["variation"] < 10.0


def test_strong_order_and_weak_residual(tmp_path):
    code, report = run("convergence.yaml", tmp_path)
    assert abs(report["strong"]["slope"] - 0.5) <= 0.15
    assert all(report["pass_flags"].values())
    assert code == EXIT_PASS


def test_strong_order_with_burgers_drift(tmp_path):
    code, report = run("convergence_burgers.yaml", tmp_path)
    assert abs(report["strong"]["slope"] - 0.5) <= 0.15
    assert report["pass_flags"]["weak_residual_sin4pix"]
    assert code == EXIT_PASS


def test_kinetic_diagnostics(tmp_path):
    code, report = run("kinetic.yaml", tmp_path)
    assert report["pass_flags"]["truncation_within_cell"]
    assert report["pass_flags"]["sign_structure"]
    assert report["kinetic"]["slope"] >= 0.4
    assert code == EXIT_PASS


def test_singular_limit_burgers(tmp_path):
    code, report = run("limit_burgers.yaml", tmp_path)
    errors = report["limit_study"]["errors"]
    assert all(b < a for a, b in zip(errors, errors[1:]))
    gaps = [row["gap_mean"] for row in report["limit_study"]["kinetic_compactness"]]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert code == EXIT_PASS


def test_rough_flux_self_convergence(tmp_path):
    code, report = run("limit_rough2d.yaml", tmp_path)
    errors = report["limit_study"]["errors"]
    assert len(errors) == 3
    assert all(b < a for a, b in zip(errors, errors[1:]))


def test_rough_flux_nondegeneracy(tmp_path):
    _, report = run("nondegeneracy_rough.yaml", tmp_path)
    assert report["pass_flags"]["geometry_compat"]


def test_blow_up_aborts(tmp_path):
    code, report = run("blowup.yaml", tmp_path)
    assert code == EXIT_ABORT
    assert report["aborted"]


def test_reproducible_report(tmp_path):
    run("simulate.yaml", tmp_path / "a", threads=1)
    run("simulate.yaml", tmp_path / "b", threads=2)
    assert (tmp_path / "a" / "report.json").read_bytes() == \
        (tmp_path / "b" / "report.json").read_bytes()
