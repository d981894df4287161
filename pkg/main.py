"""
Arnés SPDE de Capilaridad Dinámica - Punto de Entrada Principal
===============================================================
Simulador de Galerkin espectral y arnés de verificación para la ecuación
estocástica de capilaridad dinámica en toros planos.

Códigos de salida:
    0  éxito / PASS
    1  FAIL (alguna cota o criterio violado)
    2  aborto en tiempo de ejecución (explosión numérica, CFL) o
       configuración inválida
"""

import argparse
import sys
from typing import Dict, List, Optional

import numpy as np
from loguru import logger

from config import LogConfig
from utils.logger import setup_logger

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_ABORT = 2


def build_parser() -> argparse.ArgumentParser:
    """Parser con un subcomando por experimento y flags globales compartidos"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, metavar="FILE",
                        help="Archivo YAML de la corrida")
    common.add_argument("--seed", type=int, metavar="U64",
                        help="Semilla maestra (sobrescribe ensemble.seed)")
    common.add_argument("--out", type=str, metavar="DIR",
                        help="Directorio de salida (sobrescribe output.dir)")
    common.add_argument("--paths", type=int, metavar="N",
                        help="Trayectorias del ensemble (sobrescribe ensemble.n_paths)")
    common.add_argument("--threads", type=int, metavar="N",
                        help="Procesos del pool (por defecto, núcleos disponibles)")
    common.add_argument("--verbose", action="store_true", help="Logging detallado (DEBUG)")
    common.add_argument("--quiet", action="store_true", help="Logging mínimo (WARNING)")

    parser = argparse.ArgumentParser(
        description="Arnés SPDE - Galerkin espectral para capilaridad dinámica estocástica",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Ejemplos de uso:
  python main.py simulate --config data/configs/simulate.yaml
  python main.py energy-check --config data/configs/energy_burgers.yaml --paths 512
  python main.py limit-study --config data/configs/limit_burgers.yaml --threads 8
  python main.py nondegeneracy --config data/configs/nondegeneracy_rough.yaml
        """,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "Integrar una trayectoria y guardar sus snapshots",
        "energy-check": "Verificar las cotas de energía sobre un ensemble",
        "stability-check": "Barrido de estabilidad con ruido acoplado",
        "limit-study": "Límite singular ε, δ -> 0",
        "kinetic-diag": "Módulo de traslación e identidades cinéticas",
        "nondegeneracy": "Estimador de no-degeneración y compatibilidad geométrica",
        "convergence-check": "Orden fuerte y residuo débil",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return parser


# ==========================================
# EXPERIMENTOS
# ==========================================

def _finish(config, experiment_report: Dict, frames: Dict, passed: bool) -> int:
    """Escribir report.json y CSVs; devolver el código de salida"""
    from modules.harness import write_csv, write_report

    out = config.out_dir
    write_report(experiment_report, out)
    if config.output.csv:
        for name, frame in frames.items():
            write_csv(frame, out, name)
    logger.info(f"Resultado: {'PASS' if passed else 'FAIL'}")
    return EXIT_PASS if passed else EXIT_FAIL


def _abort(config, error: Exception, failures: Optional[List[Dict]] = None) -> int:
    from modules.harness import build_report, write_report

    logger.error(f"Corrida abortada: {error}")
    report = build_report(config.experiment, config.echo(), {"completed": False},
                          [config.ensemble.seed], aborted=True, error=str(error),
                          failures=failures or [])
    write_report(report, config.out_dir)
    return EXIT_ABORT


def _partial_abort(config, experiment_report: Dict, failures: List[Dict]) -> int:
    """Miembros abortados: el reporte se escribe completo, marcado y sin CSVs"""
    from modules.harness import write_report

    experiment_report = dict(experiment_report, aborted=True, failures=failures)
    write_report(experiment_report, config.out_dir)
    logger.error(f"{len(failures)} trayectorias abortadas")
    return EXIT_ABORT


def _blowup_failure(error) -> Dict:
    return {"seed": error.seed, "step": error.step, "time": error.time, "norm": error.norm,
            "reason": str(error)}


def run_simulate(config, flux, noise, u0) -> int:
    """Una trayectoria con la semilla maestra"""
    import pandas as pd

    from modules.flux_noise import sample_wiener
    from modules.galerkin_solver import SolverBlowUpError, simulate_path
    from modules.harness import build_report

    solver = config.solver
    path = sample_wiener(config.ensemble.seed, solver.dt, solver.T)
    try:
        solution = simulate_path(u0, path, solver, flux, noise,
                                 snapshot_every=config.output.snapshot_every)
    except SolverBlowUpError as e:
        return _abort(config, e, [_blowup_failure(e)])

    grid = solver.grid
    norms = pd.DataFrame({
        "t": solution.times,
        "l2_sq": grid.sobolev_norm_sq_batch(solution.coeffs, 0),
        "h1_sq": grid.sobolev_norm_sq_batch(solution.coeffs, 1),
        "h2_sq": grid.sobolev_norm_sq_batch(solution.coeffs, 2),
        "sup_l2_sq": solution.sup_l2_sq,
        "grad_integral": solution.grad_integral,
    })
    report = build_report(
        "simulate", config.echo(), {"completed": True}, [path.seed],
        per_time_series=norms.to_dict(orient="records"),
        initial_norms={"l2_sq": u0.sobolev_norm_sq(0), "h1_sq": u0.sobolev_norm_sq(1),
                       "h2_sq": u0.sobolev_norm_sq(2)},
    )
    return _finish(config, report, {"snapshots.csv": solution.to_frame(), "norms.csv": norms},
                   True)


def run_energy_check(config, flux, noise, u0, workers: int) -> int:
    from modules.flux_noise import validate_noise
    from modules.harness import build_report, run_ensemble

    solver = config.solver
    ens = config.ensemble
    report = run_ensemble(solver, flux, noise, u0, n_paths=ens.n_paths, seed0=ens.seed,
                          snapshot_every=config.output.snapshot_every, workers=workers,
                          chunk_size=ens.chunk_size,
                          se_factor=config.thresholds.energy_se_factor,
                          c0_override=config.section.c0_override)
    extra = {"constants": report.constants, "n_paths": report.n_paths,
             "noise_validation": validate_noise(noise, solver.grid).to_dict()}
    if report.additive_identity is not None:
        extra["additive_identity"] = report.additive_identity

    experiment_report = build_report("energy-check", config.echo(), report.pass_flags,
                                     report.seeds, per_time_series=report.per_time_series(),
                                     failures=report.failures, **extra)
    if report.failures:
        return _partial_abort(config, experiment_report, report.failures)
    return _finish(config, experiment_report, {"energy_timeseries.csv": report.to_frame()},
                   report.passed)


def run_stability_check(config, flux, noise, u0, workers: int) -> int:
    import pandas as pd

    from modules.harness import build_report, perturbation, stability_sweep

    grid = config.solver.grid
    sec = config.section
    direction = perturbation(grid, 1.0, seed=sec.perturbation_seed)
    sweep = stability_sweep(config.solver, flux, noise, u0, direction,
                            amplitudes=sec.amplitudes, n_paths=config.ensemble.n_paths,
                            seed0=config.ensemble.seed, workers=workers,
                            max_variation=config.thresholds.stability_max_variation)
    seeds = list(range(config.ensemble.seed, config.ensemble.seed + config.ensemble.n_paths))
    report = build_report("stability-check", config.echo(), {"ratio_bounded": sweep["passed"]},
                          seeds, stability=sweep)
    if sweep["failures"]:
        return _partial_abort(config, report, sweep["failures"])
    frame = pd.DataFrame({"amplitude": sweep["amplitudes"], "ratio": sweep["ratios"],
                          "se": [np.nan if s is None else s for s in sweep["standard_errors"]]})
    return _finish(config, report, {"stability.csv": frame}, sweep["passed"])


def run_limit_study(config, flux, noise, u0, workers: int) -> int:
    from modules.harness import build_report, limit_study

    sec = config.section
    result = limit_study(config.levels(), config.solver, flux, noise, u0,
                         n_paths=config.ensemble.n_paths, seed0=config.ensemble.seed,
                         mode=sec.mode, bound=config.thresholds.neps_bound,
                         fv_mesh_n=sec.fv_mesh_n, cfl=sec.cfl,
                         snapshot_interval=sec.snapshot_interval,
                         threshold=config.thresholds.final_error_threshold,
                         m_lambda=sec.m_lambda, workers=workers,
                         chunk_size=config.ensemble.chunk_size)
    report = build_report("limit-study", config.echo(), result.pass_flags, result.seeds,
                          limit_study=result.to_dict())
    if result.failures:
        return _partial_abort(config, report, result.failures)
    return _finish(config, report, {"limit_errors.csv": result.to_frame(),
                                    "kinetic_compactness.csv": result.compactness},
                   result.passed)


def run_kinetic_diag(config, flux, noise, u0, workers: int) -> int:
    from modules.harness import build_report, translation_study

    sec = config.section
    result = translation_study(config.solver, flux, noise, u0,
                               n_paths=config.ensemble.n_paths, seed0=config.ensemble.seed,
                               snapshot_every=config.output.snapshot_every,
                               theta_multiples=sec.theta_multiples, m_lambda=sec.m_lambda,
                               L=sec.L, N=sec.N,
                               min_slope=config.thresholds.min_translation_slope,
                               workers=workers, chunk_size=config.ensemble.chunk_size)
    report = build_report("kinetic-diag", config.echo(), result.pass_flags, result.seeds,
                          kinetic=result.to_dict())
    if result.failures:
        return _partial_abort(config, report, result.failures)
    return _finish(config, report, {"translation.csv": result.to_frame(),
                                    "dissipation_histogram.csv": result.dissipation},
                   result.passed)


def run_nondegeneracy(config, flux, noise, u0) -> int:
    import pandas as pd

    from modules.flux_noise import nondegeneracy_report, validate_flux
    from modules.harness import build_report
    from modules.spectral import TorusGrid

    sec = config.section
    grid = TorusGrid(flux.dim, sec.grid_n)
    nondeg = nondegeneracy_report(flux, grid, sec.etas, tuple(sec.lambda_box),
                                  sec.sphere_samples, sec.m_lambda)
    validation = validate_flux(flux, config.solver.grid, trials=sec.stokes_trials)
    pass_flags = {
        "geometry_compat": bool(validation.geometry.passed()),
        "nondegenerate": bool(not nondeg.degenerate),
        "measure_monotone": bool(nondeg.monotone),
    }
    report = build_report("nondegeneracy", config.echo(), pass_flags, [],
                          nondegeneracy=nondeg.to_dict(), flux_validation=validation.to_dict())
    frame = pd.DataFrame({"eta": nondeg.etas, "restricted": nondeg.restricted,
                          "unrestricted": nondeg.unrestricted})
    return _finish(config, report, {"nondegeneracy.csv": frame}, all(pass_flags.values()))


def run_convergence_check(config, flux, noise, u0, workers: int) -> int:
    import pandas as pd

    from modules.harness import build_report, strong_convergence_study, weak_residual_study

    sec = config.section
    th = config.thresholds
    strong = strong_convergence_study(config.solver, flux, noise, u0, dts=sec.dts,
                                      reference_dt=sec.reference_dt,
                                      n_paths=config.ensemble.n_paths,
                                      seed0=config.ensemble.seed, workers=workers,
                                      chunk_size=config.ensemble.chunk_size,
                                      target=th.strong_order_target,
                                      tolerance=th.strong_order_tol)
    weak = weak_residual_study(config.solver, flux, noise, u0, n_paths=sec.weak_paths,
                               seed0=config.ensemble.seed, refinement=sec.refinement,
                               min_factor=th.weak_residual_min_factor)
    pass_flags = {"strong_order": strong.passed}
    pass_flags.update({f"weak_residual_{k}": v for k, v in weak.pass_flags.items()})
    seeds = list(range(config.ensemble.seed, config.ensemble.seed + config.ensemble.n_paths))
    report = build_report("convergence-check", config.echo(), pass_flags, seeds,
                          strong=strong.to_dict(), weak=weak.to_dict(),
                          failures=strong.failures)
    if strong.failures:
        return _partial_abort(config, report, strong.failures)
    frame = pd.DataFrame({"dt": strong.dts, "error": strong.errors,
                          "se": (strong.standard_errors if strong.standard_errors is not None
                                 else np.full(len(strong.dts), np.nan))})
    return _finish(config, report, {"strong_convergence.csv": frame}, all(pass_flags.values()))


# ==========================================
# DESPACHO
# ==========================================

def dispatch(config) -> int:
    """
    Ejecutar el experimento de una configuración validada

    Args:
        config: RunConfig

    Returns:
        Código de salida (0 PASS, 1 FAIL, 2 aborto)
    """
    from modules.galerkin_solver import EnsembleAbortedError, SolverBlowUpError
    from modules.harness import build_initial, resolve_workers

    flux = config.build_flux()
    noise = config.build_noise()
    u0 = build_initial(config.initial_condition, config.solver.grid)
    workers = resolve_workers(config.ensemble.threads)
    logger.info(f"Experimento '{config.experiment}' - flujo {flux.name}, ruido {noise.name}, "
                f"{workers} proceso(s)")

    try:
        if config.experiment == "simulate":
            return run_simulate(config, flux, noise, u0)
        if config.experiment == "energy-check":
            return run_energy_check(config, flux, noise, u0, workers)
        if config.experiment == "stability-check":
            return run_stability_check(config, flux, noise, u0, workers)
        if config.experiment == "limit-study":
            return run_limit_study(config, flux, noise, u0, workers)
        if config.experiment == "kinetic-diag":
            return run_kinetic_diag(config, flux, noise, u0, workers)
        if config.experiment == "nondegeneracy":
            return run_nondegeneracy(config, flux, noise, u0)
        if config.experiment == "convergence-check":
            return run_convergence_check(config, flux, noise, u0, workers)
    except EnsembleAbortedError as e:
        return _abort(config, e, e.failures)
    except SolverBlowUpError as e:
        return _abort(config, e, [_blowup_failure(e)])
    except (RuntimeError, ValueError) as e:
        return _abort(config, e)
    raise ValueError(f"Experimento sin despachador: {config.experiment}")


def main(argv: Optional[List[str]] = None) -> int:
    """Función principal"""
    args = build_parser().parse_args(argv)

    log_level = "DEBUG" if args.verbose else ("WARNING" if args.quiet else LogConfig.LOG_LEVEL)
    setup_logger(level=log_level)

    logger.info("")
    logger.info("╔════════════════════════════════════════════════════════╗")
    logger.info("║           ARNÉS SPDE - CAPILARIDAD DINÁMICA             ║")
    logger.info("╚════════════════════════════════════════════════════════╝")
    logger.info("")

    from modules.run_config import ConfigError, parse_config

    overrides = {"seed": args.seed, "out": args.out, "paths": args.paths,
                 "threads": args.threads}
    try:
        config = parse_config(args.config, experiment=args.command, overrides=overrides)
    except ConfigError as e:
        logger.error(f"Configuración inválida: {e}")
        return EXIT_ABORT

    return dispatch(config)


if __name__ == "__main__":
    sys.exit(main())
