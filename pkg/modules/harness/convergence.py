"""
Estudios de Convergencia en el Paso Temporal
============================================
- Orden fuerte de Euler–Maruyama frente a una referencia fina acoplada
- Reducción del residuo débil pathwise bajo dt -> dt/4
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy.stats import linregress

from config import EnsembleConfig, HarnessConfig
from modules.flux_noise import FluxModel, member_seeds, sample_wiener
from modules.galerkin_solver import (
    EnsembleAbortedError,
    GalerkinIntegrator,
    SolverBlowUpError,
    SolverConfig,
    simulate_path,
    weak_residual,
)
from modules.spectral import TWO_PI, SpectralField

from .ensemble import chunk_seeds, map_chunks, mean_se

logger = logging.getLogger(__name__)

# Funciones test de la identidad débil
TEST_FUNCTIONS: Dict[str, Callable] = {
    "one": lambda *x: np.ones_like(x[0]),
    "cos2pix": lambda *x: np.cos(TWO_PI * x[0]),
    "sin4pix": lambda *x: np.sin(2.0 * TWO_PI * x[0]),
}


# ==========================================
# ORDEN FUERTE
# ==========================================

@dataclass
class StrongTask:
    configs: List[SolverConfig]
    reference: SolverConfig
    flux: FluxModel
    noise: object
    u0: np.ndarray
    seeds: List[int]


def _terminal_states(config: SolverConfig, flux, noise, u0: np.ndarray, seeds: List[int],
                     dt_fine: float):
    increments = np.stack([sample_wiener(s, dt_fine, config.T).to_step(config.dt).increments
                           for s in seeds])
    integrator = GalerkinIntegrator(config, flux, noise)
    result = integrator.run(u0, increments, seeds=seeds, snapshot_every=config.n_steps,
                            keep_snapshots=True)
    return result.snapshots[:, -1], result.alive, result.failures


def strong_chunk(task: StrongTask):
    """Errores ||u_dt(T) − u_ref(T)||_{L²} (B, n_dt) de un lote"""
    dt_fine = task.reference.dt
    ref, alive, failures = _terminal_states(task.reference, task.flux, task.noise, task.u0,
                                            task.seeds, dt_fine)
    errors = np.zeros((len(task.seeds), len(task.configs)))
    axes = tuple(range(1, ref.ndim))
    for j, config in enumerate(task.configs):
        state, ok, fails = _terminal_states(config, task.flux, task.noise, task.u0,
                                            task.seeds, dt_fine)
        alive = alive & ok
        failures.extend(fails)
        errors[:, j] = np.sqrt(np.sum(np.abs(state - ref) ** 2, axis=axes))
    errors[~alive] = np.nan
    return errors, failures


@dataclass
class StrongConvergenceReport:
    """E||u_dt(T) − u_ref(T)||_{L²} por paso y pendiente log-log"""

    dts: List[float]
    reference_dt: float
    errors: np.ndarray
    standard_errors: Optional[np.ndarray]
    slope: float
    intercept: float
    n_paths: int
    passed: bool
    failures: List[Dict] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {
            "dts": list(self.dts),
            "reference_dt": self.reference_dt,
            "errors": self.errors.tolist(),
            "standard_errors": None if self.standard_errors is None else self.standard_errors.tolist(),
            "slope": self.slope,
            "intercept": self.intercept,
            "n_paths": self.n_paths,
            "passed": self.passed,
            "failures": self.failures,
        }


def strong_convergence_study(
    config: SolverConfig,
    flux: FluxModel,
    noise,
    u0: SpectralField,
    dts: Sequence[float] = (1e-2, 1e-3, 1e-4),
    reference_dt: float = 1e-5,
    n_paths: int = EnsembleConfig.N_PATHS,
    seed0: int = EnsembleConfig.MASTER_SEED,
    workers: int = 1,
    chunk_size: int = EnsembleConfig.CHUNK_SIZE,
    target: float = HarnessConfig.STRONG_ORDER_TARGET,
    tolerance: float = HarnessConfig.STRONG_ORDER_TOL,
) -> StrongConvergenceReport:
    """
    Orden fuerte por auto-convergencia con ruido acoplado

    Cada miembro muestrea una sola trayectoria de Wiener al paso de
    referencia; los pasos gruesos usan sus sumas parciales.

    Args:
        config: Configuración base (se sustituye dt)
        dts: Pasos a estudiar
        reference_dt: Paso de la solución de referencia
        target: Orden esperado
        tolerance: Desviación admitida de la pendiente

    Returns:
        StrongConvergenceReport con PASS si |pendiente − target| <= tolerance
    """
    dts = sorted((float(d) for d in dts), reverse=True)
    configs = [replace(config, dt=d) for d in dts]
    reference = replace(config, dt=float(reference_dt))
    u0 = config.grid.dealias(u0)
    seeds = member_seeds(seed0, n_paths)
    logger.info(f"Orden fuerte: dt={dts} contra referencia dt={reference_dt}, {n_paths} trayectorias")

    tasks = [StrongTask(configs, reference, flux, noise, u0.coeffs, chunk)
             for chunk in chunk_seeds(seeds, chunk_size)]
    parts = map_chunks(strong_chunk, tasks, workers, desc="orden fuerte")
    errors = np.concatenate([p[0] for p in parts])
    failures = [f for p in parts for f in p[1]]
    errors = errors[np.all(np.isfinite(errors), axis=1)]
    if errors.shape[0] == 0:
        raise EnsembleAbortedError(
            "Todas las trayectorias del estudio de orden fuerte fueron abortadas", failures)

    mean, se = mean_se(errors)
    fit = linregress(np.log(dts), np.log(np.maximum(mean, 1e-300)))
    slope = float(fit.slope)
    passed = bool(abs(slope - target) <= tolerance)
    logger.info(f"Pendiente fuerte {slope:.3f} (objetivo {target} ± {tolerance}): "
                f"{'PASS' if passed else 'FAIL'}")
    return StrongConvergenceReport(dts, float(reference_dt), mean, se, slope,
                                   float(fit.intercept), errors.shape[0], passed, failures)


# ==========================================
# RESIDUO DÉBIL
# ==========================================

@dataclass
class WeakResidualReport:
    """Residuo medio |R| por función test en dt y dt/4"""

    dt: float
    residuals: Dict[str, List[float]]
    factors: Dict[str, Optional[float]]
    pass_flags: Dict[str, bool]

    @property
    def passed(self) -> bool:
        return all(self.pass_flags.values())

    def to_dict(self) -> Dict:
        return {
            "dt": self.dt,
            "residuals": self.residuals,
            "factors": self.factors,
            "pass_flags": self.pass_flags,
        }


def weak_residual_study(
    config: SolverConfig,
    flux: FluxModel,
    noise,
    u0: SpectralField,
    n_paths: int = 8,
    seed0: int = EnsembleConfig.MASTER_SEED,
    refinement: int = 4,
    test_functions: Optional[Dict[str, Callable]] = None,
    min_factor: float = HarnessConfig.WEAK_RESIDUAL_MIN_FACTOR,
    zero_tol: float = 1e-12,
) -> WeakResidualReport:
    """
    Reducción del residuo de la identidad débil bajo dt -> dt/refinement

    Ambos pasos consumen la misma trayectoria fina de cada miembro. Un
    residuo ya nulo a precisión de máquina en el paso grueso cuenta como PASS.

    Returns:
        WeakResidualReport con el factor |R(dt)| / |R(dt/refinement)|
    """
    test_functions = test_functions or TEST_FUNCTIONS
    coarse = config
    fine = replace(config, dt=config.dt / refinement)
    residuals = {name: [0.0, 0.0] for name in test_functions}
    seeds = member_seeds(seed0, n_paths)

    for seed in seeds:
        path = sample_wiener(seed, fine.dt, config.T)
        for slot, cfg in enumerate((coarse, fine)):
            try:
                solution = simulate_path(u0, path, cfg, flux, noise, snapshot_every=1)
            except SolverBlowUpError as e:
                logger.error(f"Residuo débil: {e}")
                raise
            for name, testfn in test_functions.items():
                value = abs(weak_residual(solution, testfn, flux, noise))
                residuals[name][slot] += value / n_paths

    factors, flags = {}, {}
    for name, (r_coarse, r_fine) in residuals.items():
        if r_coarse <= zero_tol:
            factors[name] = None
            flags[name] = True
        else:
            factors[name] = r_coarse / max(r_fine, 1e-300)
            flags[name] = bool(factors[name] >= min_factor)
        logger.info(f"  φ={name}: |R|={r_coarse:.3e} -> {r_fine:.3e} "
                    f"({'PASS' if flags[name] else 'FAIL'})")
    return WeakResidualReport(config.dt, residuals, factors, flags)
