"""
Ensembles Monte-Carlo
=====================
Ejecución de ensembles acoplados (una semilla por miembro), reducción de
estadísticos y verificación de las cotas de energía:

- C₀(t)  = e^{C_Φ t}(C_Φ t + E₀),  E₀ = ½(1−δ)||u₀||² + ½δ||u₀||²_{H¹}
- C̃₀(t) para la estimación en H¹/H²
- C̄₀(t) para los momentos de orden p = 4

Los miembros se agrupan en lotes contiguos de semillas; cada lote se integra
vectorizado dentro de un proceso del pool. Las reducciones se hacen una sola
vez sobre los arrays apilados en orden de semilla, de modo que el resultado
no depende del número de procesos.
"""

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from config import EnsembleConfig, HarnessConfig, PerformanceConfig
from modules.flux_noise import ConstantNoise, FluxModel, member_seeds, sample_wiener
from modules.galerkin_solver import (
    BatchResult,
    EnsembleAbortedError,
    GalerkinIntegrator,
    SolverConfig,
    decayed_l2_sq,
)
from modules.spectral import SpectralField

logger = logging.getLogger(__name__)


# ==========================================
# EJECUCIÓN PARALELA
# ==========================================

def resolve_workers(threads: Optional[int] = None) -> int:
    """Tamaño del pool: argumento, configuración o núcleos disponibles"""
    if not PerformanceConfig.USE_MULTIPROCESSING:
        return 1
    threads = threads or PerformanceConfig.NUM_WORKERS or os.cpu_count() or 1
    return max(1, int(threads))


def chunk_seeds(seeds: Sequence[int], chunk_size: int) -> List[List[int]]:
    chunk_size = max(1, int(chunk_size))
    return [list(seeds[i:i + chunk_size]) for i in range(0, len(seeds), chunk_size)]


def map_chunks(worker: Callable, tasks: List, workers: int = 1, desc: str = "ensemble",
               show_progress: bool = EnsembleConfig.SHOW_PROGRESS) -> List:
    """
    Aplicar ``worker`` a cada tarea preservando el orden

    Con ``workers == 1`` (o una sola tarea) se ejecuta en el proceso actual.
    """
    disable = not show_progress
    if workers <= 1 or len(tasks) <= 1:
        return [worker(task) for task in tqdm(tasks, desc=desc, disable=disable)]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as executor:
        return list(tqdm(executor.map(worker, tasks), total=len(tasks), desc=desc,
                         disable=disable))


def wiener_increments(seeds: Sequence[int], dt_fine: float, horizon: float,
                      dt: float) -> np.ndarray:
    """Incrementos (B, n_steps) al paso dt de las trayectorias finas de cada semilla"""
    return np.stack([sample_wiener(s, dt_fine, horizon).to_step(dt).increments for s in seeds])


@dataclass
class ChunkTask:
    """Lote de miembros para un proceso"""

    config: SolverConfig
    flux: FluxModel
    noise: object
    u0: np.ndarray
    seeds: List[int]
    dt_fine: float
    snapshot_every: int
    keep_snapshots: bool = False


def simulate_chunk(task: ChunkTask) -> BatchResult:
    increments = wiener_increments(task.seeds, task.dt_fine, task.config.T, task.config.dt)
    integrator = GalerkinIntegrator(task.config, task.flux, task.noise)
    return integrator.run(task.u0, increments, seeds=task.seeds,
                          snapshot_every=task.snapshot_every,
                          keep_snapshots=task.keep_snapshots)


def run_members(
    config: SolverConfig,
    flux: FluxModel,
    noise,
    u0: SpectralField,
    seeds: Sequence[int],
    dt_fine: Optional[float] = None,
    snapshot_every: int = 10,
    keep_snapshots: bool = False,
    workers: int = 1,
    chunk_size: int = EnsembleConfig.CHUNK_SIZE,
    desc: str = "galerkin",
) -> BatchResult:
    """
    Integrar un ensemble acoplado por semillas

    Args:
        config: Parámetros del solver
        flux: Flujo
        noise: Ruido
        u0: Dato inicial común
        seeds: Semillas de los miembros
        dt_fine: Paso de las trayectorias de Wiener (por defecto config.dt)
        snapshot_every: Pasos entre snapshots
        keep_snapshots: Guardar coeficientes
        workers: Procesos
        chunk_size: Miembros por lote

    Returns:
        BatchResult en orden de semillas
    """
    dt_fine = config.dt if dt_fine is None else dt_fine
    tasks = [ChunkTask(config, flux, noise, u0.coeffs, chunk, dt_fine, snapshot_every,
                       keep_snapshots)
             for chunk in chunk_seeds(list(seeds), chunk_size)]
    parts = map_chunks(simulate_chunk, tasks, workers, desc)
    return BatchResult.concatenate(parts)


# ==========================================
# ESTADÍSTICOS
# ==========================================

def mean_se(values: np.ndarray) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Media y error estándar sobre el eje 0 (SE = None si hay un solo miembro)"""
    values = np.asarray(values, dtype=float)
    mean = np.mean(values, axis=0)
    if values.shape[0] < 2:
        return mean, None
    return mean, np.std(values, axis=0, ddof=1) / np.sqrt(values.shape[0])


def within_bound(mean: np.ndarray, se: Optional[np.ndarray], bound: np.ndarray,
                 se_factor: float = HarnessConfig.ENERGY_SE_FACTOR,
                 rtol: float = HarnessConfig.FLOAT_RTOL) -> np.ndarray:
    """mean <= bound·(1 + k·SE/mean) + rtol·bound, punto a punto"""
    mean = np.asarray(mean, dtype=float)
    bound = np.asarray(bound, dtype=float)
    slack = np.zeros_like(mean) if se is None else se_factor * np.asarray(se)
    with np.errstate(divide="ignore", invalid="ignore"):
        relative = np.where(mean > 0, slack / mean, 0.0)
    return mean <= bound * (1.0 + relative) + rtol * np.abs(bound)


# ==========================================
# COTAS DE ENERGÍA
# ==========================================

def initial_energy(u0: SpectralField, delta: float) -> float:
    """E₀ = ½(1−δ)||u₀||² + ½δ||u₀||²_{H¹}"""
    return 0.5 * (1.0 - delta) * u0.sobolev_norm_sq(0) + 0.5 * delta * u0.sobolev_norm_sq(1)


def bound_c0(t: np.ndarray, c_phi: float, e0: float) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return np.exp(c_phi * t) * (c_phi * t + e0)


def bound_c0_tilde(t: np.ndarray, c_phi: float, u0: SpectralField, config: SolverConfig,
                   flux_lipschitz: float, flux_sup_l2_sq: float) -> np.ndarray:
    """
    C̃₀(t) = ½δ(1−δ)||u₀||²_{H¹} + ½δ²||u₀||²_{H²}
             + C₀(t)(½ + C_Φ t + δ + δ/(2ε²)||f'||²_∞) + C_Φ t + tδ/(2ε)||sup_λ|f|||²_{L²}
    """
    eps, delta = config.epsilon, config.delta
    t = np.asarray(t, dtype=float)
    e0 = initial_energy(u0, delta)
    base = (0.5 * delta * (1.0 - delta) * u0.sobolev_norm_sq(1)
            + 0.5 * delta ** 2 * u0.sobolev_norm_sq(2))
    factor = 0.5 + c_phi * t + delta + delta / (2.0 * eps ** 2) * flux_lipschitz ** 2
    return (base + bound_c0(t, c_phi, e0) * factor + c_phi * t
            + t * delta / (2.0 * eps) * flux_sup_l2_sq)


def bound_c0_bar(t: np.ndarray, c_phi: float, e0: float) -> np.ndarray:
    """Cota explícita de E sup||u||⁴ y de ε²E(∫||∇u||²)² hasta t"""
    t = np.asarray(t, dtype=float)
    c = c_phi
    return ((12.0 * e0 ** 2 + 24.0 * c ** 2 * t ** 2 + 48.0 * c * t)
            * np.exp((6.0 * c ** 2 * t + 96.0 * c) * t))


def additive_noise_l2(u0: SpectralField, config: SolverConfig, sigma: float, t: float) -> float:
    """E||u(t)||² exacto para f = 0, Φ ≡ σ₀: decaimiento lineal + σ₀² t"""
    return decayed_l2_sq(u0, config, t) + sigma ** 2 * t


def _additive_identity(stats: Dict, errors: Dict, u0: SpectralField, config: SolverConfig,
                       sigma: float, se_factor: float) -> Dict:
    """Media final de ||u(T)||² contra la identidad exacta, con tolerancia en SE"""
    expected = additive_noise_l2(u0, config, sigma, config.T)
    mean = float(stats["l2_sq"][-1])
    se = errors["l2_sq"]
    se = None if se is None else float(se[-1])
    tol = 1e-10 * max(expected, 1.0)
    if se is not None:
        tol = max(tol, se_factor * se)
    return {"expected": expected, "mean": mean, "se": se,
            "passed": bool(abs(mean - expected) <= tol)}


# ==========================================
# REPORTE DE ENERGÍA
# ==========================================

@dataclass
class EnergyReport:
    """Estadísticos Monte-Carlo de normas, disipación y cotas analíticas"""

    times: np.ndarray
    n_paths: int
    seeds: List[int]
    stats: Dict[str, np.ndarray]
    errors: Dict[str, Optional[np.ndarray]]
    bounds: Dict[str, np.ndarray]
    pass_flags: Dict[str, bool]
    constants: Dict[str, float]
    failures: List[Dict] = field(default_factory=list)
    additive_identity: Optional[Dict] = None

    @property
    def passed(self) -> bool:
        return all(self.pass_flags.values())

    @property
    def aborted(self) -> bool:
        return bool(self.failures)

    def to_frame(self) -> pd.DataFrame:
        """Serie temporal: una columna por media, error estándar y cota"""
        data = {"t": self.times}
        for name, values in self.stats.items():
            data[f"{name}_mean"] = values
            se = self.errors.get(name)
            data[f"{name}_se"] = se if se is not None else np.full_like(values, np.nan)
        for name, values in self.bounds.items():
            data[name] = values
        return pd.DataFrame(data)

    def per_time_series(self) -> List[Dict]:
        frame = self.to_frame()
        records = frame.to_dict(orient="records")
        for record in records:
            for key, value in record.items():
                if isinstance(value, float) and np.isnan(value):
                    record[key] = None
        return records


def run_ensemble(
    config: SolverConfig,
    flux: FluxModel,
    noise,
    u0: SpectralField,
    n_paths: int = EnsembleConfig.N_PATHS,
    seed0: int = EnsembleConfig.MASTER_SEED,
    snapshot_every: int = 10,
    workers: int = 1,
    chunk_size: int = EnsembleConfig.CHUNK_SIZE,
    se_factor: float = HarnessConfig.ENERGY_SE_FACTOR,
    c0_override: Optional[float] = None,
) -> EnergyReport:
    """
    Estimar las normas esperadas y verificar las cotas de energía

    Args:
        config: Parámetros del solver
        flux: Flujo
        noise: Ruido (su constante C_Φ sale de ``energy_constant``)
        u0: Dato inicial
        n_paths: Miembros (semillas seed0..seed0+n_paths−1)
        seed0: Semilla maestra
        snapshot_every: Pasos entre instantes de muestreo
        workers: Procesos del pool
        chunk_size: Miembros por lote vectorizado
        se_factor: Errores estándar tolerados
        c0_override: Valor fijo que sustituye a C₀ (fuerza fallos controlados)

    Returns:
        EnergyReport; los miembros abortados se listan en ``failures``
    """
    u0 = config.grid.dealias(u0)
    seeds = member_seeds(seed0, n_paths)
    logger.info(f"Ensemble de energía: {n_paths} trayectorias, ε={config.epsilon}, δ={config.delta}")
    result = run_members(config, flux, noise, u0, seeds, snapshot_every=snapshot_every,
                         workers=workers, chunk_size=chunk_size, desc="energía")
    if result.failures:
        logger.error(f"{len(result.failures)} trayectorias abortadas")
    ok = result.subset(result.alive)
    if ok.n_members == 0:
        raise EnsembleAbortedError("Todas las trayectorias del ensemble fueron abortadas",
                                   result.failures)

    eps, delta = config.epsilon, config.delta
    times = result.times
    c_phi = float(noise.energy_constant())
    e0 = initial_energy(u0, delta)
    lam_max = float(np.max(ok.max_abs))
    flux_lip, flux_sup_sq = flux.sup_abs_on(config.grid, max(lam_max, 1e-12))

    per_member = {
        "l2_sq": ok.l2_sq,
        "h1_sq": ok.h1_sq,
        "h2_sq": ok.h2_sq,
        "dissipation": eps * ok.grad_integral,
        "energy_lhs": 0.5 * (1 - delta) * ok.l2_sq + 0.5 * delta * ok.h1_sq + eps * ok.grad_integral,
        "higher_lhs": (0.5 * delta * (1 - delta) * ok.h1_sq + 0.5 * delta ** 2 * ok.h2_sq
                       + 0.5 * eps * delta * ok.h2_integral),
        "sup_l2_sq": ok.sup_l2_sq,
        "sup_l2_p4": ok.sup_l2_sq ** 2,
        "dissipation_p4": (eps * ok.grad_integral) ** 2,
    }
    stats, errors = {}, {}
    for name, values in per_member.items():
        stats[name], errors[name] = mean_se(values)

    c0 = bound_c0(times, c_phi, e0)
    if c0_override is not None:
        logger.warning(f"C₀ sustituida por el valor fijo {c0_override}")
        c0 = np.full_like(times, float(c0_override))
    bounds = {
        "C0": c0,
        "C0_tilde": bound_c0_tilde(times, c_phi, u0, config, flux_lip, flux_sup_sq),
        "C0_bar": bound_c0_bar(times, c_phi, e0),
    }
    pass_flags = {
        "energy_bound": bool(np.all(within_bound(stats["energy_lhs"], errors["energy_lhs"],
                                                 bounds["C0"], se_factor))),
        "higher_order_bound": bool(np.all(within_bound(stats["higher_lhs"], errors["higher_lhs"],
                                                       bounds["C0_tilde"], se_factor))),
        "moment_p4_bound": bool(np.all(within_bound(stats["sup_l2_p4"], errors["sup_l2_p4"],
                                                    bounds["C0_bar"], se_factor))),
        "dissipation_p4_bound": bool(np.all(within_bound(
            stats["dissipation_p4"], errors["dissipation_p4"], bounds["C0_bar"], se_factor))),
    }
    additive = None
    if flux.is_zero and isinstance(noise, ConstantNoise):
        additive = _additive_identity(stats, errors, u0, config, noise.sigma, se_factor)
        pass_flags["additive_identity"] = additive["passed"]
    for name, flag in pass_flags.items():
        logger.info(f"  {name}: {'PASS' if flag else 'FAIL'}")

    return EnergyReport(
        times=times,
        n_paths=ok.n_members,
        seeds=seeds,
        stats=stats,
        errors=errors,
        bounds=bounds,
        pass_flags=pass_flags,
        constants={"C_phi": c_phi, "E0": e0, "lambda_max": lam_max,
                   "flux_lipschitz": flux_lip, "flux_sup_l2_sq": flux_sup_sq},
        failures=result.failures,
        additive_identity=additive,
    )


# ==========================================
# ESTABILIDAD
# ==========================================

@dataclass
class CoupledTask:
    config: SolverConfig
    flux: FluxModel
    noise: object
    u0: np.ndarray
    v0: np.ndarray
    seeds: List[int]


def coupled_chunk(task: CoupledTask) -> Tuple[np.ndarray, List[Dict]]:
    """sup_t ||u − v||² por miembro, ambos con los mismos incrementos"""
    config = task.config
    integrator = GalerkinIntegrator(config, task.flux, task.noise)
    grid = config.grid
    increments = wiener_increments(task.seeds, config.dt, config.T, config.dt)
    batch = len(task.seeds)
    u = np.broadcast_to(task.u0 * grid.dealias_mask, (batch,) + grid.shape).copy()
    v = np.broadcast_to(task.v0 * grid.dealias_mask, (batch,) + grid.shape).copy()
    state = np.concatenate([u, v])
    axes = grid.axes
    sup = np.sum(np.abs(u - v) ** 2, axis=axes)
    failed = np.zeros(batch, dtype=bool)
    failures: List[Dict] = []
    for n in range(config.n_steps):
        dW = np.concatenate([increments[:, n], increments[:, n]])
        state, _ = integrator.step(state, dW)
        diff = np.sum(np.abs(state[:batch] - state[batch:]) ** 2, axis=axes)
        bad = ~np.isfinite(diff) & ~failed
        for b in np.flatnonzero(bad):
            failures.append({"seed": int(task.seeds[b]), "step": n + 1,
                             "time": (n + 1) * config.dt, "reason": "diferencia no finita"})
        failed |= bad
        state[np.concatenate([failed, failed])] = 0.0
        sup = np.where(failed, sup, np.maximum(sup, diff))
    sup[failed] = np.nan
    return sup, failures


@dataclass
class StabilityResult:
    """Cociente E sup||u − v||² / ||u₀ − v₀||²"""

    ratio: float
    se: Optional[float]
    initial_distance_sq: float
    identical_initial_data: bool = False
    failures: List[Dict] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {
            "ratio": self.ratio,
            "se": self.se,
            "initial_distance_sq": self.initial_distance_sq,
            "identical_initial_data": self.identical_initial_data,
            "failures": self.failures,
        }


def stability_experiment(
    config: SolverConfig,
    flux: FluxModel,
    noise,
    u0: SpectralField,
    v0: SpectralField,
    n_paths: int = EnsembleConfig.N_PATHS,
    seed0: int = EnsembleConfig.MASTER_SEED,
    workers: int = 1,
    chunk_size: int = EnsembleConfig.CHUNK_SIZE,
) -> StabilityResult:
    """
    Experimento de estabilidad con ruido acoplado

    Returns:
        StabilityResult; si u₀ = v₀ el cociente es 0 y se marca
    """
    mask = config.grid.dealias_mask
    distance_sq = float(np.sum(np.abs((u0.coeffs - v0.coeffs) * mask) ** 2))
    if distance_sq == 0.0:
        logger.warning("u₀ = v₀: cociente de estabilidad indefinido, se devuelve 0")
        return StabilityResult(0.0, None, 0.0, identical_initial_data=True)

    seeds = member_seeds(seed0, n_paths)
    tasks = [CoupledTask(config, flux, noise, u0.coeffs, v0.coeffs, chunk)
             for chunk in chunk_seeds(seeds, chunk_size)]
    parts = map_chunks(coupled_chunk, tasks, workers, desc="estabilidad")
    sup = np.concatenate([p[0] for p in parts])
    failures = [f for p in parts for f in p[1]]
    sup = sup[np.isfinite(sup)]
    if sup.size == 0:
        raise EnsembleAbortedError("Todas las trayectorias acopladas fueron abortadas", failures)
    mean, se = mean_se(sup / distance_sq)
    return StabilityResult(float(mean), None if se is None else float(se), distance_sq,
                           failures=failures)


def stability_sweep(
    config: SolverConfig,
    flux: FluxModel,
    noise,
    u0: SpectralField,
    direction: SpectralField,
    amplitudes: Sequence[float] = HarnessConfig.STABILITY_AMPLITUDES,
    n_paths: int = EnsembleConfig.N_PATHS,
    seed0: int = EnsembleConfig.MASTER_SEED,
    workers: int = 1,
    max_variation: float = HarnessConfig.STABILITY_MAX_VARIATION,
) -> Dict:
    """
    Barrido de ||u₀ − v₀|| sobre varias décadas

    Args:
        direction: Perturbación de norma unitaria; v₀ = u₀ + a·direction

    Returns:
        Diccionario con cocientes, variación max/min y PASS
    """
    unit = direction * (1.0 / np.sqrt(direction.l2_norm_sq()))
    results = []
    for amplitude in amplitudes:
        v0 = u0 + unit * float(amplitude)
        result = stability_experiment(config, flux, noise, u0, v0, n_paths, seed0, workers)
        logger.info(f"  ||u₀ − v₀|| = {amplitude:.0e}: cociente {result.ratio:.4g}")
        results.append(result)
    ratios = np.array([r.ratio for r in results])
    positive = ratios[ratios > 0]
    variation = float(np.max(positive) / np.min(positive)) if positive.size else float("inf")
    return {
        "amplitudes": [float(a) for a in amplitudes],
        "ratios": ratios.tolist(),
        "standard_errors": [r.se for r in results],
        "variation": variation,
        "passed": bool(np.all(np.isfinite(ratios)) and variation < max_variation),
        "failures": [f for r in results for f in r.failures],
    }
