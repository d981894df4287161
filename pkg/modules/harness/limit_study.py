"""
Límite Singular ε, δ -> 0
=========================
Escalera de niveles (ε_k, δ_k) con δ_k/ε_k² acotado, integrada con ruido
acoplado por trayectoria:

- modo ``reference``: cada nivel contra el solver de volúmenes finitos
  (flujo independiente de x)
- modo ``self-convergence``: diferencias de Cauchy entre niveles
  consecutivos con el flujo regularizado f_k

Además de los errores L¹((0,T)×M) se reportan las diferencias de promedios
de velocidad ⟨h, ρ⟩ con ρ = ½χ_{[−L, L]}.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid
from scipy.stats import linregress

from config import EnsembleConfig, KineticConfig, LimitStudyConfig, SolverDefaults
from modules.flux_noise import FluxModel, member_seeds
from modules.galerkin_solver import EnsembleAbortedError, GalerkinIntegrator, SolverConfig
from modules.kinetic_diagnostics import kinetic_from_samples, velocity_average
from modules.reference_fv import FvSolver, block_average, cell_averages, restrict_coeffs
from modules.spectral import SpectralField, TorusGrid

from .ensemble import chunk_seeds, map_chunks, mean_se, wiener_increments

logger = logging.getLogger(__name__)

MODES = ("reference", "self-convergence")


# ==========================================
# ESCALERA DE NIVELES
# ==========================================

@dataclass(frozen=True)
class LimitLevel:
    k: int
    epsilon: float
    delta: float

    @property
    def ratio(self) -> float:
        return self.delta / self.epsilon ** 2


def ladder(k_min: int = LimitStudyConfig.K_MIN, k_max: int = LimitStudyConfig.K_MAX,
           bound: float = LimitStudyConfig.NEPS_BOUND) -> List[LimitLevel]:
    """ε_k = 2^{−k}, δ_k = bound·ε_k² para k = k_min..k_max"""
    if k_max < k_min:
        raise ValueError(f"k_max={k_max} menor que k_min={k_min}")
    return [LimitLevel(k, 2.0 ** (-k), bound * 4.0 ** (-k)) for k in range(k_min, k_max + 1)]


def validate_levels(levels: Sequence[LimitLevel], bound: float = LimitStudyConfig.NEPS_BOUND) -> None:
    """
    Raises:
        ValueError: Nivel no positivo, fuera de (0, 1/2] o con δ/ε² > bound
    """
    if not levels:
        raise ValueError("La escalera de niveles está vacía")
    for level in levels:
        if level.epsilon <= 0 or level.delta <= 0:
            raise ValueError(
                f"Nivel k={level.k}: epsilon={level.epsilon}, delta={level.delta} deben ser > 0"
            )
        if level.epsilon > SolverDefaults.MAX_EPSILON or level.delta > SolverDefaults.MAX_DELTA:
            raise ValueError(f"Nivel k={level.k}: epsilon y delta deben ser <= 1/2")
        if level.ratio > bound * (1.0 + 1e-12):
            raise ValueError(
                f"Nivel k={level.k}: delta/epsilon^2 = {level.ratio:.4g} exceeds bound {bound}"
            )


# ==========================================
# PROMEDIOS DE VELOCIDAD
# ==========================================

def velocity_gap(a: np.ndarray, b: np.ndarray, times: np.ndarray, grid: TorusGrid, L: float,
                 m_lambda: int = KineticConfig.M_LAMBDA,
                 rho: Union[np.ndarray, float] = 0.5) -> np.ndarray:
    """
    ||⟨h_a − h_b, ρ⟩||²_{L²((0,T)×M)} por miembro

    Args:
        a, b: Muestras (B, S, *malla) sobre la malla de ``grid``
        times: Instantes de los snapshots
        grid: Malla de las muestras
        L: Semiancho de la caja en λ
        rho: Pesos en λ (por defecto ½χ_{[−L, L]})
    """
    gaps = np.zeros(a.shape[0])
    for b_idx in range(a.shape[0]):
        ha = kinetic_from_samples(a[b_idx], times, grid, L, m_lambda)
        hb = kinetic_from_samples(b[b_idx], times, grid, L, m_lambda)
        diff = velocity_average(ha, rho) - velocity_average(hb, rho)
        per_time = np.mean(diff ** 2, axis=grid.axes)
        gaps[b_idx] = trapezoid(per_time, times) if len(times) > 1 else float(per_time[0])
    return gaps


def kinetic_compactness(
    series: Sequence[np.ndarray],
    times: np.ndarray,
    grid: TorusGrid,
    L: float,
    ks: Optional[Sequence[int]] = None,
    m_lambda: int = KineticConfig.M_LAMBDA,
    rho: Union[np.ndarray, float] = 0.5,
) -> pd.DataFrame:
    """
    E||⟨h_k, ρ⟩ − ⟨h_{k+1}, ρ⟩||²_{L²_{t,x}} entre niveles consecutivos

    Args:
        series: Muestras por nivel, cada una (B, S, *malla)
        times: Instantes comunes
        grid: Malla de las muestras
        L: Semiancho de la caja en λ
        ks: Índices de nivel (por defecto 0, 1, ...)

    Returns:
        DataFrame con columnas k, k_next, gap_mean, gap_se y decreasing
    """
    ks = list(ks) if ks is not None else list(range(len(series)))
    rows = []
    for j in range(len(series) - 1):
        mean, se = mean_se(velocity_gap(series[j], series[j + 1], times, grid, L, m_lambda, rho))
        rows.append({"k": ks[j], "k_next": ks[j + 1], "gap_mean": float(mean),
                     "gap_se": None if se is None else float(se)})
    frame = pd.DataFrame(rows, columns=["k", "k_next", "gap_mean", "gap_se"])
    frame["decreasing"] = frame["gap_mean"].diff().fillna(-1.0) < 0
    return frame


# ==========================================
# EJECUCIÓN ACOPLADA
# ==========================================

@dataclass
class LimitTask:
    configs: List[SolverConfig]
    fluxes: List[FluxModel]
    noise: object
    u0: np.ndarray
    seeds: List[int]
    snapshot_every: int
    compare_mesh: int
    fv_mesh_n: Optional[int] = None
    reference_flux: Optional[FluxModel] = None
    cfl: float = LimitStudyConfig.CFL


def _space_l1(a: np.ndarray, b: np.ndarray, dim: int) -> np.ndarray:
    return np.mean(np.abs(a - b), axis=tuple(range(-dim, 0)))


def limit_chunk(task: LimitTask) -> Dict:
    """Errores L¹((0,T)×M) y muestras por nivel de un lote de miembros"""
    base = task.configs[0]
    grid = base.grid
    dim = grid.dim
    increments = wiener_increments(task.seeds, base.dt, base.T, base.dt)
    alive = np.ones(len(task.seeds), dtype=bool)
    failures: List[Dict] = []
    fine, coarse = [], []
    times = None

    for config, flux in zip(task.configs, task.fluxes):
        result = GalerkinIntegrator(config, flux, task.noise).run(
            task.u0, increments, seeds=task.seeds, snapshot_every=task.snapshot_every,
            keep_snapshots=True)
        times = result.times
        alive &= result.alive
        failures.extend(result.failures)
        coarse.append(restrict_coeffs(result.snapshots, grid, task.compare_mesh))
        if task.fv_mesh_n is not None:
            fine.append(restrict_coeffs(result.snapshots, grid, task.fv_mesh_n))

    if task.fv_mesh_n is not None:
        solver = FvSolver(task.reference_flux, task.noise, task.fv_mesh_n, base.dt, task.cfl)
        u0_cells = cell_averages(SpectralField(grid, task.u0), task.fv_mesh_n)
        ref = solver.run(u0_cells, increments, snapshot_every=task.snapshot_every).cells
        errors = np.stack([trapezoid(_space_l1(cells, ref, dim), times, axis=-1)
                           for cells in fine], axis=1)
        coarse.append(block_average(ref, task.fv_mesh_n // task.compare_mesh, dim))
    else:
        errors = np.stack([trapezoid(_space_l1(coarse[j], coarse[j + 1], dim), times, axis=-1)
                           for j in range(len(coarse) - 1)], axis=1)

    return {"times": times, "errors": errors, "samples": np.stack(coarse),
            "alive": alive, "failures": failures}


# ==========================================
# REPORTE
# ==========================================

@dataclass
class LimitStudyReport:
    """Errores por nivel, diferencias de promedios de velocidad y tasa empírica"""

    mode: str
    levels: List[LimitLevel]
    errors: np.ndarray
    error_se: Optional[np.ndarray]
    velocity_gaps: np.ndarray
    velocity_gap_se: Optional[np.ndarray]
    compactness: pd.DataFrame
    rate: Optional[float]
    threshold: float
    pass_flags: Dict[str, bool]
    n_paths: int
    seeds: List[int]
    L: float
    failures: List[Dict] = field(default_factory=list)
    # Teorema de convergencia sin tasa: el criterio es un proxy empírico
    criterion: str = "empirical-proxy: monotone decrease + final error threshold"

    @property
    def passed(self) -> bool:
        return all(self.pass_flags.values())

    def to_frame(self) -> pd.DataFrame:
        """Una fila por error reportado (nivel o par de niveles)"""
        ks = [lv.k for lv in self.levels]
        labels = ks if self.mode == "reference" else ks[:-1]
        frame = pd.DataFrame({
            "k": labels,
            "epsilon": [self.levels[ks.index(k)].epsilon for k in labels],
            "delta": [self.levels[ks.index(k)].delta for k in labels],
            "l1_error": self.errors,
            "l1_error_se": (self.error_se if self.error_se is not None
                            else np.full(len(labels), np.nan)),
        })
        if self.mode == "reference":
            frame["velocity_gap"] = self.velocity_gaps
            frame["velocity_gap_se"] = (self.velocity_gap_se if self.velocity_gap_se is not None
                                        else np.full(len(labels), np.nan))
        return frame

    def to_dict(self) -> Dict:
        return {
            "mode": self.mode,
            "levels": [{"k": lv.k, "epsilon": lv.epsilon, "delta": lv.delta} for lv in self.levels],
            "errors": self.errors.tolist(),
            "error_se": None if self.error_se is None else self.error_se.tolist(),
            "velocity_gaps": self.velocity_gaps.tolist(),
            "velocity_gap_se": (None if self.velocity_gap_se is None
                                else self.velocity_gap_se.tolist()),
            "kinetic_compactness": self.compactness.to_dict(orient="records"),
            "rate": self.rate,
            "threshold": self.threshold,
            "criterion": self.criterion,
            "L": self.L,
            "n_paths": self.n_paths,
            "failures": self.failures,
        }


def _empirical_rate(epsilons: Sequence[float], errors: np.ndarray) -> Optional[float]:
    epsilons = np.asarray(epsilons, dtype=float)
    keep = errors > 0
    if np.count_nonzero(keep) < 2:
        return None
    return float(linregress(np.log(epsilons[keep]), np.log(errors[keep])).slope)


def limit_study(
    levels: Sequence[LimitLevel],
    base_config: SolverConfig,
    flux: FluxModel,
    noise,
    u0: SpectralField,
    n_paths: int = EnsembleConfig.N_PATHS,
    seed0: int = EnsembleConfig.MASTER_SEED,
    mode: str = LimitStudyConfig.MODE,
    bound: float = LimitStudyConfig.NEPS_BOUND,
    fv_mesh_n: int = LimitStudyConfig.FV_MESH_N,
    cfl: float = LimitStudyConfig.CFL,
    snapshot_interval: float = LimitStudyConfig.SNAPSHOT_INTERVAL,
    threshold: float = LimitStudyConfig.FINAL_ERROR_THRESHOLD,
    L: Optional[float] = None,
    m_lambda: int = KineticConfig.M_LAMBDA,
    workers: int = 1,
    chunk_size: int = EnsembleConfig.CHUNK_SIZE,
) -> LimitStudyReport:
    """
    Estudio del límite singular con ruido acoplado

    Args:
        levels: Escalera (k, ε_k, δ_k)
        base_config: Malla, dt y T comunes (ε, δ se sustituyen por nivel)
        flux: Flujo (cada nivel usa ``flux.regularize(k)``)
        noise: Ruido
        u0: Dato inicial
        n_paths: Miembros acoplados
        seed0: Semilla maestra
        mode: ``reference`` o ``self-convergence``
        bound: Cota de δ_k/ε_k²
        fv_mesh_n: Celdas por eje del solver de referencia
        cfl: Constante CFL del solver de referencia
        snapshot_interval: Separación temporal de las muestras
        threshold: Umbral del error final
        L: Caja en λ (por defecto 1.25·max|u| sobre el ensemble)

    Returns:
        LimitStudyReport

    Raises:
        ValueError: Niveles inválidos, modo desconocido o mallas incompatibles
        CflViolationError: Si el paso común viola la CFL del solver de referencia
    """
    if mode not in MODES:
        raise ValueError(f"Modo desconocido '{mode}'. Opciones: {list(MODES)}")
    validate_levels(levels, bound)
    if mode == "self-convergence" and len(levels) < 2:
        raise ValueError("El modo self-convergence requiere al menos dos niveles")
    configs = [replace(base_config, epsilon=lv.epsilon, delta=lv.delta) for lv in levels]
    for config in configs:
        config.check_scaling(bound)

    grid = base_config.grid
    compare_mesh = grid.n_per_axis
    reference = mode == "reference"
    if reference:
        if flux.x_dependent:
            logger.warning(
                f"Flujo '{flux.name}' dependiente de x en modo reference: la solución que "
                "selecciona el esquema de volúmenes finitos no está caracterizada"
            )
        if fv_mesh_n % compare_mesh != 0:
            raise ValueError(
                f"fv_mesh_n={fv_mesh_n} debe ser múltiplo de n_per_axis={compare_mesh}"
            )

    u0 = grid.dealias(u0)
    fluxes = [flux.regularize(lv.k) for lv in levels]
    snapshot_every = max(1, int(round(snapshot_interval / base_config.dt)))
    seeds = member_seeds(seed0, n_paths)
    logger.info(f"Límite singular ({mode}): niveles k={[lv.k for lv in levels]}, "
                f"{n_paths} trayectorias acopladas")

    tasks = [LimitTask(configs, fluxes, noise, u0.coeffs, chunk, snapshot_every, compare_mesh,
                       fv_mesh_n if reference else None, flux if reference else None, cfl)
             for chunk in chunk_seeds(seeds, chunk_size)]
    parts = map_chunks(limit_chunk, tasks, workers, desc="límite")

    times = parts[0]["times"]
    alive = np.concatenate([p["alive"] for p in parts])
    failures = [f for p in parts for f in p["failures"]]
    if failures:
        logger.error(f"{len(failures)} miembros abortados; se excluyen de todos los niveles")
    if not np.any(alive):
        raise EnsembleAbortedError("Todas las trayectorias del estudio de límite fueron abortadas",
                                   failures)
    errors_all = np.concatenate([p["errors"] for p in parts])[alive]
    samples = np.concatenate([p["samples"] for p in parts], axis=1)[:, alive]

    errors, error_se = mean_se(errors_all)
    if L is None:
        L = KineticConfig.L_FACTOR * max(float(np.max(np.abs(samples))), 1e-12)
    compare_grid = TorusGrid(grid.dim, compare_mesh)
    ks = [lv.k for lv in levels]
    level_samples = [samples[j] for j in range(len(levels))]

    if reference:
        gaps = np.stack([velocity_gap(s, samples[-1], times, compare_grid, L, m_lambda)
                         for s in level_samples], axis=1)
        velocity_gaps, velocity_gap_se = mean_se(gaps)
        epsilons = [lv.epsilon for lv in levels]
    else:
        velocity_gaps, velocity_gap_se = np.zeros(0), None
        epsilons = [lv.epsilon for lv in levels[:-1]]
    compactness = kinetic_compactness(level_samples, times, compare_grid, L, ks, m_lambda)

    errors = np.atleast_1d(errors)
    pass_flags = {
        "errors_nonincreasing": bool(np.all(np.diff(errors) <= 0)),
        "final_below_threshold": bool(errors[-1] < threshold),
        "velocity_average_decreasing": bool(np.all(np.diff(compactness["gap_mean"].to_numpy()) < 0)),
    }
    rate = _empirical_rate(epsilons, errors)
    for j, err in enumerate(errors):
        logger.info(f"  error L¹ [{j}] = {err:.4e}")
    for name, flag in pass_flags.items():
        logger.info(f"  {name}: {'PASS' if flag else 'FAIL'}")

    return LimitStudyReport(
        mode=mode,
        levels=list(levels),
        errors=errors,
        error_se=error_se,
        velocity_gaps=np.atleast_1d(velocity_gaps),
        velocity_gap_se=velocity_gap_se,
        compactness=compactness,
        rate=rate,
        threshold=threshold,
        pass_flags=pass_flags,
        n_paths=int(np.count_nonzero(alive)),
        seeds=seeds,
        L=float(L),
        failures=failures,
    )
