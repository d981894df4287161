"""
Configuración de Corridas
=========================
Archivo YAML de corrida -> RunConfig validado. Los valores por defecto salen
de ``config.py``; las claves desconocidas son errores. Todas las
restricciones físicas (ε, δ ∈ (0, 1/2], δ_k/ε_k² <= cota) se verifican aquí,
antes de cualquier cálculo.

Esquema (todas las secciones son opcionales salvo ``experiment``)::

    experiment: energy-check
    flux: {preset: burgers1d, params: {}}
    noise: {preset: noise-linear, params: {coeff: 0.2}}
    solver: {epsilon: 0.05, delta: 0.0025, n_per_axis: 64, dt: 1.0e-3, T: 1.0, dim: 1}
    initial_condition: {kind: sine, amplitude: 1.0, wavenumber: 1}
    ensemble: {n_paths: 64, seed: 20240601, threads: null, chunk_size: 64}
    output: {dir: results/run, snapshot_every: 10, csv: true}
    thresholds: {...}
    energy | stability | limit_study | kinetic | nondegeneracy | convergence: {...}
"""

import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Type, Union

import yaml

from config import (
    EnsembleConfig,
    FluxDefaults,
    HarnessConfig,
    KineticConfig,
    LimitStudyConfig,
    NoiseDefaults,
    NondegeneracyConfig,
    RESULTS_DIR,
    SolverDefaults,
)
from modules.flux_noise import FLUX_DIMS, FluxModel, make_flux, make_noise
from modules.galerkin_solver import SolverConfig
from modules.harness.initial_data import InitialCondition
from modules.harness.limit_study import LimitLevel, ladder, validate_levels

logger = logging.getLogger(__name__)

EXPERIMENTS = (
    "simulate",
    "energy-check",
    "stability-check",
    "limit-study",
    "kinetic-diag",
    "nondegeneracy",
    "convergence-check",
)


class ConfigError(ValueError):
    """Configuración inválida: clave desconocida, faltante o restricción violada"""


# ==========================================
# SECCIONES
# ==========================================

@dataclass
class ModelSection:
    """Preset con parámetros (flujo o ruido)"""

    preset: str
    params: Dict[str, Any] = field(default_factory=dict)


@dataclass
class EnsembleSection:
    n_paths: int = EnsembleConfig.N_PATHS
    seed: int = EnsembleConfig.MASTER_SEED
    threads: Optional[int] = None
    chunk_size: int = EnsembleConfig.CHUNK_SIZE


@dataclass
class OutputSection:
    dir: str = str(RESULTS_DIR)
    snapshot_every: int = SolverDefaults.SNAPSHOT_EVERY
    csv: bool = True


@dataclass
class ThresholdSection:
    """Umbrales de PASS"""

    energy_se_factor: float = HarnessConfig.ENERGY_SE_FACTOR
    stability_max_variation: float = HarnessConfig.STABILITY_MAX_VARIATION
    strong_order_target: float = HarnessConfig.STRONG_ORDER_TARGET
    strong_order_tol: float = HarnessConfig.STRONG_ORDER_TOL
    weak_residual_min_factor: float = HarnessConfig.WEAK_RESIDUAL_MIN_FACTOR
    min_translation_slope: float = KineticConfig.MIN_TRANSLATION_SLOPE
    final_error_threshold: float = LimitStudyConfig.FINAL_ERROR_THRESHOLD
    neps_bound: float = LimitStudyConfig.NEPS_BOUND


@dataclass
class EnergySection:
    c0_override: Optional[float] = None


@dataclass
class StabilitySection:
    amplitudes: List[float] = field(default_factory=lambda: list(HarnessConfig.STABILITY_AMPLITUDES))
    perturbation_seed: int = 1


@dataclass
class LimitStudySection:
    k_min: int = LimitStudyConfig.K_MIN
    k_max: int = LimitStudyConfig.K_MAX
    levels: Optional[List[Dict[str, float]]] = None
    mode: str = LimitStudyConfig.MODE
    fv_mesh_n: int = LimitStudyConfig.FV_MESH_N
    cfl: float = LimitStudyConfig.CFL
    snapshot_interval: float = LimitStudyConfig.SNAPSHOT_INTERVAL
    m_lambda: int = KineticConfig.M_LAMBDA


@dataclass
class KineticSection:
    m_lambda: int = KineticConfig.M_LAMBDA
    L: Optional[float] = None
    N: Optional[int] = None
    theta_multiples: List[int] = field(default_factory=lambda: list(KineticConfig.THETA_MULTIPLES))


@dataclass
class NondegeneracySection:
    etas: List[float] = field(default_factory=lambda: list(NondegeneracyConfig.ETAS))
    lambda_box: List[float] = field(default_factory=lambda: list(NondegeneracyConfig.LAMBDA_BOX))
    sphere_samples: int = NondegeneracyConfig.SPHERE_SAMPLES
    m_lambda: int = NondegeneracyConfig.M_LAMBDA
    grid_n: int = NondegeneracyConfig.GRID_N
    stokes_trials: int = NondegeneracyConfig.STOKES_TRIALS


@dataclass
class ConvergenceSection:
    dts: List[float] = field(default_factory=lambda: [1e-2, 1e-3, 1e-4])
    reference_dt: float = 1e-5
    weak_paths: int = 8
    refinement: int = 4


EXPERIMENT_SECTIONS: Dict[str, Tuple[str, Type]] = {
    "energy-check": ("energy", EnergySection),
    "stability-check": ("stability", StabilitySection),
    "limit-study": ("limit_study", LimitStudySection),
    "kinetic-diag": ("kinetic", KineticSection),
    "nondegeneracy": ("nondegeneracy", NondegeneracySection),
    "convergence-check": ("convergence", ConvergenceSection),
}

TOP_LEVEL_KEYS = {
    "experiment", "flux", "noise", "solver", "initial_condition", "ensemble", "output",
    "thresholds",
} | {name for name, _ in EXPERIMENT_SECTIONS.values()}


def _build(cls: Type, data: Optional[Dict], section: str):
    """Instanciar una sección rechazando claves desconocidas"""
    data = data or {}
    if not isinstance(data, dict):
        raise ConfigError(f"La sección '{section}' debe ser un mapeo clave/valor")
    allowed = {f.name for f in fields(cls)}
    for key in data:
        if key not in allowed:
            raise ConfigError(f"Clave desconocida '{key}' en la sección '{section}'. "
                              f"Claves válidas: {sorted(allowed)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{section}: {e}") from e


# ==========================================
# RUNCONFIG
# ==========================================

@dataclass
class RunConfig:
    """Configuración validada de una corrida"""

    experiment: str
    flux: ModelSection
    noise: ModelSection
    solver: SolverConfig
    initial_condition: InitialCondition
    ensemble: EnsembleSection
    output: OutputSection
    thresholds: ThresholdSection
    section: Optional[Any] = None

    # ==========================================
    # Construcción de modelos
    # ==========================================

    def build_flux(self) -> FluxModel:
        return make_flux(self.flux.preset, **self.flux.params)

    def build_noise(self):
        return make_noise(self.noise.preset, **self.noise.params)

    def levels(self) -> List[LimitLevel]:
        """Escalera del estudio de límite (explícita o ε_k = 2^{−k}, δ_k = cota·ε_k²)"""
        sec = self.section
        if sec.levels is not None:
            return [LimitLevel(int(lv.get("k", j)), float(lv["epsilon"]), float(lv["delta"]))
                    for j, lv in enumerate(sec.levels)]
        return ladder(sec.k_min, sec.k_max, self.thresholds.neps_bound)

    @property
    def out_dir(self) -> Path:
        return Path(self.output.dir)

    # ==========================================
    # Serialización
    # ==========================================

    def to_dict(self) -> Dict:
        """Configuración completa (forma aceptada por parse_config)"""
        data = {
            "experiment": self.experiment,
            "flux": asdict(self.flux),
            "noise": asdict(self.noise),
            "solver": self.solver.to_dict(),
            "initial_condition": self.initial_condition.to_dict(),
            "ensemble": asdict(self.ensemble),
            "output": asdict(self.output),
            "thresholds": asdict(self.thresholds),
        }
        if self.section is not None:
            name, _ = EXPERIMENT_SECTIONS[self.experiment]
            data[name] = asdict(self.section)
        return data

    def echo(self) -> Dict:
        """
        Eco para los reportes: sin directorio de salida ni número de procesos,
        que no afectan a los resultados
        """
        data = self.to_dict()
        data["output"].pop("dir")
        data["ensemble"].pop("threads")
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "RunConfig":
        return parse_config(data)

    def save(self, path: Union[str, Path]) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            yaml.safe_dump(self.to_dict(), f, sort_keys=True, allow_unicode=True)
        logger.info(f"Configuración guardada en {path}")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RunConfig":
        return parse_config(path)


# ==========================================
# PARSEO
# ==========================================

def _read_yaml(path: Union[str, Path]) -> Dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Archivo de configuración no encontrado: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"YAML inválido en {path}: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: el documento debe ser un mapeo de secciones")
    return data


def _default_flux(dim: int) -> Dict:
    return {"preset": FluxDefaults.DEFAULT_PRESET if dim == 1 else "stream2d-smooth"}


def parse_config(
    source: Union[str, Path, Dict, None] = None,
    experiment: Optional[str] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> RunConfig:
    """
    Leer y validar una configuración de corrida

    Args:
        source: Ruta al YAML, diccionario ya cargado o None (solo valores por defecto)
        experiment: Experimento pedido por la línea de comandos
        overrides: Escalares de la línea de comandos (seed, out, paths, threads)

    Returns:
        RunConfig completamente validado

    Raises:
        ConfigError: Clave desconocida o faltante, o restricción violada
    """
    if source is None:
        data: Dict = {}
    elif isinstance(source, dict):
        data = dict(source)
    else:
        data = _read_yaml(source)

    for key in data:
        if key not in TOP_LEVEL_KEYS:
            raise ConfigError(f"Sección desconocida '{key}'. Secciones válidas: {sorted(TOP_LEVEL_KEYS)}")

    file_experiment = data.get("experiment")
    if experiment and file_experiment and experiment != file_experiment:
        raise ConfigError(
            f"El archivo declara experiment='{file_experiment}' pero se pidió '{experiment}'"
        )
    experiment = experiment or file_experiment
    if experiment is None:
        raise ConfigError("Falta la clave requerida 'experiment'")
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"Experimento desconocido '{experiment}'. Opciones: {list(EXPERIMENTS)}")

    solver_data = dict(data.get("solver") or {})
    solver = _build(SolverConfig, solver_data, "solver")

    flux = _build(ModelSection, data.get("flux") or _default_flux(solver.dim), "flux")
    noise = _build(ModelSection, data.get("noise") or {"preset": NoiseDefaults.DEFAULT_PRESET},
                   "noise")
    initial = _build(InitialCondition, data.get("initial_condition"), "initial_condition")
    ensemble = _build(EnsembleSection, data.get("ensemble"), "ensemble")
    output = _build(OutputSection, data.get("output"), "output")
    thresholds = _build(ThresholdSection, data.get("thresholds"), "thresholds")

    section = None
    if experiment in EXPERIMENT_SECTIONS:
        name, cls = EXPERIMENT_SECTIONS[experiment]
        section = _build(cls, data.get(name), name)
    for other, _ in EXPERIMENT_SECTIONS.values():
        if other in data and (section is None or other != EXPERIMENT_SECTIONS[experiment][0]):
            raise ConfigError(f"La sección '{other}' no corresponde al experimento '{experiment}'")

    config = RunConfig(experiment, flux, noise, solver, initial, ensemble, output, thresholds,
                       section)
    if overrides:
        apply_overrides(config, overrides)
    validate(config)
    return config


def apply_overrides(config: RunConfig, overrides: Dict[str, Any]) -> None:
    """Sobrescribir escalares desde la línea de comandos (None = sin cambio)"""
    if overrides.get("seed") is not None:
        config.ensemble.seed = int(overrides["seed"])
    if overrides.get("paths") is not None:
        config.ensemble.n_paths = int(overrides["paths"])
    if overrides.get("threads") is not None:
        config.ensemble.threads = int(overrides["threads"])
    if overrides.get("out") is not None:
        config.output.dir = str(overrides["out"])


def validate(config: RunConfig) -> None:
    """
    Restricciones cruzadas entre secciones

    Raises:
        ConfigError: Con la restricción violada
    """
    try:
        flux = config.build_flux()
        config.build_noise()
    except ValueError as e:
        raise ConfigError(str(e)) from e
    if FLUX_DIMS[config.flux.preset] != config.solver.dim:
        raise ConfigError(
            f"El flujo '{config.flux.preset}' es de dimensión {flux.dim} "
            f"pero solver.dim = {config.solver.dim}"
        )
    if config.initial_condition.kind == "product" and config.solver.dim != 2:
        raise ConfigError("El dato inicial 'product' requiere solver.dim = 2")

    ens = config.ensemble
    if ens.n_paths < 1:
        raise ConfigError(f"ensemble.n_paths debe ser >= 1, recibido {ens.n_paths}")
    if ens.threads is not None and ens.threads < 1:
        raise ConfigError(f"ensemble.threads debe ser >= 1, recibido {ens.threads}")
    if ens.chunk_size < 1:
        raise ConfigError(f"ensemble.chunk_size debe ser >= 1, recibido {ens.chunk_size}")
    if config.output.snapshot_every < 1:
        raise ConfigError("output.snapshot_every debe ser >= 1")

    sec = config.section
    if config.experiment == "limit-study":
        if sec.mode not in ("reference", "self-convergence"):
            raise ConfigError(f"limit_study.mode desconocido '{sec.mode}'")
        if sec.levels is not None:
            for lv in sec.levels:
                if not isinstance(lv, dict) or not {"epsilon", "delta"} <= set(lv):
                    raise ConfigError("limit_study.levels: cada nivel requiere epsilon y delta")
        try:
            validate_levels(config.levels(), config.thresholds.neps_bound)
        except ValueError as e:
            raise ConfigError(
                f"limit_study: {e} (condición neps: δ_k/ε_k² <= thresholds.neps_bound = "
                f"{config.thresholds.neps_bound})"
            ) from e
    elif config.experiment == "stability-check":
        if any(a <= 0 for a in sec.amplitudes):
            raise ConfigError("stability.amplitudes deben ser > 0")
    elif config.experiment == "kinetic-diag":
        if sec.m_lambda < 8:
            raise ConfigError(f"kinetic.m_lambda debe ser >= 8, recibido {sec.m_lambda}")
        if sec.L is not None and sec.L <= 0:
            raise ConfigError("kinetic.L debe ser > 0")
    elif config.experiment == "nondegeneracy":
        if len(sec.lambda_box) != 2 or sec.lambda_box[1] <= sec.lambda_box[0]:
            raise ConfigError(f"nondegeneracy.lambda_box inválida: {sec.lambda_box}")
        if any(e < 0 for e in sec.etas):
            raise ConfigError("nondegeneracy.etas deben ser >= 0")
    elif config.experiment == "convergence-check":
        for dt in list(sec.dts) + [sec.reference_dt]:
            if dt <= 0:
                raise ConfigError(f"convergence: dt debe ser > 0, recibido {dt}")
            steps = round(config.solver.T / dt)
            if abs(steps * dt - config.solver.T) > 1e-9 * config.solver.T:
                raise ConfigError(f"convergence: T={config.solver.T} no es múltiplo de dt={dt}")
        if sec.refinement < 2:
            raise ConfigError("convergence.refinement debe ser >= 2")
