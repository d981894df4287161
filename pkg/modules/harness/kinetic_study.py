"""
Estudio Cinético
================
Módulo de traslación temporal esperado de h = sign(u − λ) sobre un ensemble,
comprobación de las identidades cinéticas y histograma de disipación en λ.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.stats import linregress

from config import EnsembleConfig, KineticConfig
from modules.flux_noise import FluxModel, member_seeds
from modules.galerkin_solver import EnsembleAbortedError, SolverConfig
from modules.kinetic_diagnostics import (
    default_sobolev_order,
    dissipation_from_coeffs,
    kinetic_from_samples,
    translation_modulus,
    truncation_reconstruct,
)
from modules.spectral import SpectralField, TorusGrid

from .ensemble import mean_se, run_members

logger = logging.getLogger(__name__)


def kinetic_identity_check(grid: TorusGrid, n_fields: int = 100, L: float = 1.0,
                           m_lambda: int = KineticConfig.M_LAMBDA, seed: int = 0) -> Dict:
    """
    Identidades de la función cinética sobre campos aleatorios

    Para cada campo u con max|u| <= L: h es ±1 y no creciente en λ, y
    |T_L(u) − u| no supera una celda en λ.

    Returns:
        Diccionario con el error máximo, el ancho de celda y los flags
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    valid = True
    for _ in range(n_fields):
        samples = grid.random_field(rng).to_physical()
        samples = 0.9 * L * samples / max(float(np.max(np.abs(samples))), 1e-300)
        h = kinetic_from_samples(samples[None], np.zeros(1), grid, L, m_lambda)
        valid &= h.is_valid()
        worst = max(worst, float(np.max(np.abs(truncation_reconstruct(h)[0] - samples))))
    cell = 2.0 * L / m_lambda
    return {
        "n_fields": n_fields,
        "max_truncation_error": worst,
        "lambda_cell_width": cell,
        "truncation_within_cell": bool(worst <= cell),
        "sign_structure": bool(valid),
    }


@dataclass
class TranslationReport:
    """E[módulo de traslación] por θ, pendiente log-log e histograma de disipación"""

    thetas: List[float]
    modulus_mean: np.ndarray
    modulus_se: Optional[np.ndarray]
    slope: float
    min_slope: float
    L: float
    N: int
    m_lambda: int
    identities: Dict
    dissipation: pd.DataFrame
    n_paths: int
    seeds: List[int]
    failures: List[Dict] = field(default_factory=list)

    @property
    def pass_flags(self) -> Dict[str, bool]:
        return {
            "translation_slope": bool(self.slope >= self.min_slope),
            "truncation_within_cell": self.identities["truncation_within_cell"],
            "sign_structure": self.identities["sign_structure"],
        }

    @property
    def passed(self) -> bool:
        return all(self.pass_flags.values())

    def to_frame(self) -> pd.DataFrame:
        """Tabla (theta, modulus_mean, modulus_se)"""
        se = self.modulus_se if self.modulus_se is not None else np.full(len(self.thetas), np.nan)
        return pd.DataFrame({"theta": self.thetas, "modulus_mean": self.modulus_mean,
                             "modulus_se": se})

    def to_dict(self) -> Dict:
        return {
            "thetas": self.thetas,
            "modulus_mean": self.modulus_mean.tolist(),
            "modulus_se": None if self.modulus_se is None else self.modulus_se.tolist(),
            "slope": self.slope,
            "min_slope": self.min_slope,
            "L": self.L,
            "N": self.N,
            "m_lambda": self.m_lambda,
            "identities": self.identities,
            "n_paths": self.n_paths,
            "failures": self.failures,
        }


def translation_study(
    config: SolverConfig,
    flux: FluxModel,
    noise,
    u0: SpectralField,
    n_paths: int = EnsembleConfig.N_PATHS,
    seed0: int = EnsembleConfig.MASTER_SEED,
    snapshot_every: int = 10,
    theta_multiples: Sequence[int] = KineticConfig.THETA_MULTIPLES,
    m_lambda: int = KineticConfig.M_LAMBDA,
    L: Optional[float] = None,
    N: Optional[int] = None,
    min_slope: float = KineticConfig.MIN_TRANSLATION_SLOPE,
    workers: int = 1,
    chunk_size: int = EnsembleConfig.CHUNK_SIZE,
) -> TranslationReport:
    """
    Escalamiento en θ del módulo de traslación temporal

    Args:
        config: Parámetros del solver
        flux: Flujo
        noise: Ruido
        u0: Dato inicial
        n_paths: Miembros del ensemble
        seed0: Semilla maestra
        snapshot_every: Pasos entre snapshots (Δ = snapshot_every·dt)
        theta_multiples: θ en múltiplos de Δ
        m_lambda: Puntos de la retícula en λ
        L: Caja en λ (por defecto 1.25·max|u| sobre el ensemble)
        N: Orden de la norma negativa
        min_slope: Pendiente mínima para PASS

    Returns:
        TranslationReport
    """
    seeds = member_seeds(seed0, n_paths)
    grid = config.grid
    u0 = grid.dealias(u0)
    result = run_members(config, flux, noise, u0, seeds, snapshot_every=snapshot_every,
                         keep_snapshots=True, workers=workers, chunk_size=chunk_size,
                         desc="cinética")
    ok = result.subset(result.alive)
    if ok.n_members == 0:
        raise EnsembleAbortedError("Todas las trayectorias del estudio cinético fueron abortadas",
                                   result.failures)

    times = ok.times
    spacing = float(times[1] - times[0])
    horizon = float(times[-1] - times[0])
    multiples = [m for m in theta_multiples if m * spacing <= horizon * (1.0 + 1e-12)]
    if len(multiples) < 2:
        raise ValueError(f"Se requieren al menos dos θ <= T; múltiplos válidos: {multiples}")
    thetas = [m * spacing for m in multiples]

    physical = grid.ifft(ok.snapshots)
    if L is None:
        L = KineticConfig.L_FACTOR * max(float(np.max(np.abs(physical))), 1e-12)
    N = default_sobolev_order(grid.dim) if N is None else N

    moduli = np.zeros((ok.n_members, len(thetas)))
    bins = np.zeros(m_lambda)
    valid = True
    for b in range(ok.n_members):
        h = kinetic_from_samples(physical[b], times, grid, L, m_lambda)
        valid &= h.is_valid()
        for j, theta in enumerate(thetas):
            moduli[b, j] = translation_modulus(h, theta, N)
        measure = dissipation_from_coeffs(ok.snapshots[b], times, grid, config.epsilon, L, m_lambda)
        bins += measure.histogram() / ok.n_members

    mean, se = mean_se(moduli)
    fit = linregress(np.log(thetas), np.log(np.maximum(mean, 1e-300)))
    identities = kinetic_identity_check(grid, L=1.0, m_lambda=m_lambda)
    identities["sign_structure"] = bool(identities["sign_structure"] and valid)

    lam = measure.lambda_grid
    dissipation = pd.DataFrame({"lambda": lam, "mass_mean": bins})
    logger.info(f"Pendiente del módulo de traslación {fit.slope:.3f} (mínimo {min_slope})")
    return TranslationReport(
        thetas=thetas,
        modulus_mean=mean,
        modulus_se=se,
        slope=float(fit.slope),
        min_slope=min_slope,
        L=float(L),
        N=int(N),
        m_lambda=m_lambda,
        identities=identities,
        dissipation=dissipation,
        n_paths=ok.n_members,
        seeds=seeds,
        failures=result.failures,
    )
