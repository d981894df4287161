"""
Diagnósticos Cinéticos
======================
Función cinética h(t, x, λ) = sign(u(t, x) − λ) (con sign(0) = +1) sobre
una retícula (tiempo, espacio, velocidad) y sus derivados:
- Reconstrucción por truncamiento T_L(u) = ½∫_{−L}^{L} h dλ
- Promedios de velocidad ⟨h, ρ⟩
- Densidad de disipación ε|∇u|², resuelta en λ por binning
- Norma H^{−N}(M × [−L, L]) (Fourier en x, coseno en λ)
- Módulo de traslación temporal sup_τ ∫ ||h(t+τ) − h(t)||_{H^{−N}} dt
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy import fft as sfft
from scipy.integrate import trapezoid

from config import KineticConfig
from modules.spectral import TWO_PI, TorusGrid

logger = logging.getLogger(__name__)


def default_sobolev_order(dim: int) -> int:
    """N = ceil(d/2 + 3)"""
    if KineticConfig.SOBOLEV_N is not None:
        return int(KineticConfig.SOBOLEV_N)
    return int(math.ceil(dim / 2.0 + 3.0))


def lambda_lattice(L: float, m_lambda: int) -> np.ndarray:
    """Retícula centrada en celdas sobre [−L, L]"""
    spacing = 2.0 * L / m_lambda
    return -L + (np.arange(m_lambda) + 0.5) * spacing


@dataclass(eq=False)
class KineticField:
    """h(t, x, λ) ∈ {−1, +1} con λ en el último eje"""

    times: np.ndarray
    grid: TorusGrid
    lambda_grid: np.ndarray
    L: float
    values: np.ndarray = field(repr=False)     # int8 (S, *shape, m)
    clipped: bool = False

    @property
    def m_lambda(self) -> int:
        return self.lambda_grid.shape[0]

    @property
    def d_lambda(self) -> float:
        """Paso de la retícula; un único punto cubre toda la caja"""
        lattice = 2.0 * self.L / self.m_lambda
        if self.m_lambda < 2:
            return lattice
        step = float(self.lambda_grid[1] - self.lambda_grid[0])
        return lattice if abs(step - lattice) <= 1e-12 * lattice else step

    def is_valid(self) -> bool:
        """±1 y no creciente en λ"""
        values_ok = bool(np.all(np.abs(self.values) == 1))
        monotone = bool(np.all(np.diff(self.values, axis=-1) <= 0))
        return values_ok and monotone


def kinetic_from_samples(samples: np.ndarray, times: np.ndarray, grid: TorusGrid, L: float,
                         m_lambda: int = KineticConfig.M_LAMBDA,
                         lambda_grid: Optional[np.ndarray] = None) -> KineticField:
    """
    Construir h = sign(u − λ) desde muestras físicas (S, *shape)

    Args:
        samples: Valores u(t_s, x_j)
        times: Instantes de los snapshots
        grid: Malla espectral
        L: Semiancho de la caja en λ
        m_lambda: Puntos de la retícula (>= 8) si no se da ``lambda_grid``
        lambda_grid: Retícula explícita (opcional)

    Returns:
        KineticField; ``clipped`` indica max|u| >= L
    """
    if L <= 0:
        raise ValueError(f"L debe ser > 0, recibido {L}")
    if lambda_grid is None:
        if m_lambda < 8:
            raise ValueError(f"m_lambda debe ser >= 8, recibido {m_lambda}")
        lambda_grid = lambda_lattice(L, m_lambda)
    lambda_grid = np.asarray(lambda_grid, dtype=float)
    if lambda_grid.ndim != 1 or lambda_grid.size == 0:
        raise ValueError("lambda_grid debe ser un vector no vacío")
    steps = np.diff(lambda_grid)
    if steps.size and (np.any(steps <= 0) or np.ptp(steps) > 1e-9 * steps[0]):
        raise ValueError("lambda_grid debe ser creciente y uniforme")

    samples = np.asarray(samples, dtype=float)
    clipped = bool(np.max(np.abs(samples)) >= L)
    if clipped:
        logger.warning(f"max|u| = {np.max(np.abs(samples)):.4g} >= L = {L:.4g}: h se trunca")
    values = np.where(samples[..., None] >= lambda_grid, 1, -1).astype(np.int8)
    return KineticField(np.asarray(times, dtype=float), grid, lambda_grid, float(L), values, clipped)


def kinetic_of(u_path, L: float, m_lambda: int = KineticConfig.M_LAMBDA,
               lambda_grid: Optional[np.ndarray] = None) -> KineticField:
    """h_k = sign(u_k − λ) sobre los snapshots de una SolutionPath"""
    return kinetic_from_samples(u_path.physical(), u_path.times, u_path.grid, L,
                                m_lambda, lambda_grid)


def truncation_reconstruct(h: KineticField) -> np.ndarray:
    """T_L(u) = ½ Σ_i h(λ_i) Δλ; error <= L/m_λ puntual"""
    return 0.5 * np.sum(h.values, axis=-1, dtype=float) * h.d_lambda


def velocity_average(h: KineticField, rho: Union[np.ndarray, float]) -> np.ndarray:
    """⟨h, ρ⟩ = Σ_i h(λ_i) ρ(λ_i) Δλ sobre (t, x)"""
    rho = np.broadcast_to(np.asarray(rho, dtype=float), h.lambda_grid.shape)
    return np.tensordot(h.values.astype(float), rho, axes=([-1], [0])) * h.d_lambda


def truncation_weights(h: KineticField) -> np.ndarray:
    """ρ = ½χ_{[−L, L]} sobre la retícula"""
    return np.full(h.m_lambda, 0.5)


# ==========================================
# DISIPACIÓN
# ==========================================

@dataclass
class DissipationMeasure:
    """Densidad ε|∇u|² y su histograma en λ por snapshot"""

    times: np.ndarray
    density: np.ndarray          # (S, *shape)
    per_time: np.ndarray         # ε||∇u(t)||² (S,)
    binned: np.ndarray           # (S, m)
    lambda_grid: np.ndarray

    @property
    def total_mass(self) -> float:
        """ε∫₀ᵀ ||∇u||² dt (trapecios sobre los snapshots)"""
        if len(self.times) < 2:
            return 0.0
        return float(trapezoid(self.per_time, self.times))

    def histogram(self) -> np.ndarray:
        """Masa en cada celda λ integrada en el tiempo"""
        if len(self.times) < 2:
            return self.binned.sum(axis=0) * 0.0
        return trapezoid(self.binned, self.times, axis=0)


def dissipation_from_coeffs(coeffs: np.ndarray, times: np.ndarray, grid: TorusGrid,
                            epsilon: float, L: float,
                            m_lambda: int = KineticConfig.M_LAMBDA) -> DissipationMeasure:
    """Densidad de disipación desde coeficientes (S, *shape)"""
    coeffs = np.asarray(coeffs)
    u = grid.ifft(coeffs)
    grad = grid.gradient_coeffs(coeffs)
    density = epsilon * sum(grid.ifft(g) ** 2 for g in grad)

    weight = grid.quad_weight
    per_time = np.sum(density, axis=grid.axes) * weight
    lam = lambda_lattice(L, m_lambda)
    spacing = 2.0 * L / m_lambda
    bins = np.clip(np.floor((u + L) / spacing).astype(int), 0, m_lambda - 1)

    n_snap = coeffs.shape[0]
    binned = np.zeros((n_snap, m_lambda))
    for s in range(n_snap):
        binned[s] = np.bincount(bins[s].ravel(), weights=density[s].ravel() * weight,
                                minlength=m_lambda)
    return DissipationMeasure(np.asarray(times, dtype=float), density, per_time, binned, lam)


def dissipation_density(u_path, epsilon: Optional[float] = None, L: Optional[float] = None,
                        m_lambda: int = KineticConfig.M_LAMBDA) -> DissipationMeasure:
    """
    Defecto de disipación d(t, x) = ε|∇u(t, x)|² de una SolutionPath

    Args:
        u_path: Trayectoria de Galerkin
        epsilon: Difusión (por defecto la de la configuración de la trayectoria)
        L: Semiancho de la caja en λ (por defecto 1.25·max|u|)
        m_lambda: Celdas en λ
    """
    epsilon = u_path.config.epsilon if epsilon is None else epsilon
    if L is None:
        L = KineticConfig.L_FACTOR * max(float(np.max(np.abs(u_path.physical()))), 1e-12)
    return dissipation_from_coeffs(u_path.coeffs, u_path.times, u_path.grid, epsilon, L, m_lambda)


# ==========================================
# NORMA H^{-N} Y MÓDULO DE TRASLACIÓN
# ==========================================

def _sobolev_weights(grid: TorusGrid, L: float, m_lambda: int, N: int) -> np.ndarray:
    ell = np.arange(m_lambda)
    lam_part = (np.pi * ell / L) ** 2
    x_part = 1.0 + TWO_PI ** 2 * grid.k_squared
    return (x_part[..., None] + lam_part) ** (-float(N))


def _transform(g: np.ndarray, grid: TorusGrid, L: float) -> np.ndarray:
    """Fourier normalizado en x y DCT-II ortonormal (×sqrt(Δλ)) en λ"""
    m = g.shape[-1]
    spatial = tuple(range(g.ndim - 1 - grid.dim, g.ndim - 1))
    gx = sfft.fftn(g, axes=spatial, norm="forward")
    gl = sfft.dct(gx.real, type=2, axis=-1, norm="ortho") \
        + 1j * sfft.dct(gx.imag, type=2, axis=-1, norm="ortho")
    return gl * np.sqrt(2.0 * L / m)


def neg_sobolev_norm(g: np.ndarray, grid: TorusGrid, L: float, N: Optional[int] = None) -> float:
    """
    ||g||_{H^{−N}(M × [−L, L])}

    ||g||² = Σ (1 + (2π|k|)² + (πℓ/L)²)^{−N} |ĝ(k, ℓ)|², con Fourier en x y
    transformada coseno (extensión par) en λ.

    Args:
        g: Muestras (*shape, m) sobre la malla y la retícula centrada en λ
        grid: Malla espectral
        L: Semiancho de la caja
        N: Orden (por defecto ceil(d/2 + 3))
    """
    N = default_sobolev_order(grid.dim) if N is None else N
    g = np.asarray(g, dtype=float)
    weights = _sobolev_weights(grid, L, g.shape[-1], N)
    return float(np.sqrt(np.sum(weights * np.abs(_transform(g, grid, L)) ** 2)))


def translation_modulus(h: KineticField, theta: float, N: Optional[int] = None) -> float:
    """
    sup_{τ ∈ (0, θ]} ∫₀^{T−τ} ||h(t+τ) − h(t)||_{H^{−N}} dt

    τ recorre los múltiplos del espaciado Δ de los snapshots; la integral en t
    es una suma de Riemann a izquierda.

    Raises:
        ValueError: θ > T, θ no múltiplo de Δ o snapshots no uniformes
    """
    times = h.times
    horizon = float(times[-1] - times[0])
    if theta > horizon * (1.0 + 1e-12):
        raise ValueError(f"theta={theta} mayor que el horizonte T={horizon}")
    if theta <= 0:
        return 0.0
    spacing = np.diff(times)
    step = float(spacing[0])
    if not np.allclose(spacing, step, rtol=1e-9, atol=0.0):
        raise ValueError("translation_modulus requiere snapshots equiespaciados")
    lags = int(round(theta / step))
    if abs(lags * step - theta) > 1e-9 * max(theta, step):
        raise ValueError(f"theta={theta} no es múltiplo del espaciado {step}")

    N = default_sobolev_order(h.grid.dim) if N is None else N
    coeffs = _transform(h.values.astype(float), h.grid, h.L)
    weights = _sobolev_weights(h.grid, h.L, h.m_lambda, N)
    axes = tuple(range(1, coeffs.ndim))

    best = 0.0
    for j in range(1, lags + 1):
        diff = coeffs[j:] - coeffs[:-j]
        norms = np.sqrt(np.sum(weights * np.abs(diff) ** 2, axis=axes))
        # t recorre [0, T − τ): se omite el último punto
        best = max(best, float(np.sum(norms[:-1]) * step))
    return best
