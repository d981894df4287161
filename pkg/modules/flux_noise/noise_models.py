"""
Modelos de Ruido
================
Funciones de ruido Φ(x, λ) para el término estocástico Φ(x, u) dW con W
real. Cada modelo expone Φ, ∂_λΦ y sus constantes analíticas; el validador
las contrasta sobre una retícula.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from config import FluxDefaults, NoiseDefaults
from modules.spectral import TWO_PI, TorusGrid

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConstantNoise:
    """Φ ≡ σ₀ (ruido aditivo)"""

    sigma: float = NoiseDefaults.SIGMA
    name: str = "noise-const"

    bounded = True

    @property
    def is_zero(self) -> bool:
        return self.sigma == 0.0

    def values(self, x1, u):
        return np.full(np.broadcast(x1, u).shape, float(self.sigma))

    def derivative(self, x1, u):
        return np.zeros(np.broadcast(x1, u).shape)

    def energy_constant(self) -> float:
        """Menor C con |Φ|² <= C(2 + λ²) para todo λ"""
        return 0.5 * self.sigma ** 2

    def linear_growth_constant(self) -> float:
        return abs(self.sigma)


@dataclass(frozen=True)
class LinearNoise:
    """Φ(x, λ) = c·λ (ruido multiplicativo)"""

    coeff: float = NoiseDefaults.LINEAR_COEFF
    name: str = "noise-linear"

    bounded = False

    @property
    def is_zero(self) -> bool:
        return self.coeff == 0.0

    def values(self, x1, u):
        return np.broadcast_to(self.coeff * np.asarray(u, dtype=float),
                               np.broadcast(x1, u).shape)

    def derivative(self, x1, u):
        return np.full(np.broadcast(x1, u).shape, float(self.coeff))

    def energy_constant(self) -> float:
        return self.coeff ** 2

    def linear_growth_constant(self) -> float:
        return abs(self.coeff)


@dataclass(frozen=True)
class BoundedNoise:
    """Φ(x, λ) = A sin(2πx₁) + σ tanh(λ)"""

    sigma: float = NoiseDefaults.SIGMA
    amplitude: float = NoiseDefaults.BOUNDED_AMPLITUDE
    name: str = "noise-bounded"

    bounded = True

    @property
    def is_zero(self) -> bool:
        return self.sigma == 0.0 and self.amplitude == 0.0

    def values(self, x1, u):
        return self.amplitude * np.sin(TWO_PI * np.asarray(x1)) + self.sigma * np.tanh(u)

    def derivative(self, x1, u):
        return np.broadcast_to(self.sigma / np.cosh(u) ** 2, np.broadcast(x1, u).shape)

    def energy_constant(self) -> float:
        return 0.5 * (abs(self.amplitude) + abs(self.sigma)) ** 2

    def linear_growth_constant(self) -> float:
        return abs(self.amplitude) + abs(self.sigma)


# ==========================================
# VALIDACIÓN
# ==========================================

@dataclass
class NoiseValidation:
    """Constantes de las condiciones sobre Φ"""

    name: str
    linear_growth_const: float
    energy_constant: float
    lattice_energy_constant: float
    sup_dphi_l2: float
    sup_phi_l2: float

    @property
    def passed(self) -> bool:
        return self.lattice_energy_constant <= self.energy_constant * (1.0 + 1e-12)

    def to_dict(self) -> Dict:
        return {
            "name": self.name,
            "linear_growth_const": self.linear_growth_const,
            "energy_constant": self.energy_constant,
            "lattice_energy_constant": self.lattice_energy_constant,
            "sup_dphi_l2": self.sup_dphi_l2,
            "sup_phi_l2": self.sup_phi_l2 if np.isfinite(self.sup_phi_l2) else None,
            "passed": self.passed,
        }


def validate_noise(noise, grid: TorusGrid, lambda_box=FluxDefaults.LAMBDA_BOX,
                   samples: Optional[int] = None) -> NoiseValidation:
    """
    Constantes de crecimiento de Φ sobre una retícula (x, λ)

    Args:
        noise: Modelo de ruido
        grid: Malla espectral (se usa x₁)
        lambda_box: Intervalo de λ
        samples: Puntos en λ

    Returns:
        NoiseValidation; ``sup_phi_l2`` es infinito si Φ no es acotada
    """
    samples = samples or FluxDefaults.LAMBDA_SAMPLES
    lam = np.linspace(*lambda_box, samples)
    x1 = np.broadcast_to(grid.points[0], grid.shape).reshape(-1)[:, None]
    phi = np.abs(noise.values(x1, lam[None, :]))
    dphi = np.abs(noise.derivative(x1, lam[None, :]))

    growth = float(np.max(phi / (1.0 + np.abs(lam))))
    lattice_energy = float(np.max(phi ** 2 / (2.0 + lam ** 2)))
    sup_dphi = float(np.sqrt(np.mean(np.max(dphi, axis=1) ** 2)))
    sup_phi = float(np.sqrt(np.mean(np.max(phi, axis=1) ** 2))) if noise.bounded else np.inf

    if growth > noise.linear_growth_constant() * (1.0 + 1e-12):
        logger.warning(f"Ruido '{noise.name}': crecimiento en retícula {growth:.4g} "
                       f"supera la constante analítica")

    return NoiseValidation(
        name=noise.name,
        linear_growth_const=noise.linear_growth_constant(),
        energy_constant=noise.energy_constant(),
        lattice_energy_constant=lattice_energy,
        sup_dphi_l2=sup_dphi,
        sup_phi_l2=sup_phi,
    )
