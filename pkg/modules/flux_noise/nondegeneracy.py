"""
Estimador de No-degeneración
============================
Medida numérica de los conjuntos de nivel engrosados del símbolo
s(λ) = ξ₀ + f'(x, λ)·ξ' sobre una caja Λ:

    ∫_K sup_{(ξ₀,ξ'), C} meas{λ ∈ Λ : |s(λ) − C| <= η} dx

La medida se estima contando puntos de una retícula en λ dentro de la
mejor ventana de ancho 2η; el supremo en la esfera se toma sobre una
muestra, restringida a |ξ'| >= 0.1 (la variante sin restringir se reporta
también: en ξ' = 0 el símbolo es constante para cualquier flujo).
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy import stats

from config import NondegeneracyConfig
from modules.spectral import TorusGrid

from .flux_models import FluxModel

logger = logging.getLogger(__name__)


def sphere_directions(dim: int, samples: int) -> np.ndarray:
    """
    Muestra de S^d como array (samples, d+1) con columnas (ξ₀, ξ')

    d = 1: ángulos equiespaciados (incluye ξ' = 0); d = 2: retícula de Fibonacci.
    """
    if dim == 1:
        theta = 2.0 * np.pi * np.arange(samples) / samples
        return np.stack([np.cos(theta), np.sin(theta)], axis=1)
    i = np.arange(samples) + 0.5
    z = 1.0 - 2.0 * i / samples
    r = np.sqrt(1.0 - z ** 2)
    phi = np.pi * (3.0 - np.sqrt(5.0)) * i
    return np.stack([z, r * np.cos(phi), r * np.sin(phi)], axis=1)


def window_measure(symbol: np.ndarray, eta: float, d_lambda: float) -> np.ndarray:
    """
    Máxima medida de {λ : |s(λ) − C| <= η} sobre C, por fila

    Args:
        symbol: Array (direcciones, m_λ) con s evaluado en la retícula
        eta: Semiancho de la ventana
        d_lambda: Paso de la retícula en λ

    Returns:
        Δλ·(max_C #{λ_i en la ventana} − 1) por dirección
    """
    s = np.sort(symbol, axis=1)
    counts = np.empty(s.shape[0], dtype=int)
    start = np.arange(s.shape[1])
    for row in range(s.shape[0]):
        ends = np.searchsorted(s[row], s[row] + 2.0 * eta, side="right")
        counts[row] = np.max(ends - start)
    return d_lambda * np.maximum(counts - 1, 0)


def nondegeneracy_measure(
    flux: FluxModel,
    grid: TorusGrid,
    box: Tuple[float, float] = NondegeneracyConfig.LAMBDA_BOX,
    eta: float = 0.1,
    samples: int = NondegeneracyConfig.SPHERE_SAMPLES,
    m_lambda: int = NondegeneracyConfig.M_LAMBDA,
    min_xi_prime: float = NondegeneracyConfig.MIN_XI_PRIME,
) -> float:
    """
    Estimar la medida de no-degeneración del flujo

    Args:
        flux: Modelo de flujo
        grid: Malla de puntos x (K = M)
        box: Intervalo Λ
        eta: Semiancho del engrosamiento (>= 0)
        samples: Direcciones en la esfera
        m_lambda: Puntos de la retícula en λ
        min_xi_prime: Cota inferior de |ξ'| (0 = esfera completa)

    Returns:
        Promedio en x del supremo de la medida

    Raises:
        ValueError: Si la retícula en λ es vacía o η < 0
    """
    if m_lambda < 2 or box[1] <= box[0]:
        raise ValueError(f"Retícula en λ vacía: box={box}, m_lambda={m_lambda}")
    if eta < 0:
        raise ValueError(f"eta debe ser >= 0, recibido {eta}")

    lam = np.linspace(box[0], box[1], m_lambda)
    d_lambda = lam[1] - lam[0]
    dg = flux.profile.derivative(lam)

    xi = sphere_directions(flux.dim, samples)
    keep = np.linalg.norm(xi[:, 1:], axis=1) >= min_xi_prime
    xi = xi[keep]
    if xi.shape[0] == 0:
        raise ValueError("Ninguna dirección de la esfera cumple |ξ'| >= min_xi_prime")

    # Puntos x con el mismo a(x) comparten el símbolo
    a = np.stack([c.reshape(-1) for c in flux.direction_on(grid)], axis=1)
    unique_a, weights = np.unique(a, axis=0, return_counts=True)

    total = 0.0
    for a_x, weight in zip(unique_a, weights):
        speed = xi[:, 1:] @ a_x
        symbol = xi[:, :1] + speed[:, None] * dg[None, :]
        total += weight * float(np.max(window_measure(symbol, eta, d_lambda)))
    return total / a.shape[0]


@dataclass
class NondegeneracyReport:
    """Medidas restringida y sin restringir para varios η"""

    flux_name: str
    box: Tuple[float, float]
    etas: List[float]
    restricted: List[float]
    unrestricted: List[float]
    slope: float
    degenerate: bool
    monotone: bool = True
    extra: Dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.monotone and not self.degenerate

    def to_dict(self) -> Dict:
        return {
            "flux": self.flux_name,
            "box": list(self.box),
            "etas": self.etas,
            "restricted": self.restricted,
            "unrestricted": self.unrestricted,
            "slope": self.slope,
            "degenerate": self.degenerate,
            "monotone": self.monotone,
        }


def nondegeneracy_report(
    flux: FluxModel,
    grid: TorusGrid,
    etas: Sequence[float] = NondegeneracyConfig.ETAS,
    box: Tuple[float, float] = NondegeneracyConfig.LAMBDA_BOX,
    samples: int = NondegeneracyConfig.SPHERE_SAMPLES,
    m_lambda: int = NondegeneracyConfig.M_LAMBDA,
) -> NondegeneracyReport:
    """Medidas para cada η, pendiente log-log y marca de degeneración"""
    etas = sorted((float(e) for e in etas), reverse=True)
    restricted = [nondegeneracy_measure(flux, grid, box, e, samples, m_lambda) for e in etas]
    unrestricted = [nondegeneracy_measure(flux, grid, box, e, samples, m_lambda, 0.0)
                    for e in etas]

    width = box[1] - box[0]
    degenerate = restricted[-1] >= NondegeneracyConfig.DEGENERATE_FRACTION * width
    monotone = all(b <= a * (1.0 + 1e-12) for a, b in zip(restricted, restricted[1:]))

    positive = [(e, m) for e, m in zip(etas, restricted) if e > 0 and m > 0]
    if len(positive) >= 2:
        fit = stats.linregress(np.log([p[0] for p in positive]), np.log([p[1] for p in positive]))
        slope = float(fit.slope)
    else:
        slope = float("nan")

    logger.info(f"No-degeneración '{flux.name}': medidas {restricted}, pendiente {slope:.3f}")
    if degenerate:
        logger.warning(f"Flujo '{flux.name}' marcado como degenerado en {box}")
    return NondegeneracyReport(flux.name, tuple(box), etas, restricted, unrestricted,
                               slope, degenerate, monotone)
