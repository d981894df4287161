"""
Datos Iniciales
===============
Construcción de u₀ (proyectado a la banda de Galerkin) y de perturbaciones
deterministas para los experimentos de estabilidad.
"""

from dataclasses import asdict, dataclass
from typing import Dict, Optional

import numpy as np

from modules.spectral import TWO_PI, SpectralField, TorusGrid

KINDS = ("sine", "cosine", "constant", "zero", "random", "riemann", "product")


@dataclass
class InitialCondition:
    """Descripción declarativa de u₀"""

    kind: str = "sine"
    amplitude: float = 1.0
    wavenumber: int = 1
    offset: float = 0.0
    seed: int = 0
    kmax: Optional[int] = None
    left: float = 1.0
    right: float = 0.0
    x0: float = 0.5

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"Dato inicial desconocido '{self.kind}'. Opciones: {list(KINDS)}")

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict) -> "InitialCondition":
        return cls(**data)


def initial_samples(ic: InitialCondition, points) -> np.ndarray:
    """Valores de u₀ en puntos arbitrarios (x₁[, x₂]) para los tipos analíticos"""
    x1 = points[0]
    k = ic.wavenumber
    if ic.kind == "sine":
        return ic.offset + ic.amplitude * np.sin(TWO_PI * k * x1)
    if ic.kind == "cosine":
        return ic.offset + ic.amplitude * np.cos(TWO_PI * k * x1)
    if ic.kind == "product":
        return ic.offset + ic.amplitude * np.sin(TWO_PI * k * x1) * np.sin(TWO_PI * k * points[1])
    if ic.kind == "constant":
        return np.full(np.shape(x1), ic.offset + ic.amplitude)
    if ic.kind == "zero":
        return np.zeros(np.shape(x1))
    if ic.kind == "riemann":
        return np.where(np.mod(x1, 1.0) < ic.x0, ic.left, ic.right)
    raise ValueError(f"'{ic.kind}' no tiene expresión analítica")


def build_initial(ic: InitialCondition, grid: TorusGrid) -> SpectralField:
    """
    u₀ como campo espectral proyectado a la banda de dealiasing

    Args:
        ic: Descripción del dato inicial
        grid: Malla espectral

    Returns:
        SpectralField hermítico
    """
    if ic.kind == "random":
        rng = np.random.default_rng(ic.seed)
        field = grid.random_field(rng, kmax=ic.kmax, amplitude=ic.amplitude)
        coeffs = field.coeffs.copy()
        coeffs[(0,) * grid.dim] += ic.offset
        field = SpectralField(grid, coeffs)
    else:
        field = grid.forward_transform(grid.sample(lambda *p: initial_samples(ic, p)))
    return grid.dealias(field)


def perturbation(grid: TorusGrid, amplitude: float, seed: int = 1) -> SpectralField:
    """Perturbación aleatoria fija con ||w||_{L²} = amplitude dentro de la banda"""
    rng = np.random.default_rng(seed)
    return grid.random_field(rng, kmax=max(1, grid.dealias_cutoff // 2), amplitude=amplitude)
