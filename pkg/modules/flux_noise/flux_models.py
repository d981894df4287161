"""
Modelos de Flujo
================
Flujos separables f(x, λ) = a(x) g(λ) con div a = 0 (compatibilidad geométrica):
- Perfiles g(λ): Burgers, lineal y nulo (con su descomposición de Engquist–Osher)
- Direcciones a(x): vector constante (1D) o gradiente perpendicular de una
  función de corriente ψ (2D), a = (−∂₂ψ, ∂₁ψ)
- Regularización f_k por mollifier gaussiano en Fourier, σ(k) = σ₀·2^{−k}
- Validadores: divergencia espectral, residuo de Stokes, cotas de Lipschitz
  y de crecimiento, brecha L¹ de regularización
- Caras de volúmenes finitos exactamente libres de divergencia
"""

import logging
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Dict, Optional, Tuple

import numpy as np

from config import FluxDefaults, NondegeneracyConfig
from modules.spectral import TWO_PI, TorusGrid

logger = logging.getLogger(__name__)


# ==========================================
# PERFILES g(λ)
# ==========================================

@dataclass(frozen=True)
class BurgersProfile:
    """g(λ) = λ²/2"""

    name: str = "burgers"

    def value(self, lam):
        return 0.5 * np.square(lam)

    def derivative(self, lam):
        return np.asarray(lam, dtype=float)

    def plus_part(self, lam):
        """∫₀^λ max(g', 0)"""
        return 0.5 * np.square(np.maximum(lam, 0.0))

    def minus_part(self, lam):
        """∫₀^λ min(g', 0)"""
        return 0.5 * np.square(np.minimum(lam, 0.0))


@dataclass(frozen=True)
class LinearProfile:
    """g(λ) = s·λ (símbolo constante, flujo degenerado)"""

    speed: float = 1.0
    name: str = "linear"

    def value(self, lam):
        return self.speed * np.asarray(lam, dtype=float)

    def derivative(self, lam):
        return np.full_like(np.asarray(lam, dtype=float), self.speed)

    def plus_part(self, lam):
        return max(self.speed, 0.0) * np.asarray(lam, dtype=float)

    def minus_part(self, lam):
        return min(self.speed, 0.0) * np.asarray(lam, dtype=float)


@dataclass(frozen=True)
class ZeroProfile:
    """g ≡ 0"""

    name: str = "zero"

    def value(self, lam):
        return np.zeros_like(np.asarray(lam, dtype=float))

    derivative = value
    plus_part = value
    minus_part = value


PROFILES = {
    "burgers": BurgersProfile,
    "linear": LinearProfile,
    "zero": ZeroProfile,
}


# ==========================================
# FUNCIONES DE CORRIENTE (2D)
# ==========================================

def tent(x):
    """Onda triangular periódica: tri(0) = −1, tri(1/2) = 1"""
    return 1.0 - 4.0 * np.abs(np.mod(x, 1.0) - 0.5)


def tent_slope(x):
    """Derivada de la onda triangular (0 en los vértices)"""
    frac = np.mod(x, 1.0)
    slope = 4.0 * np.sign(0.5 - frac)
    return np.where(frac == 0.0, 0.0, slope)


@dataclass(frozen=True)
class SinusoidalStream:
    """ψ = A sin(2πx₁) sin(2πx₂)"""

    amplitude: float = 1.0 / TWO_PI
    smooth: bool = True

    def value(self, x1, x2):
        return self.amplitude * np.sin(TWO_PI * x1) * np.sin(TWO_PI * x2)

    def gradient(self, x1, x2):
        d1 = self.amplitude * TWO_PI * np.cos(TWO_PI * x1) * np.sin(TWO_PI * x2)
        d2 = self.amplitude * TWO_PI * np.sin(TWO_PI * x1) * np.cos(TWO_PI * x2)
        return d1, d2


@dataclass(frozen=True)
class TentStream:
    """ψ = A·tri(x₁)·(1 + m sin 2πx₂); a₂ = ∂₁ψ salta en x₁ ∈ {0, 1/2}"""

    amplitude: float = 0.25
    modulation: float = 0.5
    smooth: bool = False

    def value(self, x1, x2):
        return self.amplitude * tent(x1) * (1.0 + self.modulation * np.sin(TWO_PI * x2))

    def gradient(self, x1, x2):
        d1 = self.amplitude * tent_slope(x1) * (1.0 + self.modulation * np.sin(TWO_PI * x2))
        d2 = (self.amplitude * tent(x1) * self.modulation * TWO_PI
              * np.cos(TWO_PI * x2))
        return d1, d2


STREAMS = {
    "sinusoidal": SinusoidalStream,
    "tent": TentStream,
}


# ==========================================
# DIRECCIONES a(x)
# ==========================================

@dataclass(frozen=True)
class ConstantDirection:
    """a(x) = vector constante"""

    vector: Tuple[float, ...] = (1.0,)
    smooth: bool = True

    @property
    def dim(self) -> int:
        return len(self.vector)

    def mollified(self, sigma: float) -> "ConstantDirection":
        # El mollifier deja invariantes las constantes
        return self

    def exact(self, grid: TorusGrid) -> Tuple[np.ndarray, ...]:
        return tuple(np.full(grid.shape, float(c)) for c in self.vector)

    def components(self, grid: TorusGrid) -> Tuple[np.ndarray, ...]:
        return self.exact(grid)

    def face_velocities(self, mesh_n: int) -> Tuple[np.ndarray, ...]:
        shape = (mesh_n,) * self.dim
        return tuple(np.full(shape, float(c)) for c in self.vector)


@dataclass(frozen=True)
class StreamFunctionDirection:
    """
    a = (−∂₂ψ, ∂₁ψ), evaluada espectralmente

    ``widths`` guarda los anchos de los mollifiers aplicados; la composición
    de gaussianas equivale a un único ancho sqrt(Σσ²).
    """

    stream: object = field(default_factory=SinusoidalStream)
    widths: Tuple[float, ...] = ()

    @property
    def dim(self) -> int:
        return 2

    @property
    def smooth(self) -> bool:
        return bool(self.stream.smooth)

    @property
    def total_width_sq(self) -> float:
        return float(sum(w * w for w in self.widths))

    def mollified(self, sigma: float) -> "StreamFunctionDirection":
        if sigma <= 0:
            raise ValueError(f"El ancho del mollifier debe ser > 0, recibido {sigma}")
        return replace(self, widths=self.widths + (float(sigma),))

    def multiplier(self, grid: TorusGrid) -> np.ndarray:
        """exp(−Σσ²|2πk|²/2)"""
        return np.exp(-0.5 * self.total_width_sq * TWO_PI ** 2 * grid.k_squared)

    def exact(self, grid: TorusGrid) -> Tuple[np.ndarray, ...]:
        """Campo analítico sin mollificar en los nodos de la malla"""
        d1, d2 = self.stream.gradient(*grid.points)
        return (
            np.broadcast_to(-d2, grid.shape).copy(),
            np.broadcast_to(d1, grid.shape).copy(),
        )

    def components(self, grid: TorusGrid) -> Tuple[np.ndarray, ...]:
        psi_hat = grid.fft(grid.sample(self.stream.value)) * self.multiplier(grid)
        d1, d2 = grid.gradient_coeffs(psi_hat)
        return grid.ifft(-d2), grid.ifft(d1)

    def face_velocities(self, mesh_n: int) -> Tuple[np.ndarray, ...]:
        """
        Velocidades normales promedio en las caras de una malla de volúmenes finitos

        A1[i, j]: cara x₁ = (i+1)h; A2[i, j]: cara x₂ = (j+1)h. Se obtienen
        como diferencias de ψ en los vértices, de modo que la divergencia
        discreta de cada celda se anula exactamente.
        """
        mesh = TorusGrid(2, mesh_n)
        psi = mesh.sample(self.stream.value)
        if self.widths:
            psi = mesh.ifft(mesh.fft(psi) * self.multiplier(mesh))
        h = mesh.spacing
        right = np.roll(psi, -1, axis=0)
        a1 = -(np.roll(right, -1, axis=1) - right) / h
        top = np.roll(psi, -1, axis=1)
        a2 = (np.roll(top, -1, axis=0) - top) / h
        return a1, a2


@lru_cache(maxsize=32)
def _components_cached(direction, grid: TorusGrid) -> Tuple[np.ndarray, ...]:
    comps = direction.components(grid)
    for c in comps:
        c.setflags(write=False)
    return comps


# ==========================================
# MODELO DE FLUJO
# ==========================================

@dataclass(frozen=True)
class FluxModel:
    """Flujo separable f(x, λ) = a(x) g(λ)"""

    name: str
    direction: object
    profile: object
    sigma0: float = FluxDefaults.SIGMA0
    level: Optional[int] = None

    @property
    def dim(self) -> int:
        return self.direction.dim

    @property
    def is_zero(self) -> bool:
        return isinstance(self.profile, ZeroProfile)

    @property
    def x_dependent(self) -> bool:
        return not isinstance(self.direction, ConstantDirection)

    def direction_on(self, grid: TorusGrid) -> Tuple[np.ndarray, ...]:
        if grid.dim != self.dim:
            raise ValueError(
                f"Flujo '{self.name}' de dimensión {self.dim} sobre malla de dimensión {grid.dim}"
            )
        return _components_cached(self.direction, grid)

    def values(self, u: np.ndarray, grid: TorusGrid) -> Tuple[np.ndarray, ...]:
        """Componentes f_i(x, u(x)) (ejes de lote permitidos)"""
        g = self.profile.value(u)
        return tuple(a * g for a in self.direction_on(grid))

    def derivative(self, u: np.ndarray, grid: TorusGrid) -> Tuple[np.ndarray, ...]:
        dg = self.profile.derivative(u)
        return tuple(a * dg for a in self.direction_on(grid))

    def regularize(self, k_level: int) -> "FluxModel":
        """
        Flujo regularizado f_k: mollifica a(x) con ancho σ₀·2^{−k}

        Las direcciones suaves (y las constantes) no se modifican.

        Args:
            k_level: Nivel de regularización (>= 0)

        Returns:
            Nuevo FluxModel con ``level = k_level``
        """
        if k_level < 0:
            raise ValueError(f"k_level debe ser >= 0, recibido {k_level}")
        direction = self.direction
        if not direction.smooth:
            direction = direction.mollified(self.sigma0 * 2.0 ** (-k_level))
        return replace(self, direction=direction, level=k_level)

    def lipschitz_bound(self, grid: TorusGrid, lambda_box=FluxDefaults.LAMBDA_BOX,
                        samples: int = FluxDefaults.LAMBDA_SAMPLES) -> float:
        """sup |a(x)|·|g'(λ)| sobre la malla y una retícula en λ"""
        lam = np.linspace(*lambda_box, samples)
        speed = np.sqrt(sum(a ** 2 for a in self.direction_on(grid)))
        return float(np.max(speed) * np.max(np.abs(self.profile.derivative(lam))))

    def growth_bound(self, grid: TorusGrid, lambda_box=FluxDefaults.LAMBDA_BOX,
                     samples: int = FluxDefaults.LAMBDA_SAMPLES) -> float:
        """sup |f(x, λ)| / (1 + |λ|) sobre la retícula"""
        lam = np.linspace(*lambda_box, samples)
        speed = np.sqrt(sum(a ** 2 for a in self.direction_on(grid)))
        return float(np.max(speed) * np.max(np.abs(self.profile.value(lam)) / (1.0 + np.abs(lam))))

    def sup_abs_on(self, grid: TorusGrid, lam_max: float) -> Tuple[float, float]:
        """
        (‖f'‖_∞, ‖sup_λ|f(·,λ)|‖²_{L²}) con λ restringido a [−lam_max, lam_max]
        """
        lam = np.linspace(-lam_max, lam_max, FluxDefaults.LAMBDA_SAMPLES)
        speed = np.sqrt(sum(a ** 2 for a in self.direction_on(grid)))
        d_sup = float(np.max(speed) * np.max(np.abs(self.profile.derivative(lam))))
        g_sup = float(np.max(np.abs(self.profile.value(lam))))
        return d_sup, float(grid.quadrature((speed * g_sup) ** 2))


# ==========================================
# VALIDADORES
# ==========================================

@dataclass
class GeometryReport:
    """Resultado de la verificación de compatibilidad geométrica"""

    max_divergence: float
    stokes_residual: float
    trials: int

    def passed(self, div_tol: float = FluxDefaults.DIVERGENCE_TOL,
               stokes_tol: float = FluxDefaults.STOKES_TOL) -> bool:
        return self.max_divergence < div_tol and self.stokes_residual < stokes_tol

    def to_dict(self) -> Dict:
        return {
            "max_divergence": self.max_divergence,
            "stokes_residual": self.stokes_residual,
            "trials": self.trials,
        }


def stokes_residual(flux: FluxModel, grid: TorusGrid, u_samples: np.ndarray) -> float:
    """|∫_M ⟨f(x,u), ∇u⟩ dV| por cuadratura, con ∇u espectral"""
    grad = [grid.ifft(c) for c in grid.gradient_coeffs(grid.fft(u_samples))]
    integrand = sum(fi * gi for fi, gi in zip(flux.values(u_samples, grid), grad))
    return float(abs(grid.quadrature(integrand)))


def check_geometry_compat(
    flux: FluxModel,
    grid: TorusGrid,
    trials: int = 1,
    rng: Optional[np.random.Generator] = None,
    lambda_box=FluxDefaults.LAMBDA_BOX,
    samples: int = FluxDefaults.LAMBDA_SAMPLES,
) -> GeometryReport:
    """
    Verificar la condición div_x f(x, λ) = 0 y el residuo discreto de Stokes

    La divergencia se calcula espectralmente sobre la malla y una retícula en
    λ (para un flujo separable, div f = g(λ) div a). El residuo de Stokes se
    evalúa sobre ``trials`` campos aleatorios limitados en banda, con banda
    elegida para que el integrando cúbico no sufra aliasing.

    Args:
        flux: Modelo de flujo
        grid: Malla espectral
        trials: Número de campos aleatorios
        rng: Generador (por defecto semilla fija)
        lambda_box: Intervalo de λ
        samples: Puntos de la retícula en λ

    Returns:
        GeometryReport con max|div f| y max residuo de Stokes
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    comps = flux.direction_on(grid)
    div_a = grid.ifft(grid.divergence_coeffs([grid.fft(a) for a in comps]))
    lam = np.linspace(*lambda_box, samples)
    max_div = float(np.max(np.abs(div_a)) * np.max(np.abs(flux.profile.value(lam))))

    kmax = max(1, (grid.n_per_axis // 2 - 1) // 3)
    residual = 0.0
    for _ in range(trials):
        u = grid.random_field(rng, kmax=kmax).to_physical()
        residual = max(residual, stokes_residual(flux, grid, u))

    logger.debug(f"Flujo '{flux.name}': max|div f| = {max_div:.3e}, Stokes = {residual:.3e}")
    return GeometryReport(max_divergence=max_div, stokes_residual=residual, trials=trials)


@dataclass
class FluxValidation:
    """Constantes de las condiciones sobre el flujo"""

    name: str
    lipschitz_bound: float
    growth_bound: float
    geometry: GeometryReport

    @property
    def passed(self) -> bool:
        return self.geometry.passed() and np.isfinite(self.lipschitz_bound)

    def to_dict(self) -> Dict:
        return {
            "name": self.name,
            "lipschitz_bound": self.lipschitz_bound,
            "growth_bound": self.growth_bound,
            "geometry": self.geometry.to_dict(),
            "passed": self.passed,
        }


def validate_flux(flux: FluxModel, grid: TorusGrid, lambda_box=FluxDefaults.LAMBDA_BOX,
                  trials: int = NondegeneracyConfig.STOKES_TRIALS,
                  rng: Optional[np.random.Generator] = None) -> FluxValidation:
    """Cota de Lipschitz, constante de crecimiento y compatibilidad geométrica"""
    return FluxValidation(
        name=flux.name,
        lipschitz_bound=flux.lipschitz_bound(grid, lambda_box),
        growth_bound=flux.growth_bound(grid, lambda_box),
        geometry=check_geometry_compat(flux, grid, trials=trials, rng=rng,
                                       lambda_box=lambda_box),
    )


def regularization_gap(flux: FluxModel, k_level: int, grid: TorusGrid,
                       lambda_box=FluxDefaults.LAMBDA_BOX) -> float:
    """
    ‖sup_λ |f − f_k|‖_{L¹(M)} sobre una caja en λ

    Compara el campo analítico a(x) con el campo regularizado a_k(x)
    evaluado espectralmente.
    """
    exact = flux.direction.exact(grid)
    regular = flux.regularize(k_level).direction_on(grid)
    gap = np.sqrt(sum((e - r) ** 2 for e, r in zip(exact, regular)))
    lam = np.linspace(*lambda_box, FluxDefaults.LAMBDA_SAMPLES)
    g_sup = float(np.max(np.abs(flux.profile.value(lam))))
    return float(grid.quadrature(gap)) * g_sup


def fv_face_fluxes(flux: FluxModel, mesh_n: int) -> Tuple[np.ndarray, ...]:
    """Velocidades normales en caras, discretamente libres de divergencia"""
    return flux.direction.face_velocities(mesh_n)
