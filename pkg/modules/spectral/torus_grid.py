"""
Torus Grid
==========
Realización en el toro plano T^d = [0,1)^d de la variedad compacta M:
- Base de autofunciones de Laplace–Beltrami e_k(x) = exp(2πi k·x)
- Autovalores de Λ² = I − Δ: λ_k² = 1 + (2π|k|)²
- Transformadas directa/inversa (FFT normalizada por n^d)
- Cuadratura uniforme, normas de Sobolev, gradiente y laplaciano espectrales

Convención de coeficientes: û_k = n^{-d} Σ_j u(x_j) exp(−2πi k·x_j), de modo que
cos(2πx) tiene û_{±1} = 1/2 y Σ|û_k|² coincide con la cuadratura de u².

Todas las operaciones aceptan arrays con ejes de lote delante de los ejes
espaciales (los últimos ``dim`` ejes).
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy import fft as sfft

from config import PerformanceConfig

TWO_PI = 2.0 * np.pi

Wavevector = Union[int, Sequence[int]]


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class TorusGrid:
    """Malla uniforme periódica sobre el toro unitario"""

    dim: int
    n_per_axis: int
    side_length: float = 1.0

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim debe ser 1 o 2, recibido {self.dim}")
        if self.n_per_axis < 4 or self.n_per_axis % 2 != 0:
            raise ValueError(
                f"n_per_axis debe ser par y >= 4, recibido {self.n_per_axis}"
            )
        if self.side_length != 1.0:
            raise ValueError("El toro tiene lado fijo 1")

    # ==========================================
    # Geometría de la malla
    # ==========================================

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.n_per_axis,) * self.dim

    @property
    def axes(self) -> Tuple[int, ...]:
        """Ejes espaciales (los últimos ``dim`` ejes de cualquier array)"""
        return tuple(range(-self.dim, 0))

    @property
    def num_points(self) -> int:
        return self.n_per_axis ** self.dim

    @property
    def quad_weight(self) -> float:
        return 1.0 / self.num_points

    @property
    def spacing(self) -> float:
        return 1.0 / self.n_per_axis

    @cached_property
    def points(self) -> Tuple[np.ndarray, ...]:
        """Coordenadas x_j = j/n como arrays con broadcasting (indexing='ij')"""
        x = np.arange(self.n_per_axis) / self.n_per_axis
        coords = np.meshgrid(*([x] * self.dim), indexing="ij", sparse=True)
        return tuple(_readonly(c) for c in coords)

    @cached_property
    def wavenumbers(self) -> Tuple[np.ndarray, ...]:
        """Números de onda enteros k_i en orden FFT (con broadcasting)"""
        k = np.fft.fftfreq(self.n_per_axis, d=1.0 / self.n_per_axis)
        ks = np.meshgrid(*([k] * self.dim), indexing="ij", sparse=True)
        return tuple(_readonly(kk) for kk in ks)

    @cached_property
    def k_squared(self) -> np.ndarray:
        return _readonly(sum(k.astype(float) ** 2 for k in self.wavenumbers))

    @cached_property
    def lambda_sq_array(self) -> np.ndarray:
        """Autovalores de Λ² sobre todos los modos de la malla"""
        return _readonly(1.0 + TWO_PI ** 2 * self.k_squared)

    @cached_property
    def derivative_symbols(self) -> Tuple[np.ndarray, ...]:
        """Símbolos 2πi k_i con el modo de Nyquist anulado (derivada impar de campo real)"""
        nyquist = self.n_per_axis // 2
        symbols = []
        for k in self.wavenumbers:
            sym = 1j * TWO_PI * k.astype(float)
            sym = np.where(np.abs(k) == nyquist, 0.0, sym)
            symbols.append(_readonly(sym))
        return tuple(symbols)

    @property
    def dealias_cutoff(self) -> int:
        """Máximo |k_i| conservado por la regla de 2/3 (3K < n)"""
        return (self.n_per_axis - 1) // 3

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        cutoff = self.dealias_cutoff
        mask = np.ones(self.shape, dtype=bool)
        for k in self.wavenumbers:
            mask = mask & (np.abs(k) <= cutoff)
        return _readonly(mask)

    # ==========================================
    # Autovalores
    # ==========================================

    def index_of(self, k: Wavevector) -> Tuple[int, ...]:
        """Índice del coeficiente del modo k dentro del array FFT"""
        kv = np.atleast_1d(np.asarray(k, dtype=int))
        if kv.shape != (self.dim,):
            raise ValueError(f"Vector de onda {k} incompatible con dim={self.dim}")
        half = self.n_per_axis // 2
        if np.any(np.abs(kv) > half):
            raise ValueError(f"Vector de onda {k} fuera de |k_i| <= {half}")
        return tuple(int(ki) % self.n_per_axis for ki in kv)

    def lambda_sq(self, k: Wavevector) -> float:
        """
        Autovalor de Λ² = I − Δ sobre el modo k

        Args:
            k: Vector de onda (entero en 1D, par de enteros en 2D)

        Returns:
            1 + (2π)²|k|²
        """
        self.index_of(k)
        kv = np.atleast_1d(np.asarray(k, dtype=float))
        return float(1.0 + TWO_PI ** 2 * np.sum(kv ** 2))

    # ==========================================
    # Transformadas (arrays con ejes de lote)
    # ==========================================

    def _check_spatial(self, array: np.ndarray) -> None:
        if array.ndim < self.dim or array.shape[-self.dim:] != self.shape:
            raise ValueError(
                f"Forma {array.shape} incompatible con la malla {self.shape}"
            )

    def fft(self, samples: np.ndarray) -> np.ndarray:
        """Coeficientes normalizados de muestras reales (ejes de lote permitidos)"""
        samples = np.asarray(samples)
        self._check_spatial(samples)
        return sfft.fftn(samples, axes=self.axes, norm="forward",
                         workers=PerformanceConfig.FFT_WORKERS)

    def ifft(self, coeffs: np.ndarray) -> np.ndarray:
        """Muestras reales desde coeficientes normalizados"""
        coeffs = np.asarray(coeffs)
        self._check_spatial(coeffs)
        return sfft.ifftn(coeffs, axes=self.axes, norm="forward",
                          workers=PerformanceConfig.FFT_WORKERS).real

    def forward_transform(self, samples: np.ndarray) -> "SpectralField":
        """
        Transformada directa de un campo real muestreado en la malla

        Args:
            samples: Array de forma ``shape`` (o plano de longitud n^d)

        Returns:
            SpectralField hermítico

        Raises:
            ValueError: Si el tamaño no coincide con la malla
        """
        samples = np.asarray(samples, dtype=float)
        if samples.shape != self.shape:
            if samples.size != self.num_points:
                raise ValueError(
                    f"Se esperaban {self.num_points} muestras, recibidas {samples.size}"
                )
            samples = samples.reshape(self.shape)
        return SpectralField(self, self.fft(samples))

    def inverse_transform(self, field: "SpectralField") -> np.ndarray:
        """Muestras reales del campo en la malla"""
        if field.grid != self:
            raise ValueError("El campo pertenece a otra malla")
        return self.ifft(field.coeffs)

    def sample(self, function) -> np.ndarray:
        """Evaluar ``function(*points)`` en la malla"""
        values = np.asarray(function(*self.points), dtype=float)
        return np.broadcast_to(values, self.shape).copy()

    def quadrature(self, values: np.ndarray) -> np.ndarray:
        """Cuadratura uniforme ∫_M v dV (sobre los ejes espaciales)"""
        return np.mean(values, axis=self.axes)

    # ==========================================
    # Operadores espectrales
    # ==========================================

    def sobolev_weights(self, s: float) -> np.ndarray:
        return self.lambda_sq_array ** s

    def sobolev_norm_sq(self, field: "SpectralField", s: float) -> float:
        """
        Norma de Sobolev ‖u‖²_{H^s} = Σ λ_k^{2s} |û_k|²

        Args:
            field: Campo espectral
            s: Índice de Sobolev (puede ser negativo)
        """
        return float(np.sum(self.sobolev_weights(s) * np.abs(field.coeffs) ** 2))

    def sobolev_norm_sq_batch(self, coeffs: np.ndarray, s: float) -> np.ndarray:
        return np.sum(self.sobolev_weights(s) * np.abs(coeffs) ** 2, axis=self.axes)

    def gradient_coeffs(self, coeffs: np.ndarray) -> Tuple[np.ndarray, ...]:
        return tuple(sym * coeffs for sym in self.derivative_symbols)

    def divergence_coeffs(self, components: Sequence[np.ndarray]) -> np.ndarray:
        if len(components) != self.dim:
            raise ValueError("El campo vectorial debe tener dim componentes")
        return sum(sym * c for sym, c in zip(self.derivative_symbols, components))

    def laplacian_coeffs(self, coeffs: np.ndarray) -> np.ndarray:
        return -(TWO_PI ** 2) * self.k_squared * coeffs

    def gradient(self, field: "SpectralField") -> Tuple["SpectralField", ...]:
        """Gradiente espectral: multiplica û_k por 2πi k (Nyquist anulado)"""
        return tuple(SpectralField(self, c) for c in self.gradient_coeffs(field.coeffs))

    def divergence(self, components: Sequence["SpectralField"]) -> "SpectralField":
        return SpectralField(self, self.divergence_coeffs([c.coeffs for c in components]))

    def laplacian(self, field: "SpectralField") -> "SpectralField":
        """Laplaciano espectral: multiplica û_k por −(2π|k|)² = 1 − λ_k²"""
        return SpectralField(self, self.laplacian_coeffs(field.coeffs))

    def dealias(self, field: "SpectralField") -> "SpectralField":
        return SpectralField(self, np.where(self.dealias_mask, field.coeffs, 0.0))

    def truncate(self, field: "SpectralField", m: float) -> "SpectralField":
        """Proyección sobre los modos con |k| <= m"""
        keep = self.k_squared <= m * m
        return SpectralField(self, np.where(keep, field.coeffs, 0.0))

    def inner_with_mode(self, field: "SpectralField", k: Wavevector) -> complex:
        """⟨u, e_k⟩ = ∫ u conj(e_k) dV por cuadratura"""
        phase = sum(kk * x for kk, x in zip(np.atleast_1d(k), self.points))
        mode = np.exp(-1j * TWO_PI * phase)
        return complex(self.quadrature(self.inverse_transform(field) * mode))

    def random_field(
        self,
        rng: np.random.Generator,
        kmax: Optional[int] = None,
        amplitude: float = 1.0
    ) -> "SpectralField":
        """
        Campo real aleatorio limitado en banda (|k_i| <= kmax)

        Args:
            rng: Generador de numpy
            kmax: Corte espectral (por defecto el de la regla de 2/3)
            amplitude: Norma L² objetivo
        """
        kmax = self.dealias_cutoff if kmax is None else kmax
        coeffs = self.fft(rng.standard_normal(self.shape))
        keep = np.ones(self.shape, dtype=bool)
        for k in self.wavenumbers:
            keep = keep & (np.abs(k) <= kmax)
        coeffs = np.where(keep, coeffs, 0.0)
        norm = np.sqrt(np.sum(np.abs(coeffs) ** 2))
        if norm > 0:
            coeffs = coeffs * (amplitude / norm)
        return SpectralField(self, coeffs)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Coeficientes de Fourier complejos de un campo real en T^d"""

    grid: TorusGrid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=complex)
        if coeffs.shape != self.grid.shape:
            raise ValueError(
                f"Coeficientes {coeffs.shape} incompatibles con la malla {self.grid.shape}"
            )
        object.__setattr__(self, "coeffs", _readonly(coeffs.copy()))

    @classmethod
    def zeros(cls, grid: TorusGrid) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    @classmethod
    def from_function(cls, grid: TorusGrid, function) -> "SpectralField":
        return grid.forward_transform(grid.sample(function))

    def coeff(self, k: Wavevector) -> complex:
        return complex(self.coeffs[self.grid.index_of(k)])

    def reflected(self) -> np.ndarray:
        """Coeficientes en −k"""
        axes = self.grid.axes
        return np.roll(np.flip(self.coeffs, axis=axes), 1, axis=axes)

    def hermitian_defect(self) -> float:
        return float(np.max(np.abs(self.coeffs - np.conj(self.reflected()))))

    @property
    def hermitian(self) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.coeffs))))
        return self.hermitian_defect() <= 1e-12 * scale

    def to_physical(self) -> np.ndarray:
        return self.grid.inverse_transform(self)

    def l2_norm_sq(self) -> float:
        return float(np.sum(np.abs(self.coeffs) ** 2))

    def sobolev_norm_sq(self, s: float) -> float:
        return self.grid.sobolev_norm_sq(self, s)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__
