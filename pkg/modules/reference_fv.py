"""
Volúmenes Finitos de Referencia
===============================
Solver pathwise de la ley de conservación estocástica

    du + div f(x, u) dt = Φ(x, u) dW

sobre una malla uniforme periódica (1D/2D), por splitting:
(a) actualización conservativa con flujo numérico de Engquist–Osher,
(b) paso de ruido de Milstein u ← u + ΦΔW + ½ΦΦ'(ΔW² − dt).

Incluye la restricción conservativa (promedios de celda exactos) de un
campo espectral a la malla y la distancia L¹ entre estados.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
import pandas as pd

from config import LimitStudyConfig
from modules.flux_noise import FluxModel, fv_face_fluxes
from modules.spectral import SpectralField, TorusGrid

logger = logging.getLogger(__name__)


class CflViolationError(ValueError):
    """dt supera CFL·h / max|f'|"""


class MeshMismatchError(ValueError):
    """Mallas sin relación de divisibilidad"""


# ==========================================
# ESTADO
# ==========================================

@dataclass
class FvState:
    """Promedios de celda (ejes de lote permitidos delante de la malla)"""

    cells: np.ndarray
    mesh_n: int
    t: float = 0.0
    dim: int = 1

    def __post_init__(self):
        self.cells = np.asarray(self.cells, dtype=float)
        if self.cells.shape[-self.dim:] != (self.mesh_n,) * self.dim:
            raise ValueError(f"Forma {self.cells.shape} incompatible con mesh_n={self.mesh_n}")
        if not np.all(np.isfinite(self.cells)):
            raise ValueError("El estado de volúmenes finitos contiene valores no finitos")

    @property
    def h(self) -> float:
        return 1.0 / self.mesh_n

    @property
    def axes(self) -> Tuple[int, ...]:
        return tuple(range(-self.dim, 0))

    def mean(self) -> np.ndarray:
        return np.mean(self.cells, axis=self.axes)


@dataclass
class FvPath:
    """Snapshots de una integración de volúmenes finitos"""

    times: np.ndarray
    cells: np.ndarray = field(repr=False)      # (..., S, *mesh)
    mesh_n: int = 0
    dim: int = 1

    def state(self, index: int) -> FvState:
        return FvState(self.cells[..., index, :] if self.dim == 1 else self.cells[..., index, :, :],
                       self.mesh_n, float(self.times[index]), self.dim)

    def to_frame(self) -> pd.DataFrame:
        """Tabla larga (t, cell_index, value) de una trayectoria"""
        if self.cells.ndim != self.dim + 1:
            raise ValueError("to_frame requiere una única trayectoria")
        n_cells = self.mesh_n ** self.dim
        return pd.DataFrame({
            "t": np.repeat(self.times, n_cells),
            "cell_index": np.tile(np.arange(n_cells), len(self.times)),
            "value": self.cells.reshape(-1),
        })

    def to_csv(self, path: Union[str, Path]) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.17g")


# ==========================================
# SOLVER
# ==========================================

class FvSolver:
    """
    Esquema de Engquist–Osher + Milstein sobre malla periódica

    Args:
        flux: Flujo separable (las velocidades de cara salen de fv_face_fluxes)
        noise: Modelo de ruido
        mesh_n: Celdas por eje
        dt: Paso temporal
        cfl: Constante CFL
    """

    def __init__(self, flux: FluxModel, noise, mesh_n: int, dt: float,
                 cfl: float = LimitStudyConfig.CFL):
        self.flux = flux
        self.noise = noise
        self.mesh_n = mesh_n
        self.dim = flux.dim
        self.dt = dt
        self.cfl = cfl
        self.h = 1.0 / mesh_n
        self.faces = fv_face_fluxes(flux, mesh_n)
        self.max_face_speed = max(float(np.max(np.abs(c))) for c in self.faces)
        self.g0 = float(flux.profile.value(0.0))
        centers = (np.arange(mesh_n) + 0.5) / mesh_n
        self.x1 = centers if self.dim == 1 else centers[:, None]

    def max_speed(self, cells: np.ndarray) -> float:
        if self.flux.is_zero or cells.size == 0:
            return 0.0
        lo, hi = float(np.min(cells)), float(np.max(cells))
        probe = np.linspace(lo, hi, 33)
        return self.max_face_speed * float(np.max(np.abs(self.flux.profile.derivative(probe))))

    def check_cfl(self, cells: np.ndarray) -> None:
        """
        Raises:
            CflViolationError: Si dt > CFL·h / max|f'|
        """
        speed = self.max_speed(cells)
        if speed > 0 and self.dt > self.cfl * self.h / speed * (1.0 + 1e-12):
            raise CflViolationError(
                f"dt={self.dt:.3e} viola CFL: máximo {self.cfl * self.h / speed:.3e} "
                f"(h={self.h:.3e}, max|f'|={speed:.3g})"
            )

    def stable_dt(self, u_max: float) -> float:
        probe = np.linspace(-u_max, u_max, 33)
        speed = self.max_face_speed * float(np.max(np.abs(self.flux.profile.derivative(probe))))
        return np.inf if speed == 0 else self.cfl * self.h / speed

    def numerical_flux(self, left: np.ndarray, right: np.ndarray, c: np.ndarray) -> np.ndarray:
        """Flujo de Engquist–Osher para c·g(u)"""
        profile = self.flux.profile
        forward = self.g0 + profile.plus_part(left) + profile.minus_part(right)
        backward = self.g0 + profile.minus_part(left) + profile.plus_part(right)
        return np.where(c >= 0, c * forward, c * backward)

    def transport_step(self, cells: np.ndarray) -> np.ndarray:
        """Sub-paso determinista conservativo"""
        if self.flux.is_zero:
            return cells.copy()
        self.check_cfl(cells)
        update = np.zeros_like(cells)
        for i, c in enumerate(self.faces):
            axis = cells.ndim - self.dim + i
            right = np.roll(cells, -1, axis=axis)
            face = self.numerical_flux(cells, right, c)
            update += face - np.roll(face, 1, axis=axis)
        return cells - self.dt / self.h * update

    def noise_step(self, cells: np.ndarray, dW: np.ndarray) -> np.ndarray:
        """Sub-paso de Milstein (ruido escalar, diagonal en x)"""
        if self.noise.is_zero:
            return cells
        dW = np.asarray(dW, dtype=float).reshape(np.shape(dW) + (1,) * self.dim)
        phi = self.noise.values(self.x1, cells)
        dphi = self.noise.derivative(self.x1, cells)
        return cells + phi * dW + 0.5 * phi * dphi * (dW ** 2 - self.dt)

    def step_cells(self, cells: np.ndarray, dW) -> np.ndarray:
        return self.noise_step(self.transport_step(cells), dW)

    def run(self, u0: np.ndarray, increments: np.ndarray,
            snapshot_every: int = 1) -> FvPath:
        """
        Integrar un lote de estados con incrementos (B, n_steps)

        Returns:
            FvPath con celdas (B, S, *mesh)
        """
        increments = np.atleast_2d(np.asarray(increments, dtype=float))
        batch, n_steps = increments.shape
        mesh_shape = (self.mesh_n,) * self.dim
        cells = np.broadcast_to(np.asarray(u0, dtype=float), (batch,) + mesh_shape).copy()

        snap_steps = list(range(0, n_steps + 1, snapshot_every))
        if snap_steps[-1] != n_steps:
            snap_steps.append(n_steps)
        out = np.zeros((batch, len(snap_steps)) + mesh_shape)
        out[:, 0] = cells
        slot = 1
        for n in range(n_steps):
            cells = self.step_cells(cells, increments[:, n])
            if slot < len(snap_steps) and n + 1 == snap_steps[slot]:
                out[:, slot] = cells
                slot += 1
        times = np.array(snap_steps, dtype=float) * self.dt
        return FvPath(times, out, self.mesh_n, self.dim)


def fv_step(state: FvState, dW: float, flux: FluxModel, noise, dt: float,
            cfl: float = LimitStudyConfig.CFL) -> FvState:
    """
    Un paso de splitting (transporte + ruido)

    Raises:
        CflViolationError: Si el paso viola la condición CFL
    """
    solver = FvSolver(flux, noise, state.mesh_n, dt, cfl)
    return FvState(solver.step_cells(state.cells, dW), state.mesh_n, state.t + dt, state.dim)


def total_variation(cells: np.ndarray, dim: int = 1) -> np.ndarray:
    """Variación total periódica por miembro"""
    axes = tuple(range(cells.ndim - dim, cells.ndim))
    tv = 0.0
    for axis in axes:
        tv = tv + np.sum(np.abs(np.roll(cells, -1, axis=axis) - cells), axis=axes)
    return tv / cells.shape[-1] ** (dim - 1)


# ==========================================
# RESTRICCIÓN Y DISTANCIAS
# ==========================================

def block_average(cells: np.ndarray, factor: int, dim: int) -> np.ndarray:
    if factor == 1:
        return cells
    lead = cells.shape[:-dim]
    n = cells.shape[-1]
    m = n // factor
    if dim == 1:
        return cells.reshape(lead + (m, factor)).mean(axis=-1)
    return cells.reshape(lead + (m, factor, m, factor)).mean(axis=(-3, -1))


def restrict_coeffs(coeffs: np.ndarray, grid: TorusGrid, mesh_n: int) -> np.ndarray:
    """
    Promedios de celda exactos del polinomio trigonométrico sobre la malla

    El promedio de e^{2πikx} sobre [ih, (i+1)h] es e^{2πik(i+½)h}·sinc(kh);
    se evalúa por FFT inversa con relleno de ceros y luego, si la malla es
    más gruesa que la espectral, por promedio en bloques.

    Raises:
        MeshMismatchError: Sin relación de divisibilidad entre n y mesh_n
    """
    n = grid.n_per_axis
    if mesh_n % n != 0 and n % mesh_n != 0:
        raise MeshMismatchError(f"Malla espectral n={n} y malla FV {mesh_n} incompatibles")
    target = max(mesh_n, n)
    fine = TorusGrid(grid.dim, target)
    h = 1.0 / target

    multiplier = np.ones(grid.shape, dtype=complex)
    for k in grid.wavenumbers:
        multiplier = multiplier * np.sinc(k * h) * np.exp(1j * np.pi * k * h)

    padded = np.zeros(coeffs.shape[:-grid.dim] + fine.shape, dtype=complex)
    index = [np.mod(np.fft.fftfreq(n, d=1.0 / n).astype(int), target)] * grid.dim
    padded[(Ellipsis,) + np.ix_(*index)] = coeffs * multiplier
    cells = fine.ifft(padded)
    return block_average(cells, target // mesh_n, grid.dim)


def cell_averages(field_: SpectralField, mesh_n: int) -> np.ndarray:
    """Restricción conservativa de un campo espectral a una malla de mesh_n celdas"""
    return restrict_coeffs(field_.coeffs, field_.grid, mesh_n)


def _as_cells(value, mesh_n: int, dim: int) -> Tuple[np.ndarray, int, int]:
    """Arrays sin malla asociada toman la dimensión del estado de referencia"""
    if isinstance(value, FvState):
        return value.cells, value.mesh_n, value.dim
    if isinstance(value, SpectralField):
        return cell_averages(value, mesh_n), mesh_n, value.grid.dim
    cells = np.asarray(value, dtype=float)
    return cells, cells.shape[-1], dim


def l1_distance(a: Union[FvState, SpectralField, np.ndarray], b: FvState) -> float:
    """
    Distancia L¹(M) entre promedios de celda

    Args:
        a: Estado FV, campo espectral (se restringe a la malla de b) o array
        b: Estado FV de referencia

    Raises:
        MeshMismatchError: Mallas sin relación de divisibilidad
    """
    ca, na, dim = _as_cells(a, b.mesh_n, b.dim)
    cb, nb = b.cells, b.mesh_n
    if na != nb:
        if na % nb == 0:
            ca = block_average(ca, na // nb, dim)
        elif nb % na == 0:
            cb = block_average(cb, nb // na, dim)
        else:
            raise MeshMismatchError(f"Mallas {na} y {nb} sin relación de divisibilidad")
    return float(np.mean(np.abs(ca - cb)))
