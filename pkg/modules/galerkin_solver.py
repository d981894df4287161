"""
Solver de Galerkin Espectral
============================
Integración del sistema de Galerkin para la ecuación pseudo-parabólica
estocástica

    d(u − δΔu) = (−div f(x, u) + εΔu) dt + Φ(x, u) dW

sobre el toro. Por modo k, con masa m_k = 1 + δ(2π|k|)² y tasa
r_k = ε(2π|k|)²/m_k:

    ĉ_{n+1} = exp(−r_k dt) · (ĉ_n + (F_k dt + Φ̂_k ΔW_n) / m_k)

El término lineal rígido se integra exactamente (factor integrante); la
no linealidad F_k = −2πik·f̂_k (pseudo-espectral, regla de 2/3) y el ruido
son explícitos (Euler–Maruyama). El kernel trabaja sobre lotes con un eje
de ensemble delante de los ejes espaciales.
"""

import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from config import SolverDefaults
from modules.flux_noise import (
    ConstantDirection,
    ConstantNoise,
    FluxModel,
    WienerPath,
    ZeroProfile,
)
from modules.spectral import TWO_PI, SpectralField, TorusGrid

logger = logging.getLogger(__name__)


class SolverBlowUpError(RuntimeError):
    """La norma L² superó la guardia de explosión o dejó de ser finita"""

    def __init__(self, step: int, time: float, norm: float, seed: Optional[int] = None):
        self.step = step
        self.time = time
        self.norm = norm
        self.seed = seed
        super().__init__(
            f"Explosión numérica en el paso {step} (t={time:.4g}): ||u||_L2 = {norm:.3e}"
            + (f" [semilla {seed}]" if seed is not None else "")
        )


class EnsembleAbortedError(RuntimeError):
    """Todos los miembros de un ensemble explotaron; ``failures`` conserva el detalle"""

    def __init__(self, message: str, failures: Optional[List[Dict]] = None):
        self.failures = list(failures or [])
        super().__init__(f"{message} ({len(self.failures)} fallos)")


# ==========================================
# CONFIGURACIÓN
# ==========================================

@dataclass
class SolverConfig:
    """Parámetros del integrador"""

    epsilon: float = SolverDefaults.EPSILON
    delta: float = SolverDefaults.DELTA
    n_per_axis: int = SolverDefaults.N_PER_AXIS
    dt: float = SolverDefaults.DT
    T: float = SolverDefaults.T
    dim: int = SolverDefaults.DIM
    dealias: str = SolverDefaults.DEALIAS
    scheme: str = SolverDefaults.SCHEME

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        """
        Verificar las restricciones físicas y numéricas

        Raises:
            ValueError: Con la restricción violada
        """
        if not 0.0 < self.epsilon <= SolverDefaults.MAX_EPSILON:
            raise ValueError(f"epsilon={self.epsilon} fuera de (0, 1/2]")
        if not 0.0 < self.delta <= SolverDefaults.MAX_DELTA:
            raise ValueError(f"delta={self.delta} fuera de (0, 1/2]: se requiere delta <= 1/2")
        if self.dt <= 0 or self.T <= 0:
            raise ValueError(f"dt y T deben ser > 0 (dt={self.dt}, T={self.T})")
        steps = round(self.T / self.dt)
        if steps < 1 or abs(steps * self.dt - self.T) > 1e-9 * self.T:
            raise ValueError(f"T={self.T} no es múltiplo de dt={self.dt}")
        if self.dealias != "two-thirds":
            raise ValueError(f"Regla de dealiasing desconocida '{self.dealias}'")
        if self.scheme != "euler-maruyama-semi-implicit":
            raise ValueError(f"Esquema desconocido '{self.scheme}'")
        TorusGrid(self.dim, self.n_per_axis)

    def check_scaling(self, bound: float) -> None:
        """Restricción del límite singular δ/ε² <= bound"""
        ratio = self.delta / self.epsilon ** 2
        if ratio > bound * (1.0 + 1e-12):
            raise ValueError(
                f"delta/epsilon^2 = {ratio:.4g} exceeds bound {bound}"
            )

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def grid(self) -> TorusGrid:
        return TorusGrid(self.dim, self.n_per_axis)

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict) -> "SolverConfig":
        return cls(**data)


# ==========================================
# RESULTADOS
# ==========================================

@dataclass
class BatchResult:
    """Estadísticos por miembro en los instantes de snapshot"""

    times: np.ndarray
    seeds: List[int]
    l2_sq: np.ndarray            # (B, S)
    h1_sq: np.ndarray
    h2_sq: np.ndarray
    grad_integral: np.ndarray    # ∫₀ᵗ ||∇u||² ds
    h2_integral: np.ndarray      # ∫₀ᵗ ||u||²_{H²} ds
    sup_l2_sq: np.ndarray        # sup_{s<=t} ||u(s)||²
    max_abs: np.ndarray          # max_x |u(t, x)|
    alive: np.ndarray            # (B,) bool
    failures: List[Dict] = field(default_factory=list)
    snapshots: Optional[np.ndarray] = None   # (B, S, *shape)

    @property
    def n_members(self) -> int:
        return len(self.seeds)

    def subset(self, mask: np.ndarray) -> "BatchResult":
        return BatchResult(
            times=self.times,
            seeds=[s for s, keep in zip(self.seeds, mask) if keep],
            l2_sq=self.l2_sq[mask], h1_sq=self.h1_sq[mask], h2_sq=self.h2_sq[mask],
            grad_integral=self.grad_integral[mask], h2_integral=self.h2_integral[mask],
            sup_l2_sq=self.sup_l2_sq[mask], max_abs=self.max_abs[mask], alive=self.alive[mask],
            failures=list(self.failures),
            snapshots=None if self.snapshots is None else self.snapshots[mask],
        )

    @staticmethod
    def concatenate(parts: List["BatchResult"]) -> "BatchResult":
        """Unir resultados de lotes consecutivos (orden de semillas)"""
        def cat(name):
            return np.concatenate([getattr(p, name) for p in parts])

        snapshots = None
        if all(p.snapshots is not None for p in parts):
            snapshots = cat("snapshots")
        return BatchResult(
            times=parts[0].times,
            seeds=[s for p in parts for s in p.seeds],
            l2_sq=cat("l2_sq"), h1_sq=cat("h1_sq"), h2_sq=cat("h2_sq"),
            grad_integral=cat("grad_integral"), h2_integral=cat("h2_integral"),
            sup_l2_sq=cat("sup_l2_sq"), max_abs=cat("max_abs"), alive=cat("alive"),
            failures=[f for p in parts for f in p.failures],
            snapshots=snapshots,
        )


@dataclass
class SolutionPath:
    """Trayectoria de Galerkin: snapshots espectrales y acumulados"""

    config: SolverConfig
    path: WienerPath
    times: np.ndarray
    coeffs: np.ndarray = field(repr=False)      # (S, *shape)
    grad_integral: np.ndarray = field(repr=False)
    h2_integral: np.ndarray = field(repr=False)
    sup_l2_sq: np.ndarray = field(repr=False)
    snapshot_every: int = 1

    @property
    def grid(self) -> TorusGrid:
        return self.config.grid

    @property
    def snapshots(self) -> List[SpectralField]:
        return [SpectralField(self.grid, c) for c in self.coeffs]

    def snapshot(self, index: int) -> SpectralField:
        return SpectralField(self.grid, self.coeffs[index])

    @property
    def initial(self) -> SpectralField:
        return self.snapshot(0)

    @property
    def terminal(self) -> SpectralField:
        return self.snapshot(-1)

    def physical(self) -> np.ndarray:
        """Muestras reales (S, *shape)"""
        return self.grid.ifft(self.coeffs)

    def to_frame(self) -> pd.DataFrame:
        """Tabla larga (t, k1[, k2], re, im) de los modos del snapshot"""
        grid = self.grid
        ks = [np.broadcast_to(k, grid.shape).reshape(-1) for k in grid.wavenumbers]
        frames = []
        for t, c in zip(self.times, self.coeffs):
            data = {"t": np.full(grid.num_points, t)}
            for i, k in enumerate(ks, start=1):
                data[f"k{i}"] = k.astype(int)
            flat = c.reshape(-1)
            data["re"] = flat.real
            data["im"] = flat.imag
            frames.append(pd.DataFrame(data))
        return pd.concat(frames, ignore_index=True)

    def to_csv(self, path: Union[str, Path]) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.17g")


# ==========================================
# INTEGRADOR
# ==========================================

class GalerkinIntegrator:
    """
    Kernel vectorizado del esquema de Euler–Maruyama semi-implícito

    Args:
        config: Parámetros del solver
        flux: Flujo f(x, λ) (su dimensión debe coincidir con la malla)
        noise: Modelo de ruido Φ(x, λ)
    """

    def __init__(self, config: SolverConfig, flux: FluxModel, noise):
        self.config = config
        self.flux = flux
        self.noise = noise
        self.grid = config.grid

        grid = self.grid
        dt = config.dt
        k2 = TWO_PI ** 2 * grid.k_squared
        self.mass = 1.0 + config.delta * k2
        self.rate = config.epsilon * k2 / self.mass
        self.decay = np.exp(-self.rate * dt)

        # ∫_0^dt exp(−2 r s) ds
        with np.errstate(divide="ignore", invalid="ignore"):
            quad = (1.0 - self.decay ** 2) / (2.0 * self.rate)
        self.step_quadrature = np.where(self.rate > 0, quad, dt)

        self.grad_weight = k2
        self.h2_weight = grid.lambda_sq_array ** 2
        self.h1_weight = grid.lambda_sq_array
        self.mask = grid.dealias_mask
        self.x1 = grid.points[0]
        self._batch_shape = (1,) * grid.dim

    # ==========================================
    # Términos del sistema
    # ==========================================

    def drift(self, coeffs: np.ndarray, physical: Optional[np.ndarray] = None) -> np.ndarray:
        """F_k = −2πik·f̂_k(u), con regla de 2/3"""
        if self.flux.is_zero:
            return np.zeros_like(coeffs)
        grid = self.grid
        u = grid.ifft(coeffs) if physical is None else physical
        f_hat = [grid.fft(fi) for fi in self.flux.values(u, grid)]
        return -grid.divergence_coeffs(f_hat) * self.mask

    def noise_coeffs(self, coeffs: np.ndarray, physical: Optional[np.ndarray] = None) -> np.ndarray:
        """Φ̂_k(u) proyectado a la banda de Galerkin"""
        if self.noise.is_zero:
            return np.zeros_like(coeffs)
        grid = self.grid
        u = grid.ifft(coeffs) if physical is None else physical
        return grid.fft(self.noise.values(self.x1, u)) * self.mask

    def increment(self, coeffs: np.ndarray, dW: np.ndarray) -> np.ndarray:
        """κ = (F dt + Φ̂ ΔW) / m"""
        needs_u = not (self.flux.is_zero and self.noise.is_zero)
        u = self.grid.ifft(coeffs) if needs_u else None
        dW = np.asarray(dW, dtype=float).reshape(np.shape(dW) + self._batch_shape)
        forcing = self.drift(coeffs, u) * self.config.dt + self.noise_coeffs(coeffs, u) * dW
        return forcing / self.mass

    def step(self, coeffs: np.ndarray, dW: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Un paso; devuelve (estado nuevo, estado intermedio ĉ_n + κ)"""
        intermediate = coeffs + self.increment(coeffs, dW)
        return self.decay * intermediate, intermediate

    # ==========================================
    # Integración de un lote
    # ==========================================

    def _norms(self, coeffs: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        power = np.abs(coeffs) ** 2
        axes = self.grid.axes
        return (np.sum(power, axis=axes),
                np.sum(self.h1_weight * power, axis=axes),
                np.sum(self.h2_weight * power, axis=axes))

    def run(
        self,
        u0: np.ndarray,
        increments: np.ndarray,
        seeds: Optional[List[int]] = None,
        snapshot_every: int = SolverDefaults.SNAPSHOT_EVERY,
        keep_snapshots: bool = False,
        blowup_norm: float = SolverDefaults.BLOWUP_NORM,
    ) -> BatchResult:
        """
        Integrar un lote de miembros

        Args:
            u0: Coeficientes iniciales (B, *shape) o (*shape) compartidos
            increments: ΔW por miembro (B, n_steps)
            seeds: Semillas de los miembros (para el registro de fallos)
            snapshot_every: Pasos entre snapshots (el instante final siempre se guarda)
            keep_snapshots: Guardar los coeficientes de cada snapshot
            blowup_norm: Guardia sobre ||u||_{L²}

        Returns:
            BatchResult; los miembros que explotan quedan marcados en ``failures``
        """
        grid = self.grid
        increments = np.atleast_2d(np.asarray(increments, dtype=float))
        batch, n_steps = increments.shape
        if n_steps < self.config.n_steps:
            raise ValueError(
                f"La trayectoria de Wiener tiene {n_steps} pasos; se requieren {self.config.n_steps}"
            )
        n_steps = self.config.n_steps
        seeds = list(seeds) if seeds is not None else list(range(batch))

        coeffs = np.broadcast_to(np.asarray(u0, dtype=complex), (batch,) + grid.shape).copy()
        coeffs *= self.mask

        snap_steps = list(range(0, n_steps + 1, snapshot_every))
        if snap_steps[-1] != n_steps:
            snap_steps.append(n_steps)
        n_snap = len(snap_steps)
        times = np.array(snap_steps, dtype=float) * self.config.dt

        l2 = np.zeros((batch, n_snap))
        h1 = np.zeros((batch, n_snap))
        h2 = np.zeros((batch, n_snap))
        grad_int = np.zeros((batch, n_snap))
        h2_int = np.zeros((batch, n_snap))
        sup_l2 = np.zeros((batch, n_snap))
        max_abs = np.zeros((batch, n_snap))
        snapshots = (np.zeros((batch, n_snap) + grid.shape, dtype=complex)
                     if keep_snapshots else None)

        alive = np.ones(batch, dtype=bool)
        failures: List[Dict] = []
        acc_grad = np.zeros(batch)
        acc_h2 = np.zeros(batch)
        running_sup, _, _ = self._norms(coeffs)

        def record(slot: int) -> None:
            l2[:, slot], h1[:, slot], h2[:, slot] = self._norms(coeffs)
            grad_int[:, slot] = acc_grad
            h2_int[:, slot] = acc_h2
            sup_l2[:, slot] = running_sup
            max_abs[:, slot] = np.max(np.abs(grid.ifft(coeffs)).reshape(batch, -1), axis=1)
            if snapshots is not None:
                snapshots[:, slot] = coeffs

        record(0)
        slot = 1
        axes = grid.axes
        for n in range(n_steps):
            coeffs, intermediate = self.step(coeffs, increments[:, n])
            power = np.abs(intermediate) ** 2 * self.step_quadrature
            acc_grad += np.sum(self.grad_weight * power, axis=axes)
            acc_h2 += np.sum(self.h2_weight * power, axis=axes)

            l2_now = np.sum(np.abs(coeffs) ** 2, axis=axes)
            bad = alive & ~(np.isfinite(l2_now) & (l2_now <= blowup_norm ** 2))
            if np.any(bad):
                for b in np.flatnonzero(bad):
                    norm = float(np.sqrt(l2_now[b])) if np.isfinite(l2_now[b]) else float("inf")
                    failures.append({
                        "seed": int(seeds[b]),
                        "step": n + 1,
                        "time": (n + 1) * self.config.dt,
                        "norm": norm,
                        "reason": f"||u||_L2 = {norm:.3e} > {blowup_norm:.1e}",
                    })
                    logger.warning(f"Miembro con semilla {seeds[b]} abortado en el paso {n + 1}")
                alive &= ~bad
                if not np.any(alive):
                    logger.error("Todos los miembros del lote explotaron")
                coeffs[~alive] = 0.0
                acc_grad[~alive] = 0.0
                acc_h2[~alive] = 0.0
                l2_now[~alive] = 0.0
            running_sup = np.maximum(running_sup, l2_now)

            if slot < n_snap and n + 1 == snap_steps[slot]:
                record(slot)
                slot += 1

        return BatchResult(times, seeds, l2, h1, h2, grad_int, h2_int, sup_l2,
                           max_abs, alive, failures, snapshots)


# ==========================================
# OPERACIONES PÚBLICAS
# ==========================================

def _project(field_: SpectralField) -> np.ndarray:
    return field_.coeffs * field_.grid.dealias_mask


def _solver_for(grid: TorusGrid, flux: FluxModel, noise, config: Optional[SolverConfig] = None):
    config = config or SolverConfig(n_per_axis=grid.n_per_axis, dim=grid.dim)
    return GalerkinIntegrator(config, flux, noise)


def drift_coefficient(j, field_: SpectralField, flux: FluxModel) -> Tuple[float, float]:
    """
    Coeficiente F_j = ∫_M f(x, u)·∇ē_j dV (parte real, parte imaginaria)

    Equivale al coeficiente de Fourier de −div f(x, u) en el modo j.
    """
    integrator = _solver_for(field_.grid, flux, ConstantNoise(0.0))
    value = integrator.drift(field_.coeffs[None])[0][field_.grid.index_of(j)]
    return float(value.real), float(value.imag)


def noise_coefficient(j, field_: SpectralField, noise) -> Tuple[float, float]:
    """Coeficiente Φ_j = ∫_M Φ(x, u) ē_j dV (parte real, parte imaginaria)"""
    zero = FluxModel("zero", ConstantDirection((0.0,) * field_.grid.dim), ZeroProfile())
    integrator = _solver_for(field_.grid, zero, noise)
    value = integrator.noise_coeffs(field_.coeffs[None])[0][field_.grid.index_of(j)]
    return float(value.real), float(value.imag)


def em_step(state: SpectralField, dW: float, config: SolverConfig, flux: FluxModel,
            noise) -> SpectralField:
    """
    Un paso de Euler–Maruyama con factor integrante exacto

    Raises:
        SolverBlowUpError: Si el nuevo estado no es finito o supera la guardia
    """
    if state.grid != config.grid:
        raise ValueError("El estado no pertenece a la malla del solver")
    integrator = GalerkinIntegrator(config, flux, noise)
    new, _ = integrator.step(state.coeffs[None], np.array([dW]))
    norm_sq = float(np.sum(np.abs(new) ** 2))
    if not np.isfinite(norm_sq) or norm_sq > SolverDefaults.BLOWUP_NORM ** 2:
        raise SolverBlowUpError(1, config.dt, float(np.sqrt(norm_sq)))
    return SpectralField(config.grid, new[0])


def simulate_path(
    u0: SpectralField,
    path: WienerPath,
    config: SolverConfig,
    flux: FluxModel,
    noise,
    snapshot_every: int = SolverDefaults.SNAPSHOT_EVERY,
) -> SolutionPath:
    """
    Integrar una trayectoria de Galerkin

    Args:
        u0: Dato inicial (se proyecta a la banda de dealiasing)
        path: Trayectoria de Wiener con horizonte >= T
        config: Parámetros del solver
        flux: Flujo
        noise: Ruido
        snapshot_every: Pasos entre snapshots

    Returns:
        SolutionPath determinista en (u0, semilla, config)

    Raises:
        SolverBlowUpError: Si la norma L² explota
    """
    if path.horizon < config.T - 1e-12:
        raise ValueError(f"Horizonte de Wiener {path.horizon} menor que T={config.T}")
    coarse = path.to_step(config.dt)
    removed = float(np.sum(np.abs(u0.coeffs * ~config.grid.dealias_mask) ** 2))
    if removed > 0:
        logger.debug(f"Dato inicial proyectado a la banda de 2/3 (masa eliminada {removed:.3e})")

    integrator = GalerkinIntegrator(config, flux, noise)
    result = integrator.run(_project(u0)[None], coarse.increments[None, :config.n_steps],
                            seeds=[path.seed], snapshot_every=snapshot_every,
                            keep_snapshots=True)
    if result.failures:
        failure = result.failures[0]
        raise SolverBlowUpError(failure["step"], failure["time"], failure["norm"], seed=path.seed)
    return SolutionPath(
        config=config,
        path=coarse,
        times=result.times,
        coeffs=result.snapshots[0],
        grad_integral=result.grad_integral[0],
        h2_integral=result.h2_integral[0],
        sup_l2_sq=result.sup_l2_sq[0],
        snapshot_every=snapshot_every,
    )


def linear_decay_factors(config: SolverConfig, t: float) -> np.ndarray:
    """exp(−ε(λ_k²−1)t / (1−δ+δλ_k²)) por modo"""
    grid = config.grid
    k2 = TWO_PI ** 2 * grid.k_squared
    return np.exp(-config.epsilon * k2 * t / (1.0 + config.delta * k2))


def decayed_l2_sq(u0: SpectralField, config: SolverConfig, t: float) -> float:
    """||u(t)||² de la evolución lineal pura"""
    factors = linear_decay_factors(config, t)
    return float(np.sum(np.abs(_project(u0) * factors) ** 2))


# ==========================================
# RESIDUO DE LA FORMA DÉBIL
# ==========================================

def _as_test_field(testfn: Union[SpectralField, Callable], grid: TorusGrid) -> SpectralField:
    if isinstance(testfn, SpectralField):
        return testfn
    return SpectralField.from_function(grid, testfn)


def weak_residual(
    path: SolutionPath,
    testfn: Union[SpectralField, Callable],
    flux: FluxModel,
    noise,
    convention: str = "riemann",
    t_index: int = -1,
) -> float:
    """
    Residuo pathwise de la identidad débil hasta el snapshot ``t_index``

        ⟨u(t),φ⟩ − ⟨u₀,φ⟩ − ∫⟨f(u),∇φ⟩ − ε∫⟨u,Δφ⟩ − δ(⟨u(t),Δφ⟩ − ⟨u₀,Δφ⟩) − ∫⟨Φ(u),φ⟩dW

    Args:
        path: Trayectoria con snapshots en cada paso
        testfn: φ como SpectralField o función ``φ(*points)``
        flux: Flujo usado en la simulación
        noise: Ruido usado en la simulación
        convention: ``riemann`` (sumas a izquierda) o ``scheme``
            (cuadratura exponencial del propio esquema; nula salvo redondeo)
        t_index: Snapshot final

    Returns:
        Residuo real

    Raises:
        ValueError: Si los snapshots no cubren cada paso o la convención es desconocida
    """
    if path.snapshot_every != 1:
        raise ValueError("weak_residual requiere snapshots en cada paso (snapshot_every=1)")
    if convention not in ("riemann", "scheme"):
        raise ValueError(f"Convención desconocida '{convention}'")

    config = path.config
    grid = config.grid
    phi = np.conj(_as_test_field(testfn, grid).coeffs)
    integrator = GalerkinIntegrator(config, flux, noise)

    n_last = range(len(path.times))[t_index]
    states = path.coeffs[:n_last]
    dW = path.path.increments[:n_last]
    drift = integrator.drift(states)
    noise_hat = integrator.noise_coeffs(states)
    dW_b = dW.reshape((-1,) + (1,) * grid.dim)

    def pair(coeffs: np.ndarray) -> float:
        return float(np.real(np.sum(phi * coeffs)))

    mass_change = integrator.mass * (path.coeffs[n_last] - path.coeffs[0])
    if convention == "riemann":
        linear = config.epsilon * integrator.grad_weight * np.sum(states, axis=0) * config.dt
        forcing = np.sum(drift, axis=0) * config.dt + np.sum(noise_hat * dW_b, axis=0)
        return pair(mass_change + linear - forcing)

    decay = integrator.decay
    linear = -integrator.mass * (decay - 1.0) * np.sum(states, axis=0)
    forcing = decay * (np.sum(drift, axis=0) * config.dt + np.sum(noise_hat * dW_b, axis=0))
    return pair(mass_change + linear - forcing)
