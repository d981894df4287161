"""
Trayectorias de Wiener
======================
Movimiento browniano real muestreado con semilla fija sobre una malla fina
de paso dt_fine. Las versiones gruesas son submuestreos de los valores
acumulados, de modo que cada incremento grueso es la suma exacta de los
incrementos finos que cubre y todos los solvers de una comparación ven el
mismo W.
"""

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)


class WienerPathError(ValueError):
    """Parámetros de trayectoria o factor de refinamiento inválidos"""


def _step_count(horizon: float, dt: float) -> int:
    if dt <= 0 or horizon <= 0:
        raise WienerPathError(f"dt y T deben ser > 0 (dt={dt}, T={horizon})")
    steps = int(round(horizon / dt))
    if steps < 1 or abs(steps * dt - horizon) > 1e-9 * max(1.0, horizon):
        raise WienerPathError(f"T={horizon} no es múltiplo de dt={dt}")
    return steps


@dataclass(frozen=True, eq=False)
class WienerPath:
    """Valores W(t_i) en t_i = i·dt con W(0) = 0"""

    seed: int
    dt_fine: float
    horizon: float
    values: np.ndarray = field(repr=False)

    @property
    def n_steps(self) -> int:
        return self.values.shape[-1] - 1

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.values)

    @property
    def terminal(self) -> float:
        return float(self.values[-1])

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    def coarsen(self, factor: int) -> "WienerPath":
        """
        Trayectoria con paso factor·dt (submuestreo de los valores acumulados)

        Raises:
            WienerPathError: Si ``factor`` no divide el número de pasos
        """
        if factor < 1 or self.n_steps % factor != 0:
            raise WienerPathError(
                f"El factor {factor} no divide los {self.n_steps} pasos finos"
            )
        values = self.values[::factor].copy()
        values.setflags(write=False)
        return WienerPath(self.seed, self.dt_fine, self.horizon, values)

    def to_step(self, dt: float) -> "WienerPath":
        """Versión con paso dt (múltiplo entero del paso actual)"""
        factor = int(round(dt / self.dt))
        if factor < 1 or abs(factor * self.dt - dt) > 1e-9 * dt:
            raise WienerPathError(f"dt={dt} no es múltiplo del paso {self.dt}")
        return self.coarsen(factor)


def sample_wiener(seed: int, dt_fine: float, horizon: float) -> WienerPath:
    """
    Muestrear una trayectoria de Wiener reproducible

    Args:
        seed: Semilla (misma semilla ⇒ incrementos idénticos bit a bit)
        dt_fine: Paso fino
        horizon: Horizonte T (múltiplo de dt_fine)

    Returns:
        WienerPath con incrementos N(0, dt_fine)
    """
    steps = _step_count(horizon, dt_fine)
    rng = np.random.default_rng(seed)
    values = np.empty(steps + 1)
    values[0] = 0.0
    np.cumsum(rng.standard_normal(steps) * np.sqrt(dt_fine), out=values[1:])
    values.setflags(write=False)
    return WienerPath(int(seed), float(dt_fine), float(horizon), values)


def coarsen(path: WienerPath, factor: int) -> WienerPath:
    return path.coarsen(factor)


def stack_increments(paths: Sequence[WienerPath], dt: float) -> np.ndarray:
    """Incrementos (miembros × pasos) de un lote de trayectorias al paso dt"""
    return np.stack([p.to_step(dt).increments for p in paths])


def member_seeds(master_seed: int, n_paths: int) -> list:
    """Semillas seed0, seed0+1, ..., seed0+n_paths−1"""
    return [int(master_seed) + i for i in range(n_paths)]
