"""
Presets de Flujo y Ruido
========================
Construcción por nombre de los modelos seleccionables desde el archivo de
configuración.
"""

from typing import Callable, Dict

from config import FluxDefaults, NoiseDefaults

from .flux_models import (
    PROFILES,
    ConstantDirection,
    FluxModel,
    SinusoidalStream,
    StreamFunctionDirection,
    TentStream,
)
from .noise_models import BoundedNoise, ConstantNoise, LinearNoise


def _profile(profile: str, speed: float):
    if profile not in PROFILES:
        raise ValueError(f"Perfil desconocido '{profile}'. Opciones: {sorted(PROFILES)}")
    if profile == "linear":
        return PROFILES[profile](speed=speed)
    return PROFILES[profile]()


def burgers1d(profile: str = "burgers", speed: float = 1.0,
              sigma0: float = FluxDefaults.SIGMA0) -> FluxModel:
    """f(x, λ) = g(λ) en T¹"""
    return FluxModel("burgers1d", ConstantDirection((1.0,)), _profile(profile, speed), sigma0)


def stream2d_smooth(profile: str = "burgers", speed: float = 1.0,
                    sigma0: float = FluxDefaults.SIGMA0,
                    amplitude: float = SinusoidalStream.amplitude) -> FluxModel:
    """a = rot90(∇ψ) con ψ = A sin(2πx₁) sin(2πx₂)"""
    direction = StreamFunctionDirection(SinusoidalStream(amplitude=amplitude))
    return FluxModel("stream2d-smooth", direction, _profile(profile, speed), sigma0)


def stream2d_rough(profile: str = "burgers", speed: float = 1.0,
                   sigma0: float = FluxDefaults.SIGMA0,
                   amplitude: float = TentStream.amplitude,
                   modulation: float = TentStream.modulation) -> FluxModel:
    """ψ lineal a trozos en x₁: a(x) discontinua a través de x₁ ∈ {0, 1/2}"""
    direction = StreamFunctionDirection(TentStream(amplitude=amplitude, modulation=modulation))
    return FluxModel("stream2d-rough", direction, _profile(profile, speed), sigma0)


FLUX_PRESETS: Dict[str, Callable[..., FluxModel]] = {
    "burgers1d": burgers1d,
    "stream2d-smooth": stream2d_smooth,
    "stream2d-rough": stream2d_rough,
}

FLUX_DIMS = {"burgers1d": 1, "stream2d-smooth": 2, "stream2d-rough": 2}


def noise_const(sigma: float = NoiseDefaults.SIGMA) -> ConstantNoise:
    return ConstantNoise(sigma=sigma)


def noise_linear(coeff: float = NoiseDefaults.LINEAR_COEFF) -> LinearNoise:
    return LinearNoise(coeff=coeff)


def noise_bounded(sigma: float = NoiseDefaults.SIGMA,
                  amplitude: float = NoiseDefaults.BOUNDED_AMPLITUDE) -> BoundedNoise:
    return BoundedNoise(sigma=sigma, amplitude=amplitude)


NOISE_PRESETS = {
    "noise-const": noise_const,
    "noise-linear": noise_linear,
    "noise-bounded": noise_bounded,
}


def make_flux(name: str, **params) -> FluxModel:
    """
    Crear un flujo por nombre de preset

    Raises:
        ValueError: Preset o parámetro desconocido
    """
    if name not in FLUX_PRESETS:
        raise ValueError(f"Preset de flujo desconocido '{name}'. Opciones: {sorted(FLUX_PRESETS)}")
    try:
        return FLUX_PRESETS[name](**params)
    except TypeError as e:
        raise ValueError(f"Parámetros inválidos para '{name}': {e}") from e


def make_noise(name: str, **params):
    """Crear un modelo de ruido por nombre de preset"""
    if name not in NOISE_PRESETS:
        raise ValueError(f"Preset de ruido desconocido '{name}'. Opciones: {sorted(NOISE_PRESETS)}")
    try:
        return NOISE_PRESETS[name](**params)
    except TypeError as e:
        raise ValueError(f"Parámetros inválidos para '{name}': {e}") from e
