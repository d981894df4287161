"""
Flujos, Ruido y Trayectorias de Wiener
======================================
"""

from .flux_models import (
    BurgersProfile,
    ConstantDirection,
    FluxModel,
    FluxValidation,
    GeometryReport,
    LinearProfile,
    SinusoidalStream,
    StreamFunctionDirection,
    TentStream,
    ZeroProfile,
    check_geometry_compat,
    fv_face_fluxes,
    regularization_gap,
    stokes_residual,
    validate_flux,
)
from .noise_models import (
    BoundedNoise,
    ConstantNoise,
    LinearNoise,
    NoiseValidation,
    validate_noise,
)
from .nondegeneracy import NondegeneracyReport, nondegeneracy_measure, nondegeneracy_report
from .presets import FLUX_DIMS, FLUX_PRESETS, NOISE_PRESETS, make_flux, make_noise
from .wiener import (
    WienerPath,
    WienerPathError,
    coarsen,
    member_seeds,
    sample_wiener,
    stack_increments,
)

__all__ = [
    "FluxModel", "BurgersProfile", "LinearProfile", "ZeroProfile",
    "ConstantDirection", "StreamFunctionDirection", "SinusoidalStream", "TentStream",
    "GeometryReport", "FluxValidation", "check_geometry_compat", "validate_flux",
    "regularization_gap", "stokes_residual", "fv_face_fluxes",
    "ConstantNoise", "LinearNoise", "BoundedNoise", "NoiseValidation", "validate_noise",
    "NondegeneracyReport", "nondegeneracy_measure", "nondegeneracy_report",
    "FLUX_PRESETS", "FLUX_DIMS", "NOISE_PRESETS", "make_flux", "make_noise",
    "WienerPath", "WienerPathError", "sample_wiener", "coarsen", "stack_increments",
    "member_seeds",
]
