"""
Arnés SPDE de Capilaridad Dinámica - Módulos
============================================
Librería numérica: base espectral del toro, flujos y ruido, solver de
Galerkin, volúmenes finitos de referencia, diagnósticos cinéticos y
experimentos Monte-Carlo.
"""

from . import spectral
from . import flux_noise
from . import galerkin_solver
from . import reference_fv
from . import kinetic_diagnostics
from . import harness
from . import run_config

__all__ = [
    "spectral",
    "flux_noise",
    "galerkin_solver",
    "reference_fv",
    "kinetic_diagnostics",
    "harness",
    "run_config",
]
