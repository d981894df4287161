"""
Módulo espectral del toro plano
===============================
Base de Fourier, operadores Λ^s, transformadas, cuadratura y normas de Sobolev.
"""

from .torus_grid import TWO_PI, SpectralField, TorusGrid

__all__ = ["TorusGrid", "SpectralField", "TWO_PI"]
