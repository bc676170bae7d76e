"""Linearized 2D Euler dynamics around a radial vortex.

Angular Fourier modes of a vorticity perturbation are evolved in time and,
independently, represented through the spectral density of the linearized
operator. The two routes are cross-checked against each other and against
closed-form results.
"""

from .config import ConfigError, RunConfig, load_config
from .grid import RadialGrid, make_grid
from .profile import VortexProfile, make_canonical_profile

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "RadialGrid",
    "RunConfig",
    "VortexProfile",
    "load_config",
    "make_canonical_profile",
    "make_grid",
    "__version__",
]
