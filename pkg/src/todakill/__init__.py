"""Brownian particles with pairwise exponential killing: spectral kernels, Whittaker functions, simulation."""
__version__ = "0.1.0"

from .config import (CHAIN, WALL, Configuration, DensityResult, Estimate, ModelSpec,
                     QuadratureSpec, SimConfig)
from .quad import QuadratureError

__all__ = ["CHAIN", "WALL", "Configuration", "DensityResult", "Estimate", "ModelSpec",
           "QuadratureSpec", "SimConfig", "QuadratureError", "__version__"]
