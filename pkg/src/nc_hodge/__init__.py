"""Numerical Hodge-de Rham theory for ergodic C*-dynamical systems with a conformal factor."""

from .complex_engine import build_d, build_D, build_K, build_laplacians, build_space
from .config import RunConfig, load_config
from .errors import (
    ConfigError,
    ConsistencyError,
    DegeneracyError,
    InvariantBreach,
    NCHodgeError,
    ParameterError,
    StructureError,
)
from .hodge_spectral import cohomology_dims, hodge_decompose, mckean_singer, odd_index
from .lie_exterior import ExteriorBasis, LieAlgebraSpec, abelian, su2
from .runner import run
from .system_models import build_conformal_element, build_fuzzy_sphere, build_nc_torus, golden_theta

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ConsistencyError",
    "DegeneracyError",
    "ExteriorBasis",
    "InvariantBreach",
    "LieAlgebraSpec",
    "NCHodgeError",
    "ParameterError",
    "RunConfig",
    "StructureError",
    "abelian",
    "build_D",
    "build_K",
    "build_conformal_element",
    "build_d",
    "build_fuzzy_sphere",
    "build_laplacians",
    "build_nc_torus",
    "build_space",
    "cohomology_dims",
    "golden_theta",
    "hodge_decompose",
    "load_config",
    "mckean_singer",
    "odd_index",
    "run",
    "su2",
]
