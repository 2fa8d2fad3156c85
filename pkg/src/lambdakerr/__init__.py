"""Closed-form dynamics of a Lambda-type three-level atom in a two-mode Kerr cavity.

The state space splits into invariant three-dimensional blocks labelled by
photon numbers ``(n1, n2)``; each block is solved exactly through a cubic
characteristic equation. Observables are assembled from the block amplitudes
weighted by coherent-state Fock coefficients.
"""

from .blocks import FockBlock, solve_block, amplitudes_at
from .config import ConfigError, RunConfig, load_config, parse_config, preset
from .model import EffectiveModel, RawModel, derive_effective
from .state import CoherentSpec, auto_truncation, atomic_density, evolve, fixed_truncation

__all__ = [
    "CoherentSpec",
    "ConfigError",
    "EffectiveModel",
    "FockBlock",
    "RawModel",
    "RunConfig",
    "amplitudes_at",
    "atomic_density",
    "auto_truncation",
    "derive_effective",
    "evolve",
    "fixed_truncation",
    "load_config",
    "parse_config",
    "preset",
    "solve_block",
]
__version__ = "0.1.0"
