"""
rdphase - numerical laboratory for noise-driven extinction in reaction-diffusion SPDEs.
"""

__version__ = "0.1.0"

from rdphase.core.exceptions import (  # noqa: E402
    BlowUpError,
    ConfigurationError,
    DomainError,
    OutputError,
    PreconditionError,
    RDPhaseError,
    StageTimeoutError,
    UsageError,
)
from rdphase.core.field import Field, TorusGrid  # noqa: E402
from rdphase.dynamics.noise import NoiseStream  # noqa: E402
from rdphase.dynamics.reaction import DiffusionSpec, PotentialSpec  # noqa: E402
from rdphase.dynamics.solver import SolverConfig, simulate  # noqa: E402

__all__ = [
    "TorusGrid",
    "Field",
    "PotentialSpec",
    "DiffusionSpec",
    "NoiseStream",
    "SolverConfig",
    "simulate",
    "RDPhaseError",
    "UsageError",
    "DomainError",
    "ConfigurationError",
    "PreconditionError",
    "BlowUpError",
    "StageTimeoutError",
    "OutputError",
]
