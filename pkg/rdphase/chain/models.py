# rdphase/chain/models.py

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel

from rdphase.core.exceptions import ConfigurationError
from rdphase.dynamics.solver import SolverConfig


class StageOutcome(str, Enum):
    """
    How a chain entry was reached.

    UP, DOWN and BLOWOUT are the three stopping boundaries of a stage (or the
    two moves of the ideal walk). REFLECT marks the deterministic return from
    the top level M-1 to M-2, which takes no time and runs no stage.
    """

    UP = "up"
    DOWN = "down"
    BLOWOUT = "blowout"
    REFLECT = "reflect"


@dataclass(frozen=True)
class ChainConfig:
    """
    Parameters of the reflected chain.

    Args:
        M: The level from `compute_level_M`; the chain lives on ..., M-2, M-1.
        p_up: Up-move probability of the ideal walk, in (1/2, 1].
        solver: Stage solver settings for the embedded chain.
        stage_timeout: Stage time after which a stage is abandoned.
    """

    M: int
    p_up: float = 2.0 / 3.0
    solver: Optional[SolverConfig] = None
    stage_timeout: float = 1000.0

    def __post_init__(self):
        if self.M > -1:
            raise ConfigurationError(f"chain level M must be <= -1, got {self.M}")
        if not 0.5 < self.p_up <= 1.0:
            raise ConfigurationError(f"p_up must lie in (1/2, 1], got {self.p_up}")
        if not self.stage_timeout > 0.0:
            raise ConfigurationError("stage timeout must be positive")

    @property
    def start_level(self) -> int:
        return self.M - 2

    @property
    def top_level(self) -> int:
        return self.M - 1


@dataclass
class ChainRecord:
    """
    The path X₀, X₁, ... of a chain.

    ``outcomes[n]`` and ``durations[n]`` describe how entry n+1 was reached;
    ``hits`` holds the move counts αₙ at which the top level was reached
    (reflection entries do not advance that clock).
    """

    M: int
    levels: np.ndarray
    outcomes: np.ndarray
    durations: np.ndarray
    hits: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __len__(self) -> int:
        return int(self.levels.size)

    def occupation_counts(self) -> Dict[int, int]:
        values, counts = np.unique(self.levels[1:], return_counts=True)
        return {int(v): int(c) for v, c in zip(values, counts)}

    def rows(self) -> List[dict]:
        """Rows for ``chain.csv``; entry 0 has no duration or outcome."""
        rows = [{"n": 0, "X_n": int(self.levels[0]), "ell_n": None, "outcome": None}]
        for n in range(1, len(self)):
            rows.append(
                {
                    "n": n,
                    "X_n": int(self.levels[n]),
                    "ell_n": float(self.durations[n - 1]),
                    "outcome": str(self.outcomes[n - 1]),
                }
            )
        return rows


@dataclass(frozen=True)
class StageResult:
    outcome: StageOutcome
    duration: float
    level: float


class ExcursionCheck(BaseModel):
    """Expected number of visits of a biased walk to (-inf, -k], against its bound."""

    k: int
    mc_mean: float
    mc_stderr: float
    bound: float
    passed: bool


class OccupationProfile(BaseModel):
    depths: List[int]
    fractions: List[float]
    decay_slope: Optional[float] = None  # slope of log fraction against depth


class StageStatistics(BaseModel):
    stages: int
    p_up: float
    p_up_ci: List[float]
    outcome_counts: Dict[str, int]
    duration_moments: Dict[int, float]
    floor: float
    floor_frequency: float
    tail: Dict[float, float]
