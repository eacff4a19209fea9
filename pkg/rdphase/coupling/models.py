# rdphase/coupling/models.py

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel

from rdphase.core.field import Field
from rdphase.dynamics.solver import Integrator


class CouplingKind(str, Enum):
    """
    How the noises driving the two solutions are related.
    """

    NATURAL = "natural"  # one shared noise
    INDEPENDENT = "independent"  # two unrelated noises
    PM = "pm"  # partially mixed: ψ₂ borrows ψ₁'s noise where they are close
    AM = "am"  # anchored: each ψᵢ is PM-coupled to a dominating anchor

    @property
    def arity(self) -> int:
        """Number of noise streams the construction consumes per step."""
        return {"natural": 1, "independent": 2, "pm": 2, "am": 3}[self.value]


@dataclass
class CouplingState:
    """
    Two solutions (plus the anchor for AM) being stepped together.

    Once `merged` is set the second solution is overwritten with the first
    after every step, so the two stay bit-identical.
    """

    psi1: Integrator
    psi2: Integrator
    anchor: Optional[Integrator] = None
    merged: bool = False
    tau: Optional[float] = None
    anchor_hits: List[bool] = field(default_factory=lambda: [False, False])

    @property
    def time(self) -> float:
        return self.psi1.time

    @property
    def fields(self) -> Tuple[Field, Field]:
        return self.psi1.field, self.psi2.field

    @property
    def difference(self) -> np.ndarray:
        return self.psi1.values - self.psi2.values


@dataclass
class CouplingOutcome:
    """The record of one coupled run up to its horizon (or merge)."""

    kind: CouplingKind
    merged: bool
    tau: Optional[float]
    horizon: float
    times: np.ndarray
    mass: np.ndarray  # X(t) = ∫(ψ₁ - ψ₂)
    ordering_violations: int = 0
    samples: Dict[float, Dict[str, float]] = field(default_factory=dict)

    @property
    def tau_or_timeout(self) -> float:
        return self.tau if self.merged else self.horizon


class MassAudit(BaseModel):
    """Ensemble check that e^{-t}X(t) behaves as a supermartingale."""

    replicas: int
    times: List[float]
    mean_y: List[float]
    stderr_y: List[float]
    max_increase: float
    min_mass: float
    passed: bool


class SuccessPoint(BaseModel):
    """Empirical merge probability for one initial L¹ distance."""

    delta: float
    successes: int
    trials: int
    probability: float
    ci_low: float
    ci_high: float


class MarginalComparison(BaseModel):
    """One observable of ψ₂ compared between a coupling and a lone run."""

    time: float
    observable: str
    coupled: float
    reference: float
    z_score: float


class MarginalLawReport(BaseModel):
    kind: CouplingKind
    replicas: int
    comparisons: List[MarginalComparison]
    threshold: float = 3.0

    @property
    def passed(self) -> bool:
        return all(c.z_score <= self.threshold for c in self.comparisons)


class RegenerationPhase(BaseModel):
    name: str  # independent | wait | anchored
    start: float
    end: float
    anchor_hits: Optional[List[bool]] = None  # anchored phases only


class RegenerationReport(BaseModel):
    merged: bool
    tau: Optional[float]
    cycles: int
    phases: List[RegenerationPhase]
    anchor_hits: int = 0
