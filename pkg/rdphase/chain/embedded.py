# rdphase/chain/embedded.py

"""
The chain embedded in the equation.

A stage at level L starts from the constant profile L·𝟙 and evolves under

    ∂ₜw = ∂²ₓw + ½L + λσ(w)Ẇ

until the first grid time at which the infimum falls to ½L (DOWN), the
supremum reaches 4L (BLOWOUT) or the infimum reaches 2L (UP), checked in that
order. The chain moves X → X+1 after UP and X → X-1 otherwise, and is sent
back from M-1 to M-2 without running a stage.
"""

import math
from typing import List, Optional, Sequence

import numpy as np

from rdphase.chain.models import (
    ChainConfig,
    ChainRecord,
    StageOutcome,
    StageResult,
    StageStatistics,
)
from rdphase.core.exceptions import ConfigurationError, DomainError, StageTimeoutError
from rdphase.core.field import Field
from rdphase.dynamics.noise import NoiseStream
from rdphase.dynamics.solver import Integrator
from rdphase.utils.logging import get_logger
from rdphase.utils.parallel import map_replicas
from rdphase.utils.stats import wilson_interval

logger = get_logger(__name__)

UP_TOLERANCE = 1e-12


def _stage_outcome(values: np.ndarray, level: float) -> Optional[StageOutcome]:
    low = float(values.min())
    if low <= 0.5 * level:
        return StageOutcome.DOWN
    if float(values.max()) >= 4.0 * level:
        return StageOutcome.BLOWOUT
    if low >= 2.0 * level * (1.0 - UP_TOLERANCE):
        return StageOutcome.UP
    return None


def run_embedded_stage(
    L: float,
    cfg: ChainConfig,
    stream: NoiseStream,
    timeout: Optional[float] = None,
) -> StageResult:
    """
    Runs one stage from L·𝟙.

    Raises:
        ConfigurationError: If `cfg` has no stage solver settings.
        DomainError: If L is outside (0, 2^(M-1)].
        StageTimeoutError: If no boundary is reached by the timeout; the
            error carries the partial field.
    """
    if cfg.solver is None:
        raise ConfigurationError("embedded stages need solver settings")
    if not 0.0 < L <= 2.0 ** (cfg.M - 1):
        raise DomainError(f"stage level must lie in (0, 2^(M-1)], got {L}")
    timeout = cfg.stage_timeout if timeout is None else timeout
    solver = cfg.solver.with_changes(constant_drift=0.5 * L)
    integrator = Integrator(Field.constant(solver.grid, L), solver, stream)
    max_steps = int(math.ceil(timeout / solver.dt))
    for _ in range(max_steps):
        integrator.advance(1)
        outcome = _stage_outcome(integrator.values, L)
        if outcome is not None:
            return StageResult(outcome=outcome, duration=integrator.time, level=L)
    raise StageTimeoutError(integrator.time, integrator.values.copy())


def run_embedded_chain(
    cfg: ChainConfig, stages: int, stream: NoiseStream
) -> ChainRecord:
    """
    Runs `stages` stages from X₀ = M-2, inserting a zero-time reflection entry
    whenever the chain reaches M-1.

    Raises:
        StageTimeoutError: Propagated from a stage that did not stop.
    """
    if stages < 1:
        raise DomainError("the embedded chain needs at least one stage")
    levels: List[int] = [cfg.start_level]
    outcomes: List[str] = []
    durations: List[float] = []
    hits: List[int] = []
    level = cfg.start_level
    for n in range(1, stages + 1):
        result = run_embedded_stage(2.0**level, cfg, stream)
        level += 1 if result.outcome == StageOutcome.UP else -1
        levels.append(level)
        outcomes.append(result.outcome.value)
        durations.append(result.duration)
        if level == cfg.top_level:
            hits.append(n)
            level = cfg.start_level
            levels.append(level)
            outcomes.append(StageOutcome.REFLECT.value)
            durations.append(0.0)
    logger.info("embedded chain: %d stages, %d reflections", stages, len(hits))
    return ChainRecord(
        M=cfg.M,
        levels=np.array(levels, dtype=np.int64),
        outcomes=np.array(outcomes, dtype=object),
        durations=np.array(durations),
        hits=np.array(hits, dtype=np.int64),
    )


def sample_stages(
    L: float,
    cfg: ChainConfig,
    count: int,
    seed: int,
    workers: Optional[int] = None,
    first_replica: int = 0,
) -> List[StageResult]:
    """Independent stages at one level, one replica stream each."""
    ids = range(first_replica, first_replica + count)
    return map_replicas(
        lambda r: run_embedded_stage(L, cfg, NoiseStream(seed, r)), ids, workers
    )


def stage_statistics(
    results: Sequence[StageResult],
    floor: float = 0.01,
    tail_times: Sequence[float] = (0.5, 1.0, 2.0, 4.0, 8.0),
) -> StageStatistics:
    """
    Summary of a batch of stages: P(UP) with a Wilson interval, duration
    moments of order 1..4, how often ℓ reaches `floor`, and P(ℓ > T).
    """
    if not results:
        raise DomainError("stage statistics need at least one stage")
    durations = np.array([r.duration for r in results])
    ups = sum(r.outcome == StageOutcome.UP for r in results)
    counts = {o.value: 0 for o in StageOutcome if o != StageOutcome.REFLECT}
    for r in results:
        counts[r.outcome.value] += 1
    ci = wilson_interval(ups, len(results))
    return StageStatistics(
        stages=len(results),
        p_up=ups / len(results),
        p_up_ci=list(ci),
        outcome_counts=counts,
        duration_moments={k: float(np.mean(durations**k)) for k in range(1, 5)},
        floor=floor,
        floor_frequency=float(np.mean(durations >= floor)),
        tail={float(t): float(np.mean(durations > t)) for t in tail_times},
    )
