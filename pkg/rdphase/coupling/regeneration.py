# rdphase/coupling/regeneration.py

"""
The hybrid independent/anchored coupling schedule.

Each cycle runs the two solutions on independent noise for `t0`, waits (still
independent) until both sit in the good set

    {ω : inf ω >= c0 and ‖ω‖_{C^α} <= C0}

checking every `q` time units, then runs the anchored coupling for `t1`. The
schedule stops at the first merge or after `max_cycles` cycles.
"""

from typing import List, Optional, Sequence

from rdphase.core.exceptions import UsageError
from rdphase.core.field import Field, dyadic_lags, holder_seminorm, infimum
from rdphase.coupling.engine import couple_step, detect_merge, init_state
from rdphase.coupling.models import (
    CouplingKind,
    CouplingState,
    RegenerationPhase,
    RegenerationReport,
)
from rdphase.dynamics.noise import NoiseStream
from rdphase.dynamics.solver import SolverConfig
from rdphase.utils.logging import get_logger

logger = get_logger(__name__)


def in_good_set(f: Field, c0: float, C0: float, alpha: float) -> bool:
    if infimum(f) < c0:
        return False
    return holder_seminorm(f, alpha, dyadic_lags(f.grid.points)) <= C0


def _run_for(
    state: CouplingState,
    kind: CouplingKind,
    streams: Sequence[NoiseStream],
    cfg: SolverConfig,
    duration: float,
    merge_tol: Optional[float],
) -> None:
    for _ in range(int(round(duration / cfg.dt))):
        couple_step(state, kind, streams, cfg)
        detect_merge(state, merge_tol)
        if state.merged:
            return


def regeneration_schedule(
    psi1_0: Field,
    psi2_0: Field,
    cfg: SolverConfig,
    streams: Sequence[NoiseStream],
    t0: float,
    t1: float,
    c0: float,
    C0: float,
    alpha: float = 0.4,
    q: float = 0.5,
    max_cycles: int = 10,
    max_wait: Optional[float] = None,
    merge_tol: Optional[float] = None,
) -> RegenerationReport:
    """
    Runs the schedule on three streams (the independent phases use the first
    two).

    Raises:
        UsageError: Fewer than three streams or non-positive phase lengths.
    """
    if len(streams) < 3:
        raise UsageError("the regeneration schedule needs three noise streams")
    if not (t0 > 0 and t1 > 0 and q > 0 and max_cycles >= 1):
        raise UsageError("phase lengths, check spacing and cycle count must be positive")
    max_wait = 10.0 * t1 if max_wait is None else max_wait
    independent = list(streams[:2])
    anchored = list(streams[:3])
    state = init_state(psi1_0, psi2_0, CouplingKind.INDEPENDENT, cfg)
    detect_merge(state, merge_tol)
    phases: List[RegenerationPhase] = []
    cycles = 0
    anchor_hits = 0

    while not state.merged and cycles < max_cycles:
        cycles += 1
        start = state.time
        _run_for(state, CouplingKind.INDEPENDENT, independent, cfg, t0, merge_tol)
        phases.append(RegenerationPhase(name="independent", start=start, end=state.time))
        if state.merged:
            break

        start = state.time
        ready = False
        while not state.merged:
            ready = all(in_good_set(f, c0, C0, alpha) for f in state.fields)
            if ready or state.time - start >= max_wait:
                break
            _run_for(state, CouplingKind.INDEPENDENT, independent, cfg, q, merge_tol)
        phases.append(RegenerationPhase(name="wait", start=start, end=state.time))
        if state.merged or not ready:
            continue

        start = state.time
        psi1, psi2 = state.fields
        anchored_state = init_state(psi1, psi2, CouplingKind.AM, cfg, t0=start)
        _run_for(anchored_state, CouplingKind.AM, anchored, cfg, t1, merge_tol)
        hits = list(anchored_state.anchor_hits)
        anchor_hits += sum(hits)
        state = CouplingState(
            psi1=anchored_state.psi1,
            psi2=anchored_state.psi2,
            merged=anchored_state.merged,
            tau=anchored_state.tau,
            anchor_hits=hits,
        )
        phases.append(
            RegenerationPhase(
                name="anchored", start=start, end=state.time, anchor_hits=hits
            )
        )
        logger.debug("regeneration cycle %d ended at t=%.6g", cycles, state.time)

    return RegenerationReport(
        merged=state.merged,
        tau=state.tau,
        cycles=cycles,
        phases=phases,
        anchor_hits=anchor_hits,
    )
