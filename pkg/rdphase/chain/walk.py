# rdphase/chain/walk.py

"""
The idealised reflected chain: a p-biased ±1 walk started at M-2 that is sent
back to M-2 every time it reaches M-1.
"""

import math
from typing import List, Optional, Sequence

import numpy as np

from rdphase.chain.models import (
    ChainConfig,
    ChainRecord,
    ExcursionCheck,
    OccupationProfile,
    StageOutcome,
)
from rdphase.core.exceptions import DomainError, UsageError
from rdphase.dynamics.noise import NoiseStream
from rdphase.utils.logging import get_logger
from rdphase.utils.stats import linear_fit, pairwise_sum

logger = get_logger(__name__)

MIN_OCCUPATION_ENTRIES = 1000


def biased_steps(p: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """n independent moves, +1 with probability p and -1 otherwise."""
    return np.where(rng.random(n) < p, 1, -1).astype(np.int64)


def run_ideal_chain(cfg: ChainConfig, steps: int, stream: NoiseStream) -> ChainRecord:
    """
    Runs `steps` random moves of the reflected walk.

    Every arrival at M-1 is followed by a reflection entry at M-2 with zero
    duration; `hits` counts random moves only, so p_up = 1 gives αₙ = n.
    """
    if steps < 1:
        raise UsageError("the chain needs at least one step")
    moves = biased_steps(cfg.p_up, steps, stream.next_generator())
    walk = np.cumsum(moves)
    # each reflection lowers the level by one, so the number of reflections
    # before move n is the running maximum of the free walk
    prior_max = np.maximum.accumulate(np.concatenate(([0], walk[:-1])))
    is_hit = walk > prior_max
    before = cfg.start_level + walk - prior_max

    repeats = 1 + is_hit.astype(np.int64)
    levels = np.repeat(before, repeats)
    outcomes = np.repeat(
        np.where(moves > 0, StageOutcome.UP.value, StageOutcome.DOWN.value), repeats
    ).astype(object)
    durations = np.repeat(np.ones(steps), repeats)
    reflected = (np.cumsum(repeats) - 1)[is_hit]
    levels[reflected] = cfg.start_level
    outcomes[reflected] = StageOutcome.REFLECT.value
    durations[reflected] = 0.0

    hits = np.nonzero(is_hit)[0] + 1
    logger.debug("ideal chain: %d moves, %d hits of M-1", steps, hits.size)
    return ChainRecord(
        M=cfg.M,
        levels=np.concatenate(([cfg.start_level], levels)),
        outcomes=outcomes,
        durations=durations,
        hits=hits,
    )


def excursion_lengths(record: ChainRecord) -> np.ndarray:
    """βₙ = αₙ - αₙ₋₁ with α₀ = 0."""
    return np.diff(np.concatenate(([0], record.hits)))


def excursion_bound(p: float, k: int) -> float:
    """√(4pq)/(1-√(4pq))·(q/p)^{k/2}."""
    if not 0.5 < p <= 1.0:
        raise DomainError(f"p must lie in (1/2, 1], got {p}")
    q = 1.0 - p
    root = math.sqrt(4.0 * p * q)
    return root / (1.0 - root) * (q / p) ** (k / 2.0)


def default_horizon(p: float) -> int:
    """Steps after which (4pq)^{n/2} < 1e-10, the Chernoff tail of P(Sₙ <= 0)."""
    four_pq = 4.0 * p * (1.0 - p)
    if four_pq == 0.0:
        return 1
    return int(math.ceil(2.0 * math.log(1e-10) / math.log(four_pq)))


def excursion_bound_check(
    p: float,
    k_grid: Sequence[int],
    samples: int,
    stream: NoiseStream,
    horizon: Optional[int] = None,
    chunk: int = 10_000,
) -> List[ExcursionCheck]:
    """
    Monte Carlo E[Σ_{n>=1} 1{Sₙ <= -k}] for a p-biased walk from 0, per k,
    compared with `excursion_bound` (pass: mean <= bound + 3 standard errors).
    """
    if not 0.5 < p <= 1.0:
        raise DomainError(f"p must lie in (1/2, 1], got {p}")
    if samples < 2:
        raise UsageError("excursion check needs at least two walks")
    ks = np.asarray(list(k_grid), dtype=np.int64)
    horizon = horizon or default_horizon(p)
    sums, squares = [], []
    remaining = samples
    while remaining > 0:
        size = min(chunk, remaining)
        rng = stream.next_generator()
        walks = np.cumsum(
            biased_steps(p, size * horizon, rng).reshape(size, horizon), axis=1
        )
        counts = (walks[:, :, None] <= -ks[None, None, :]).sum(axis=1).astype(float)
        sums.append(counts.sum(axis=0))
        squares.append((counts**2).sum(axis=0))
        remaining -= size
    mean = pairwise_sum(sums) / samples
    variance = (pairwise_sum(squares) - samples * mean**2) / (samples - 1)
    stderr = np.sqrt(np.maximum(variance, 0.0) / samples)
    checks = []
    for i, k in enumerate(ks):
        bound = excursion_bound(p, int(k))
        checks.append(
            ExcursionCheck(
                k=int(k),
                mc_mean=float(mean[i]),
                mc_stderr=float(stderr[i]),
                bound=bound,
                passed=bool(mean[i] <= bound + 3.0 * stderr[i]),
            )
        )
    return checks


def occupation_fraction(record: ChainRecord, k: int) -> float:
    """
    (1/n)·Σ_{1<=j<=n} 1{X_j <= -k}.

    Raises:
        UsageError: If the record holds fewer than 10³ entries.
    """
    visited = record.levels[1:]
    if visited.size < MIN_OCCUPATION_ENTRIES:
        raise UsageError(
            f"occupation_fraction needs >= {MIN_OCCUPATION_ENTRIES} entries, "
            f"got {visited.size}"
        )
    return float(np.count_nonzero(visited <= -k) / visited.size)


def occupation_profile(record: ChainRecord, depths: Sequence[int]) -> OccupationProfile:
    """Occupation fractions per depth with a geometric decay fit on the non-zero ones."""
    depths = [int(d) for d in depths]
    fractions = [occupation_fraction(record, d) for d in depths]
    positive = [(d, f) for d, f in zip(depths, fractions) if f > 0.0]
    slope = None
    if len(positive) >= 2 and len({d for d, _ in positive}) >= 2:
        xs, ys = zip(*positive)
        slope = linear_fit(xs, np.log(ys)).slope
    return OccupationProfile(depths=depths, fractions=fractions, decay_slope=slope)
