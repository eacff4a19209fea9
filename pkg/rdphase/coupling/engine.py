# rdphase/coupling/engine.py

"""
Coupled stepping of two solutions of the same equation.

All four constructions draw their slabs from per-replica streams on separate
substreams, so every coupling of a replica is reproducible on its own:

    streams = make_streams(CouplingKind.PM, seed=7, replica_id=0)
    outcome = run_coupling(psi1_0, psi2_0, CouplingKind.PM, cfg, streams)
"""

import math
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from rdphase.core.exceptions import UsageError
from rdphase.core.field import Field, haar_integral, infimum, supremum
from rdphase.coupling.models import (
    CouplingKind,
    CouplingOutcome,
    CouplingState,
    MarginalComparison,
    MarginalLawReport,
    MassAudit,
    SuccessPoint,
)
from rdphase.dynamics.noise import NoiseSlab, NoiseStream, mix_slabs, mixing_f, mixing_g
from rdphase.dynamics.solver import Integrator, SolverConfig, simulate
from rdphase.utils.logging import get_logger
from rdphase.utils.parallel import map_replicas
from rdphase.utils.stats import mean_and_stderr, pairwise_sum, wilson_interval

logger = get_logger(__name__)

ORDER_TOLERANCE = 1e-9


def make_streams(kind: CouplingKind, seed: int, replica_id: int) -> List[NoiseStream]:
    base = NoiseStream(seed, replica_id)
    return [base] + [base.spawn(s) for s in range(1, CouplingKind(kind).arity)]


def init_state(
    psi1_0: Field, psi2_0: Field, kind: CouplingKind, cfg: SolverConfig, t0: float = 0.0
) -> CouplingState:
    """Fresh coupling state; the AM anchor starts from max(ψ₁₀, ψ₂₀)."""
    if psi1_0.grid != psi2_0.grid:
        raise UsageError("coupled fields must share one grid")
    anchor = None
    if CouplingKind(kind) == CouplingKind.AM:
        top = psi1_0.with_values(np.maximum(psi1_0.values, psi2_0.values))
        anchor = Integrator(top, cfg, t0=t0)
    return CouplingState(
        psi1=Integrator(psi1_0, cfg, t0=t0),
        psi2=Integrator(psi2_0, cfg, t0=t0),
        anchor=anchor,
    )


def _partner_slab(
    leader: np.ndarray, follower: np.ndarray, shared: NoiseSlab, own: NoiseSlab
) -> NoiseSlab:
    # weights use the pre-step fields
    gap = leader - follower
    return mix_slabs(shared, own, mixing_g(gap), mixing_f(gap))


def _follow(target: Integrator, source: Integrator) -> None:
    target.set_values(source.values)
    target.steps_taken = source.steps_taken


def couple_step(
    state: CouplingState,
    kind: CouplingKind,
    streams: Sequence[NoiseStream],
    cfg: SolverConfig,
) -> CouplingState:
    """
    Advances both solutions (and the anchor) by one step.

    Raises:
        UsageError: If the number of streams does not match the coupling kind.
    """
    kind = CouplingKind(kind)
    if len(streams) != kind.arity:
        raise UsageError(
            f"{kind.value} coupling needs {kind.arity} noise streams, got {len(streams)}"
        )
    slabs = [stream.next_slab(cfg.grid) for stream in streams]
    psi1, psi2 = state.psi1, state.psi2

    if kind == CouplingKind.NATURAL:
        own1 = own2 = slabs[0]
    elif kind == CouplingKind.INDEPENDENT:
        own1, own2 = slabs
    elif kind == CouplingKind.PM:
        own1 = slabs[0]
        own2 = _partner_slab(psi1.values, psi2.values, slabs[0], slabs[1])
    else:
        anchor = state.anchor
        if anchor is None:
            raise UsageError("AM coupling state has no anchor")
        own1, own2 = (
            _partner_slab(anchor.values, psi.values, slabs[0], slabs[i + 1])
            for i, psi in enumerate((psi1, psi2))
        )
        anchor.step_with(slabs[0])

    psi1.step_with(own1)
    if state.merged:
        _follow(psi2, psi1)
    else:
        psi2.step_with(own2)

    if kind == CouplingKind.AM and not state.merged:
        _snap_to_anchor(state, cfg)
    return state


def _default_tolerance(state: CouplingState) -> float:
    return 1e-10 * max(float(state.psi1.values.max()), float(state.psi2.values.max()))


def _snap_to_anchor(state: CouplingState, cfg: SolverConfig) -> None:
    anchor = state.anchor
    tol = 1e-10 * float(anchor.values.max())
    for i, psi in enumerate((state.psi1, state.psi2)):
        if state.anchor_hits[i]:
            continue
        if float(np.max(np.abs(anchor.values - psi.values))) <= tol:
            _follow(psi, anchor)
            state.anchor_hits[i] = True
            logger.debug("solution %d joined the anchor at t=%.6g", i + 1, psi.time)


def detect_merge(state: CouplingState, merge_tol: Optional[float] = None) -> CouplingState:
    """
    Snaps ψ₂ onto ψ₁ once ‖ψ₁ - ψ₂‖_C <= merge_tol.

    The default tolerance is 1e-10·max(U₁, U₂).
    """
    if merge_tol is not None and merge_tol < 0.0:
        raise UsageError(f"merge tolerance must be >= 0, got {merge_tol}")
    if state.merged:
        return state
    tol = _default_tolerance(state) if merge_tol is None else merge_tol
    if float(np.max(np.abs(state.difference))) <= tol:
        _follow(state.psi2, state.psi1)
        state.merged = True
        state.tau = state.time
        logger.debug("coupling merged at t=%.6g", state.tau)
    return state


def run_coupling(
    psi1_0: Field,
    psi2_0: Field,
    kind: CouplingKind,
    cfg: SolverConfig,
    streams: Sequence[NoiseStream],
    horizon: Optional[float] = None,
    merge_tol: Optional[float] = None,
    stop_on_merge: bool = False,
    sample_times: Iterable[float] = (),
) -> CouplingOutcome:
    """
    Steps a coupling to `horizon` (default `cfg.t_end`), recording the mass
    X(t) = ∫(ψ₁ - ψ₂) every step and the merge time τ.

    Ordering violations (ψ₂ - ψ₁ > 1e-9) are counted when ψ₂₀ <= ψ₁₀.
    """
    kind = CouplingKind(kind)
    horizon = cfg.t_end if horizon is None else horizon
    state = init_state(psi1_0, psi2_0, kind, cfg)
    ordered = bool(np.all(psi2_0.values <= psi1_0.values))
    wanted = {int(round(t / cfg.dt)): float(t) for t in sample_times}
    samples: Dict[float, Dict[str, float]] = {}
    times: List[float] = [0.0]
    mass: List[float] = [haar_integral(state.difference)]
    violations = 0

    def sample(n: int) -> None:
        if n in wanted:
            samples[wanted[n]] = {
                "L1": infimum(state.psi1.values),
                "U1": supremum(state.psi1.values),
                "L2": infimum(state.psi2.values),
                "U2": supremum(state.psi2.values),
            }

    detect_merge(state, merge_tol)
    sample(0)
    steps = int(round(horizon / cfg.dt))
    for n in range(1, steps + 1):
        if stop_on_merge and state.merged:
            break
        couple_step(state, kind, streams, cfg)
        detect_merge(state, merge_tol)
        if ordered:
            violations += int(np.count_nonzero(-state.difference > ORDER_TOLERANCE))
        times.append(state.time)
        mass.append(haar_integral(state.difference))
        sample(n)

    return CouplingOutcome(
        kind=kind,
        merged=state.merged,
        tau=state.tau,
        horizon=horizon,
        times=np.array(times),
        mass=np.array(mass),
        ordering_violations=violations,
        samples=samples,
    )


def mass_supermartingale_audit(
    outcomes: Sequence[CouplingOutcome], mass_tol: float = 1e-6
) -> MassAudit:
    """
    Checks that the replica mean of Y(t) = e^{-t}X(t) never rises by more than
    two standard errors between recorded times, and that X(t) >= -mass_tol.
    """
    if not outcomes:
        raise UsageError("mass audit needs at least one coupled run")
    length = min(len(o.times) for o in outcomes)
    times = outcomes[0].times[:length]
    decay = np.exp(-times)
    ys = [decay * o.mass[:length] for o in outcomes]
    mean_y = pairwise_sum(ys) / len(ys)
    if len(ys) > 1:
        spread = pairwise_sum([(y - mean_y) ** 2 for y in ys]) / (len(ys) - 1)
        stderr = np.sqrt(spread / len(ys))
    else:
        stderr = np.zeros_like(mean_y)
    rise = np.diff(mean_y) - 2.0 * np.hypot(stderr[1:], stderr[:-1]) - 1e-12
    min_mass = float(min(o.mass[:length].min() for o in outcomes))
    max_increase = float(rise.max()) if rise.size else 0.0
    return MassAudit(
        replicas=len(outcomes),
        times=[float(t) for t in times],
        mean_y=[float(v) for v in mean_y],
        stderr_y=[float(v) for v in stderr],
        max_increase=max_increase,
        min_mass=min_mass,
        passed=max_increase <= 0.0 and min_mass >= -mass_tol,
    )


def _check_delta_grid(deltas: Sequence[float]) -> None:
    if not deltas:
        raise UsageError("delta grid is empty")
    if any(d < 0.0 for d in deltas):
        raise UsageError("delta grid must be non-negative")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise UsageError("delta grid must be strictly decreasing")


def coupling_success_experiment(
    deltas: Sequence[float],
    kind: CouplingKind,
    cfg: SolverConfig,
    replicas: int,
    seed: int,
    c0: float = 0.5,
    horizon: Optional[float] = None,
    merge_tol: Optional[float] = None,
    workers: Optional[int] = None,
):
    """
    Empirical P(merged by horizon) per initial L¹ distance δ.

    Replica r of grid point j starts from ((c₀ + δⱼ/2)𝟙, c₀𝟙) on the noise of
    replica id j·replicas + r.

    Returns:
        (points, trials): one `SuccessPoint` per δ and one row per replica with
        the columns of ``coupling.csv``.
    """
    kind = CouplingKind(kind)
    _check_delta_grid(deltas)
    horizon = cfg.t_end if horizon is None else horizon
    low = Field.constant(cfg.grid, c0)
    points: List[SuccessPoint] = []
    trials: List[dict] = []
    for j, delta in enumerate(deltas):
        high = Field.constant(cfg.grid, c0 + delta / 2.0)
        ids = range(j * replicas, (j + 1) * replicas)

        def one(replica: int) -> CouplingOutcome:
            return run_coupling(
                high,
                low,
                kind,
                cfg,
                make_streams(kind, seed, replica),
                horizon=horizon,
                merge_tol=merge_tol,
                stop_on_merge=True,
            )

        outcomes = map_replicas(one, ids, workers)
        successes = sum(o.merged for o in outcomes)
        ci_low, ci_high = wilson_interval(successes, replicas)
        points.append(
            SuccessPoint(
                delta=delta,
                successes=successes,
                trials=replicas,
                probability=successes / replicas,
                ci_low=ci_low,
                ci_high=ci_high,
            )
        )
        trials.extend(
            {
                "replica": replica,
                "kind": kind,
                "delta": delta,
                "tau_or_timeout": o.tau_or_timeout,
                "merged": o.merged,
            }
            for replica, o in zip(ids, outcomes)
        )
        logger.info("%s coupling, delta=%g: %d/%d merged", kind.value, delta, successes, replicas)
    return points, trials


def success_is_monotone(points: Sequence[SuccessPoint]) -> bool:
    """Along a decreasing δ grid the success probability must not drop beyond the CIs."""
    return all(b.ci_high >= a.ci_low for a, b in zip(points, points[1:]))


def _variance_and_stderr(values: np.ndarray):
    n = values.size
    centred = values - values.mean()
    variance = float(np.sum(centred**2) / (n - 1))
    fourth = float(np.mean(centred**4))
    return variance, math.sqrt(max(fourth - variance**2, 0.0) / n)


def _z(a: float, se_a: float, b: float, se_b: float) -> float:
    scale = math.hypot(se_a, se_b)
    if scale == 0.0:
        return 0.0 if a == b else math.inf
    return abs(a - b) / scale


def marginal_law_check(
    kind: CouplingKind,
    psi1_0: Field,
    psi2_0: Field,
    cfg: SolverConfig,
    replicas: int,
    seed: int,
    times: Sequence[float] = (1.0, 5.0),
    workers: Optional[int] = None,
) -> MarginalLawReport:
    """
    Compares the law of ψ₂ inside a coupling with a lone run of ψ₂ on
    independent noise: mean and variance of U_t and mean of L_t at each time,
    each as a two-sample z-score.
    """
    kind = CouplingKind(kind)
    horizon = max(times)
    reference_cfg = cfg.with_changes(t_end=horizon, snapshot_times=tuple(times))

    def coupled(replica: int) -> Dict[float, Dict[str, float]]:
        outcome = run_coupling(
            psi1_0,
            psi2_0,
            kind,
            cfg,
            make_streams(kind, seed, replica),
            horizon=horizon,
            sample_times=times,
        )
        return outcome.samples

    def lone(replica: int) -> Dict[float, Dict[str, float]]:
        traj = simulate(psi2_0, reference_cfg, NoiseStream(seed, replica))
        return {
            t: {"L2": infimum(traj.snapshot_at(t)), "U2": supremum(traj.snapshot_at(t))}
            for t in times
        }

    coupled_samples = map_replicas(coupled, range(replicas), workers)
    lone_samples = map_replicas(lone, range(replicas, 2 * replicas), workers)
    comparisons: List[MarginalComparison] = []
    for t in times:
        t = float(t)
        for name in ("U2", "L2"):
            a = np.array([s[t][name] for s in coupled_samples])
            b = np.array([s[t][name] for s in lone_samples])
            mean_a, se_a = mean_and_stderr(list(a))
            mean_b, se_b = mean_and_stderr(list(b))
            comparisons.append(
                MarginalComparison(
                    time=t,
                    observable=f"mean_{name[0]}",
                    coupled=mean_a,
                    reference=mean_b,
                    z_score=_z(mean_a, se_a, mean_b, se_b),
                )
            )
        a = np.array([s[t]["U2"] for s in coupled_samples])
        b = np.array([s[t]["U2"] for s in lone_samples])
        var_a, se_a = _variance_and_stderr(a)
        var_b, se_b = _variance_and_stderr(b)
        comparisons.append(
            MarginalComparison(
                time=t,
                observable="var_U",
                coupled=var_a,
                reference=var_b,
                z_score=_z(var_a, se_a, var_b, se_b),
            )
        )
    return MarginalLawReport(kind=kind, replicas=replicas, comparisons=comparisons)
