"""Monte Carlo surveys: reflection symmetry and recurrence, box exit times,
spatial (Birkhoff) averages against annealed ones, and excursions between
returns to the origin."""
import logging
import math
from functools import partial
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np

from ..common.exceptions import ModelError
from ..common.models import (
    CensoredTime,
    ErgodicEstimate,
    ExcursionSurvey,
    ExitSurvey,
    PathStatus,
    ReplicaSummary,
    SymmetryReport,
    Verdict,
    Window,
)
from ..common.rng import replica_seed
from ..environment.models import ConstantModelSpec, SsepModelSpec, build_environment, is_reflection_symmetric, rate_bounds
from ..graphical.arrows import sample_arrow_field
from ..graphical.coupling import DEFAULT_JUMP_CAP, evolve_coupled
from ..orchestration.orchestrator import ReplicaExecutor
from ..walk.hitting import return_times, shifted_hitting
from .replica import ReplicaPlan, initial_half_width, run_replica
from .stats import KS_THRESHOLD, batch_means, binomial_stderr, ks_two_sample, z_score
from .trichotomy import aggregate_trichotomy

logger = logging.getLogger(__name__)

EXIT_TARGET = 0.999
HIT_TARGET = 0.95
ERGODIC_SIGMAS = 4.0
EXCURSION_TARGET = 0.9


def _kept(summaries: Sequence[ReplicaSummary]) -> List[ReplicaSummary]:
    return [s for s in summaries if s.status is not PathStatus.WINDOW_VIOLATION]


def _fraction_by(times: Sequence[CensoredTime], checkpoints: Sequence[float]) -> List[float]:
    if not times:
        return [0.0 for _ in checkpoints]
    observed = np.array([t.value for t in times if t.is_finite])
    return [float(np.count_nonzero(observed <= c)) / len(times) for c in checkpoints]


def _checkpoints(T: float, checkpoints: Optional[Sequence[float]]) -> List[float]:
    points = sorted(checkpoints) if checkpoints else [T / 8, T / 4, T / 2, T]
    if points[-1] > T or points[0] <= 0:
        raise ValueError(f"checkpoints must lie in (0, {T}], got {points}")
    return [float(c) for c in points]


def symmetry_recurrence_test(
    model_spec: Any,
    T: float,
    N: int,
    seed: int,
    K: int = 10,
    checkpoints: Optional[Sequence[float]] = None,
    executor: Optional[ReplicaExecutor] = None,
    jump_cap: int = DEFAULT_JUMP_CAP,
) -> SymmetryReport:
    """Checks that X_T and -X_T agree in law, that the verdict is recurrent and
    that hitting -1 and +1 becomes certain along the checkpoints.

    Raises ModelError when the model is declared symmetric but the two-sample
    test rejects equidistribution.
    """
    if N < 4:
        raise ValueError(f"symmetry test needs at least 4 replicas, got {N}")
    points = _checkpoints(T, checkpoints)
    if not is_reflection_symmetric(model_spec):
        logger.warning("[Symmetry] %s is not structurally reflection-symmetric", model_spec.tag)

    executor = executor or ReplicaExecutor()
    plan = ReplicaPlan(spec=model_spec, horizon=T, base_seed=seed, level=K, jump_cap=jump_cap, targets=(-1, 1))
    summaries = executor.run_replicas(plan, N, stage=f"symmetry {model_spec.tag}")
    kept = _kept(summaries)
    half = len(kept) // 2
    first = [s.final_position for s in kept[:half]]
    mirrored = [-s.final_position for s in kept[half:]]
    ks_stat, ks_p = ks_two_sample(first, mirrored)
    if ks_p <= KS_THRESHOLD:
        raise ModelError(
            f"{model_spec.tag} declared reflection-symmetric but X_T and -X_T differ "
            f"(KS statistic {ks_stat:.4f}, p={ks_p:.2e})"
        )

    trichotomy = aggregate_trichotomy(summaries, model_spec.tag, T, K, seed=seed)
    hit_minus = _fraction_by([s.hit_times[-1] for s in kept], points)
    hit_plus = _fraction_by([s.hit_times[1] for s in kept], points)
    passed = (
        ks_p > KS_THRESHOLD
        and trichotomy.verdict is Verdict.RECURRENT
        and hit_minus[-1] >= HIT_TARGET
        and hit_plus[-1] >= HIT_TARGET
    )
    return SymmetryReport(
        model_tag=model_spec.tag,
        horizon=T,
        ks_statistic=ks_stat,
        ks_pvalue=ks_p,
        trichotomy=trichotomy,
        checkpoints=points,
        hit_minus_one=hit_minus,
        hit_plus_one=hit_plus,
        passed=passed,
    )


def exit_time_survey(
    model_spec: Any,
    n: int,
    checkpoints: Sequence[float],
    N: int,
    seed: int,
    executor: Optional[ReplicaExecutor] = None,
    jump_cap: int = DEFAULT_JUMP_CAP,
) -> ExitSurvey:
    """Empirical law of the exit time of [-n, n]; exits after a replica's last observed time are censored."""
    if n < 0:
        raise ValueError(f"box radius must be nonnegative, got {n}")
    if not checkpoints:
        raise ValueError("exit survey needs at least one checkpoint")
    points = sorted(float(c) for c in checkpoints)
    executor = executor or ReplicaExecutor()
    plan = ReplicaPlan(spec=model_spec, horizon=points[-1], base_seed=seed, level=max(n, 1),
                       jump_cap=jump_cap, exit_radius=n)
    kept = _kept(executor.run_replicas(plan, N, stage=f"exit {model_spec.tag}"))
    exit_times = [s.exit_time for s in kept]
    fractions = _fraction_by(exit_times, points)
    monotone = all(a <= b for a, b in zip(fractions, fractions[1:]))
    survey = ExitSurvey(
        model_tag=model_spec.tag,
        n=n,
        checkpoints=points,
        fraction_exited=fractions,
        exit_times=exit_times,
        rate_bounds=rate_bounds(model_spec),
        passed=monotone and fractions[-1] >= EXIT_TARGET,
    )
    logger.info("[Exit] %s n=%d: fraction exited %s", model_spec.tag, n, [round(f, 4) for f in fractions])
    return survey


#Spatial averages
def _void_indicator(field_, site: int, a: float, b: float) -> int:
    times = field_.arrows_at(site).times
    return int(not np.any((times >= a) & (times <= b)))


def _ergodic_window(model_spec: Any, n_sites: int, T: float) -> Window:
    if isinstance(model_spec, SsepModelSpec):
        return Window(x_min=-model_spec.half_width, x_max=model_spec.half_width, t_max=T)
    pad = initial_half_width(model_spec, T)
    return Window(x_min=-pad, x_max=n_sites - 1 + pad, t_max=T)


def _annealed_void(model_spec: Any, T: float, a: float, b: float, seed: int, index: int) -> int:
    if isinstance(model_spec, SsepModelSpec):
        window = Window(x_min=-model_spec.half_width, x_max=model_spec.half_width, t_max=T)
    else:
        window = Window(x_min=0, x_max=0, t_max=T)
    s = replica_seed(seed, index)
    env = build_environment(model_spec, window, s)
    return _void_indicator(sample_arrow_field(env, s), 0, a, b)


def _annealed_never_left(model_spec: Any, T: float, seed: int, jump_cap: int, index: int) -> Optional[int]:
    run = run_replica(model_spec, T, replica_seed(seed, index), index, jump_cap=jump_cap)
    if run.path.status is PathStatus.WINDOW_VIOLATION:
        return None
    return int(run.path.min_position >= 0)


def spatial_ergodic_average(
    model_spec: Any,
    event_kind: str,
    N_sites: int,
    T: float,
    seed: int,
    slab: Tuple[float, float] = (0.0, 1.0),
    annealed_replicas: Optional[int] = None,
    executor: Optional[ReplicaExecutor] = None,
    jump_cap: int = DEFAULT_JUMP_CAP,
) -> ErgodicEstimate:
    """Average of a translated event over ``N_sites`` starting sites of one
    realization, compared with independent replicas of the same event at 0.

    ``never_left_of_start`` is A_x = {X^x_t >= x for t <= T} on the coupled
    ensemble; ``no_arrows_in_slab`` is the absence of arrows in {x} x ``slab``.
    """
    if N_sites < 2:
        raise ValueError(f"need at least two sites, got {N_sites}")
    executor = executor or ReplicaExecutor()
    M = annealed_replicas or N_sites
    window = _ergodic_window(model_spec, N_sites, T)
    root_seed = replica_seed(seed, 0)
    env = build_environment(model_spec, window, root_seed)
    field_ = sample_arrow_field(env, root_seed)
    analytic = None

    if event_kind == "no_arrows_in_slab":
        a, b = slab
        if not 0.0 <= a < b <= T:
            raise ValueError(f"slab {slab} must satisfy 0 <= a < b <= {T}")
        sites = [x for x in range(N_sites) if window.contains_site(x)]
        indicators = [_void_indicator(field_, x, a, b) for x in sites]
        annealed = executor.map(partial(_annealed_void, model_spec, T, a, b, seed), range(1, M + 1),
                                stage="ergodic annealed")
        if isinstance(model_spec, ConstantModelSpec):
            analytic = math.exp(-(model_spec.p + model_spec.q) * (b - a))
    elif event_kind == "never_left_of_start":
        if isinstance(model_spec, SsepModelSpec):
            lo, hi = model_spec.safe_bounds
            bounds = (lo, hi)
            starts = [x for x in range(N_sites) if lo <= x <= hi]
        else:
            bounds = (window.x_min, window.x_max)
            starts = list(range(N_sites))
        ensemble = evolve_coupled(field_, starts, T, jump_cap=jump_cap, bounds=bounds)
        indicators = [int(ensemble.paths[x].min_position >= x) for x in starts]
        outcomes = executor.map(partial(_annealed_never_left, model_spec, T, seed, jump_cap), range(1, M + 1),
                                stage="ergodic annealed")
        annealed = [o for o in outcomes if o is not None]
    else:
        raise ValueError(f"unknown event kind {event_kind!r}")

    spatial, spatial_se = batch_means(indicators)
    annealed_mean = float(np.mean(annealed)) if annealed else 0.0
    annealed_se = binomial_stderr(annealed_mean, len(annealed))
    z = z_score(spatial, spatial_se, annealed_mean, annealed_se)
    passed = abs(z) <= ERGODIC_SIGMAS
    if analytic is not None:
        passed = passed and abs(z_score(spatial, spatial_se, analytic, 0.0)) <= ERGODIC_SIGMAS
    logger.info("[Ergodic] %s %s: spatial %.4f +- %.4f, annealed %.4f +- %.4f", model_spec.tag,
                event_kind, spatial, spatial_se, annealed_mean, annealed_se)
    return ErgodicEstimate(
        model_tag=model_spec.tag,
        event_kind=event_kind,
        n_sites=len(indicators),
        spatial_average=spatial,
        spatial_stderr=spatial_se,
        annealed_average=annealed_mean,
        annealed_stderr=annealed_se,
        analytic=analytic,
        z_score=z,
        passed=passed,
    )


#Excursions
def _excursion_counts(model_spec: Any, x: int, T: float, K: int, seed: int, jump_cap: int, index: int):
    run = run_replica(model_spec, T, replica_seed(seed, index), index, jump_cap=jump_cap)
    path = run.path
    if path.status is PathStatus.WINDOW_VIOLATION:
        return None
    record = return_times(path, {0}, K)
    returned, followed, censored = [0] * K, [0] * K, [0] * K
    for k, ret in enumerate(record.returns):
        if not ret.is_finite:
            break
        returned[k] = 1
        if shifted_hitting(path, ret, {x}).is_finite:
            followed[k] = 1
        else:
            censored[k] = 1
    return returned, followed, censored


def excursion_survey(
    model_spec: Any,
    x: int,
    T: float,
    K: int,
    N: int,
    seed: int,
    executor: Optional[ReplicaExecutor] = None,
    jump_cap: int = DEFAULT_JUMP_CAP,
) -> ExcursionSurvey:
    """After each observed return T^(k)_0 < T, does the walk visit ``x`` before the horizon?

    A visit not seen before the horizon is counted as censored, never as a
    counterexample; the survey passes when each return level with data is
    followed by a visit in at least 90% of replicas.
    """
    if x not in (-1, 1):
        raise ValueError(f"excursion target must be -1 or +1, got {x}")
    executor = executor or ReplicaExecutor()
    outcomes = executor.map(partial(_excursion_counts, model_spec, x, T, K, seed, jump_cap), range(N),
                            stage=f"excursions {model_spec.tag}")
    outcomes = [o for o in outcomes if o is not None]
    returned = [int(sum(o[0][k] for o in outcomes)) for k in range(K)]
    followed = [int(sum(o[1][k] for o in outcomes)) for k in range(K)]
    censored = [int(sum(o[2][k] for o in outcomes)) for k in range(K)]
    passed = all(f >= EXCURSION_TARGET * r for r, f in zip(returned, followed) if r)
    return ExcursionSurvey(
        model_tag=model_spec.tag,
        target=x,
        returns_observed=returned,
        followed_by_hit=followed,
        censored=censored,
        passed=passed,
    )
