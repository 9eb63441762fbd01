"""Trichotomy classification and the zero-one sweep.

A replica is recurrent if it reaches both +K and -K before the horizon,
transient to the right if it reaches +K, never comes back to its start and
ends at or beyond +K (mirror for the left), and unclassified otherwise.
Replicas that left the safe window are discarded and counted; replicas that
hit the jump cap stay in the sample as unclassified.

Unclassified replicas are undecided at the horizon: the verdict compares the
classes among classified replicas only, while the reported estimates are over
all kept replicas.

Before a classification the homogeneous baseline (constant rates equal to the
stationary mean rates) runs as a pilot: its class is known, so a low agreement
means T is too short for K.
"""
import logging
import math
from collections import Counter
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from ..common.exceptions import ModelError
from ..common.models import (
    HorizonCalibration,
    PathStatus,
    ReplicaClass,
    ReplicaSummary,
    TrichotomyEstimate,
    Verdict,
)
from ..common.rng import pilot_seed, replica_seed
from ..environment.models import ChainSpec, ConstantModelSpec, SsepModelSpec, spread_half_width, stationary_distribution
from ..graphical.coupling import DEFAULT_JUMP_CAP
from ..orchestration.orchestrator import ReplicaExecutor
from .replica import Engine, ReplicaPlan
from .stats import in_extreme_band, wilson_interval

logger = logging.getLogger(__name__)

VERDICT_LOWER = 0.95
OTHERS_UPPER = 0.05

PILOT_REPLICAS = 400
PILOT_AGREEMENT = 0.99
PILOT_CONFIDENCE = 0.999
PILOT_MAX_ROUNDS = 4

_VERDICTS = {
    ReplicaClass.TRANSIENT_RIGHT: Verdict.TRANSIENT_RIGHT,
    ReplicaClass.TRANSIENT_LEFT: Verdict.TRANSIENT_LEFT,
    ReplicaClass.RECURRENT: Verdict.RECURRENT,
}


def _parameters(spec: Any) -> Dict[str, float]:
    return {k: float(v) for k, v in spec.model_dump().items() if isinstance(v, (int, float)) and not isinstance(v, bool)}


def aggregate_trichotomy(
    summaries: Sequence[ReplicaSummary],
    model_tag: str,
    horizon: float,
    level: int,
    parameters: Optional[Dict[str, float]] = None,
    seed: Optional[int] = None,
) -> TrichotomyEstimate:
    kept = [s for s in summaries if s.status is not PathStatus.WINDOW_VIOLATION]
    discarded = len(summaries) - len(kept)
    exploded = sum(1 for s in kept if s.status is PathStatus.EXPLODED_CAP)
    counts = Counter(s.replica_class for s in kept)
    n = len(kept)
    estimates = {cls: wilson_interval(counts[cls], n) for cls in ReplicaClass}

    classified = n - counts[ReplicaClass.UNCLASSIFIED]
    verdict = Verdict.INCONCLUSIVE
    for cls, candidate in _VERDICTS.items():
        share = wilson_interval(counts[cls], classified)
        others = wilson_interval(classified - counts[cls], classified)
        if share.lower > VERDICT_LOWER and others.upper < OTHERS_UPPER:
            verdict = candidate
            break
    if discarded:
        logger.info("[Classifier] %s: discarded %d window violations out of %d", model_tag, discarded, len(summaries))
    return TrichotomyEstimate(
        model_tag=model_tag,
        horizon=horizon,
        level=level,
        replicas=n,
        discarded=discarded,
        exploded=exploded,
        p_right=estimates[ReplicaClass.TRANSIENT_RIGHT],
        p_left=estimates[ReplicaClass.TRANSIENT_LEFT],
        p_rec=estimates[ReplicaClass.RECURRENT],
        p_unclassified=estimates[ReplicaClass.UNCLASSIFIED],
        verdict=verdict,
        parameters=parameters or {},
        seed=seed,
    )


def classify_trichotomy(
    model_spec: Any,
    T: float,
    K: int,
    N: int,
    seed: int,
    executor: Optional[ReplicaExecutor] = None,
    engine: Engine = Engine.GRAPHICAL,
    jump_cap: int = DEFAULT_JUMP_CAP,
    margin: Optional[int] = None,
) -> TrichotomyEstimate:
    if K < 1:
        raise ValueError(f"level K must be at least 1, got {K}")
    if N < 1:
        raise ValueError(f"need at least one replica, got N={N}")
    executor = executor or ReplicaExecutor()
    plan = ReplicaPlan(spec=model_spec, horizon=T, base_seed=seed, level=K, engine=engine,
                       jump_cap=jump_cap, margin=margin)
    summaries = executor.run_replicas(plan, N, stage=f"classify {model_spec.tag}")
    estimate = aggregate_trichotomy(summaries, model_spec.tag, T, K, _parameters(model_spec), seed)
    logger.info(
        "[Classifier] %s T=%g K=%d: right=%.3f left=%.3f rec=%.3f -> %s",
        model_spec.tag, T, K, estimate.p_right.estimate, estimate.p_left.estimate,
        estimate.p_rec.estimate, estimate.verdict.value,
    )
    return estimate


def point_spec(model_family: Any, overrides: Mapping[str, Any]) -> Any:
    """The family spec with ``overrides`` applied, re-validated."""
    return type(model_family).model_validate({**model_family.model_dump(), **overrides})


def zero_one_sweep(
    model_family: Any,
    param_grid: Sequence[Mapping[str, Any]],
    T: float,
    K: int,
    N: int,
    seed: int,
    executor: Optional[ReplicaExecutor] = None,
    jump_cap: int = DEFAULT_JUMP_CAP,
) -> List[TrichotomyEstimate]:
    """Classify every grid point and flag those whose p_right or p_left sits outside the extreme bands."""
    if not param_grid:
        raise ValueError("parameter grid is empty")
    specs = [point_spec(model_family, point) for point in param_grid]
    results = []
    for i, spec in enumerate(specs):
        estimate = classify_trichotomy(spec, T, K, N, replica_seed(seed, i), executor, jump_cap=jump_cap)
        estimate.band_ok = in_extreme_band(estimate.p_right.estimate) and in_extreme_band(estimate.p_left.estimate)
        if not estimate.band_ok:
            logger.warning(
                "[Sweep] %s outside the zero-one band (right=%.3f, left=%.3f); rerun with a longer horizon",
                spec.tag, estimate.p_right.estimate, estimate.p_left.estimate,
            )
        results.append(estimate)
    return results


#Horizon pilot
def homogeneous_baseline(spec: Any) -> ConstantModelSpec:
    """Constant-rate model with the stationary mean rates of ``spec``."""
    if isinstance(spec, ConstantModelSpec):
        return spec
    if isinstance(spec, SsepModelSpec):
        p = spec.rho * spec.alpha + (1 - spec.rho) * spec.beta
        q = spec.rho * spec.beta + (1 - spec.rho) * spec.alpha
    elif isinstance(spec, ChainSpec):
        pi = stationary_distribution(spec).vector(spec.states)
        plus, minus = spec.rate_vectors()
        p, q = float(pi @ plus), float(pi @ minus)
    else:
        raise ModelError(f"no homogeneous baseline for {type(spec).__name__}")
    return ConstantModelSpec(p=p, q=q)


def expected_class(baseline: ConstantModelSpec) -> ReplicaClass:
    if math.isclose(baseline.p, baseline.q, rel_tol=1e-9):
        return ReplicaClass.RECURRENT
    return ReplicaClass.TRANSIENT_RIGHT if baseline.p > baseline.q else ReplicaClass.TRANSIENT_LEFT


def with_horizon(spec: Any, T: float) -> Any:
    """``spec`` with its SSEP torus widened, if needed, to hold a walk for time ``T``."""
    if not isinstance(spec, SsepModelSpec):
        return spec
    needed = spread_half_width(spec.alpha, spec.beta, spec.rho, T)
    return point_spec(spec, {"half_width": needed}) if needed > spec.half_width else spec


def calibrate_horizon(
    model_spec: Any,
    T: float,
    K: int,
    seed: int,
    executor: Optional[ReplicaExecutor] = None,
    pilot_replicas: int = PILOT_REPLICAS,
    target: float = PILOT_AGREEMENT,
    rescale: bool = False,
    max_rounds: int = PILOT_MAX_ROUNDS,
) -> Tuple[Any, HorizonCalibration]:
    """Check that the homogeneous baseline of ``model_spec`` lands in its known class at (T, K).

    Agreement is read among classified replicas, as the verdict is. The horizon is too
    short once the upper end of the agreement interval or of the classified share falls
    below ``target``. With ``rescale`` the horizon doubles until the pilot passes or
    ``max_rounds`` pilots have run. Returns the spec to classify (SSEP tori widened for
    the final horizon) and the pilot record.
    """
    if pilot_replicas < 1 or max_rounds < 1:
        raise ValueError(f"need pilot replicas and rounds, got {pilot_replicas} and {max_rounds}")
    executor = executor or ReplicaExecutor()
    baseline = homogeneous_baseline(model_spec)
    expected = expected_class(baseline)
    horizon = T
    for round_ in range(1, max_rounds + 1):
        plan = ReplicaPlan(spec=baseline, horizon=horizon, base_seed=pilot_seed(seed, round_), level=K)
        summaries = executor.run_replicas(plan, pilot_replicas, stage=f"pilot {baseline.tag} T={horizon:g}")
        decided = [s for s in summaries if s.replica_class is not ReplicaClass.UNCLASSIFIED]
        classified = wilson_interval(len(decided), len(summaries), PILOT_CONFIDENCE)
        agreement = wilson_interval(sum(1 for s in decided if s.replica_class is expected), len(decided),
                                    PILOT_CONFIDENCE)
        passed = agreement.upper >= target and classified.upper >= target
        logger.info("[Calibration] %s at T=%g K=%d: %.4f classified, %.4f of those %s (target %.2f)",
                    baseline.tag, horizon, K, classified.estimate, agreement.estimate, expected.value, target)
        if passed or not rescale or round_ == max_rounds:
            break
        horizon *= 2
    spec = with_horizon(model_spec, horizon) if horizon != T else model_spec
    if horizon != T:
        logger.warning("[Calibration] horizon raised from %g to %g for %s", T, horizon, model_spec.tag)
    calibration = HorizonCalibration(
        model_tag=model_spec.tag,
        baseline_tag=baseline.tag,
        expected=expected,
        level=K,
        requested_horizon=T,
        horizon=horizon,
        half_width=getattr(spec, "half_width", None),
        agreement=agreement,
        classified=classified,
        target=target,
        rounds=round_,
        passed=passed,
    )
    return spec, calibration
