import pytest
from pydantic import ValidationError

from src.analysis.replica import classify_path, exit_time, run_replica
from src.analysis.trichotomy import (
    aggregate_trichotomy,
    calibrate_horizon,
    classify_trichotomy,
    expected_class,
    homogeneous_baseline,
    point_spec,
    with_horizon,
    zero_one_sweep,
)
from src.common.models import PathStatus, ReplicaClass, ReplicaSummary, Verdict
from src.environment.models import ChainSpec, ConstantModelSpec, SsepModelSpec, spread_half_width
from src.graphical.paths import WalkPath


def _path(positions, status=PathStatus.COMPLETED):
    return WalkPath(start=positions[0], horizon=100.0, jump_times=[float(k) for k in range(len(positions))],
                    positions=list(positions), status=status)


def _summary(index, replica_class, status=PathStatus.COMPLETED):
    return ReplicaSummary(index=index, status=status, final_position=0, n_jumps=0, min_position=0,
                          max_position=0, replica_class=replica_class, observed_until=100.0)


@pytest.mark.parametrize("positions,expected", [
    ([0, 1, 2, 3], ReplicaClass.TRANSIENT_RIGHT),
    ([0, -1, -2, -3, -4], ReplicaClass.TRANSIENT_LEFT),
    ([0, 1, 2, 3, 2, 1, 0, -1, -2, -3], ReplicaClass.RECURRENT),
    ([0, 1, 2, 3, 2, 1, 0, 1, 2, 3], ReplicaClass.UNCLASSIFIED),
    ([0, 1, 2, 3, 2], ReplicaClass.UNCLASSIFIED),
    ([0, 1, 0, -1], ReplicaClass.UNCLASSIFIED),
])
def test_classify_path(positions, expected):
    assert classify_path(_path(positions), 3) is expected


def test_aborted_paths_are_unclassified():
    assert classify_path(_path([0, 1, 2, 3], PathStatus.EXPLODED_CAP), 3) is ReplicaClass.UNCLASSIFIED


def test_exit_time_of_box():
    path = _path([0, 1, 2, 1, 2, 3])
    assert exit_time(path, 2).value == 5.0
    assert exit_time(path, 3).censored


def test_clear_majority_gives_verdict():
    summaries = [_summary(i, ReplicaClass.TRANSIENT_RIGHT) for i in range(200)]
    summaries += [_summary(200 + i, ReplicaClass.RECURRENT, PathStatus.WINDOW_VIOLATION) for i in range(5)]
    estimate = aggregate_trichotomy(summaries, "m", 100.0, 3)
    assert estimate.verdict is Verdict.TRANSIENT_RIGHT
    assert estimate.replicas == 200
    assert estimate.discarded == 5


def test_few_replicas_are_inconclusive():
    estimate = aggregate_trichotomy([_summary(i, ReplicaClass.TRANSIENT_RIGHT) for i in range(10)], "m", 100.0, 3)
    assert estimate.verdict is Verdict.INCONCLUSIVE
    assert estimate.p_right.lower < 0.95


def test_unclassified_replicas_do_not_block_the_verdict():
    summaries = [_summary(i, ReplicaClass.RECURRENT) for i in range(300)]
    summaries += [_summary(300 + i, ReplicaClass.UNCLASSIFIED) for i in range(30)]
    estimate = aggregate_trichotomy(summaries, "m", 100.0, 3)
    assert estimate.verdict is Verdict.RECURRENT
    assert estimate.p_unclassified.estimate == pytest.approx(30 / 330)


def test_only_unclassified_is_inconclusive():
    estimate = aggregate_trichotomy([_summary(i, ReplicaClass.UNCLASSIFIED) for i in range(100)], "m", 100.0, 3)
    assert estimate.verdict is Verdict.INCONCLUSIVE


def test_class_estimates_sum_to_one():
    classes = [ReplicaClass.TRANSIENT_RIGHT, ReplicaClass.TRANSIENT_LEFT, ReplicaClass.RECURRENT, ReplicaClass.UNCLASSIFIED]
    estimate = aggregate_trichotomy([_summary(i, classes[i % 4]) for i in range(40)], "m", 100.0, 3)
    total = sum(p.estimate for p in (estimate.p_right, estimate.p_left, estimate.p_rec, estimate.p_unclassified))
    assert total == pytest.approx(1.0)


@pytest.mark.parametrize("p,q,verdict", [
    (2.0, 1.0, Verdict.TRANSIENT_RIGHT),
    (1.0, 2.0, Verdict.TRANSIENT_LEFT),
])
def test_biased_constant_walks(executor, p, q, verdict):
    estimate = classify_trichotomy(ConstantModelSpec(p=p, q=q), 100.0, 15, 200, seed=7, executor=executor)
    assert estimate.verdict is verdict
    assert estimate.discarded == 0


def test_biased_chain_goes_right(executor, two_state_chain):
    estimate = classify_trichotomy(two_state_chain, 40.0, 10, 100, seed=3, executor=executor)
    assert estimate.p_right.estimate >= 0.95


def test_tiny_sample_is_inconclusive(executor, biased_constant):
    estimate = classify_trichotomy(biased_constant, 100.0, 15, 10, seed=7, executor=executor)
    assert estimate.verdict is Verdict.INCONCLUSIVE
    assert estimate.p_right.upper - estimate.p_right.lower > 0.2


def test_invalid_level_or_sample(biased_constant):
    with pytest.raises(ValueError):
        classify_trichotomy(biased_constant, 100.0, 0, 10, seed=1)
    with pytest.raises(ValueError):
        classify_trichotomy(biased_constant, 100.0, 5, 0, seed=1)


def test_sweep_points_fall_in_extreme_bands(executor):
    family = ConstantModelSpec(p=1.0, q=1.5)
    grid = [{"p": 0.5}, {"p": 2.5}]
    estimates = zero_one_sweep(family, grid, 100.0, 10, 100, seed=11, executor=executor)
    assert [e.parameters["p"] for e in estimates] == [0.5, 2.5]
    assert all(e.band_ok for e in estimates)
    assert estimates[0].p_left.estimate >= 0.95
    assert estimates[1].p_right.estimate >= 0.95


def test_sweep_flags_short_horizon(executor):
    # Symmetric walk over a short horizon: most replicas stay unclassified.
    estimates = zero_one_sweep(ConstantModelSpec(p=1.0, q=1.0), [{"p": 1.0}], 20.0, 10, 100, seed=2, executor=executor)
    assert estimates[0].verdict is Verdict.INCONCLUSIVE
    assert estimates[0].p_unclassified.estimate > 0.5


def test_point_spec_is_revalidated():
    with pytest.raises(ValidationError):
        point_spec(ConstantModelSpec(p=1.0, q=1.0), {"p": -1.0})
    chain = ChainSpec(states=["a"], generator=[[0.0]], alpha_plus={"a": 1.0}, alpha_minus={"a": 1.0})
    assert point_spec(chain, {}) == chain


def test_replica_window_covers_the_path(biased_constant):
    run = run_replica(biased_constant, 50.0, seed=4)
    assert run.path.status is PathStatus.COMPLETED
    assert run.env.window.contains_site(run.path.max_position)



def test_baseline_uses_stationary_mean_rates(two_state_chain):
    half = homogeneous_baseline(SsepModelSpec(alpha=2.0, beta=1.0, rho=0.5, half_width=10))
    assert (half.p, half.q) == (1.5, 1.5)
    assert expected_class(half) is ReplicaClass.RECURRENT
    biased = homogeneous_baseline(SsepModelSpec(alpha=2.0, beta=1.0, rho=0.7, half_width=10))
    assert (biased.p, biased.q) == (pytest.approx(1.7), pytest.approx(1.3))
    chain = homogeneous_baseline(two_state_chain)
    assert (chain.p, chain.q) == (pytest.approx(2.25), pytest.approx(1.0))
    assert expected_class(chain) is ReplicaClass.TRANSIENT_RIGHT
    assert expected_class(ConstantModelSpec(p=1.0, q=2.0)) is ReplicaClass.TRANSIENT_LEFT


def test_pilot_refuses_short_horizon_for_symmetric_walk(executor):
    # At K = 10 a symmetric walk often wanders off to one side and stays there.
    _, calibration = calibrate_horizon(ConstantModelSpec(p=1.0, q=1.0), 400.0, 10, seed=3, executor=executor,
                                       pilot_replicas=200)
    assert not calibration.passed
    assert calibration.expected is ReplicaClass.RECURRENT
    assert calibration.agreement.upper < 0.99
    assert calibration.horizon == 400.0 and calibration.rounds == 1


def test_pilot_accepts_calibrated_biased_walk(executor, biased_constant):
    spec, calibration = calibrate_horizon(biased_constant, 100.0, 15, seed=3, executor=executor,
                                          pilot_replicas=200)
    assert calibration.passed
    assert spec == biased_constant
    assert calibration.horizon == calibration.requested_horizon == 100.0


def test_pilot_rescale_doubles_until_agreement(executor):
    spec, calibration = calibrate_horizon(ConstantModelSpec(p=1.0, q=1.0), 10.0, 1, seed=5, executor=executor,
                                          pilot_replicas=100, rescale=True, max_rounds=8)
    assert calibration.passed
    assert calibration.rounds >= 2
    assert calibration.horizon == 10.0 * 2 ** (calibration.rounds - 1)
    assert calibration.classified.upper >= 0.99


def test_rescaled_ssep_torus_holds_the_new_horizon(executor):
    spec = SsepModelSpec(alpha=2.0, beta=1.0, rho=0.5, half_width=10)
    rescaled, calibration = calibrate_horizon(spec, 10.0, 1, seed=5, executor=executor, pilot_replicas=100,
                                              rescale=True, max_rounds=8)
    assert calibration.horizon > 10.0
    assert rescaled.half_width == spread_half_width(2.0, 1.0, 0.5, calibration.horizon)
    assert calibration.half_width == rescaled.half_width
    assert with_horizon(rescaled, 1.0) is rescaled
