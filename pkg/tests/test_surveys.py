import math

import numpy as np
import pytest

from src.analysis.surveys import excursion_survey, exit_time_survey, spatial_ergodic_average, symmetry_recurrence_test
from src.common.exceptions import ModelError
from src.environment.models import ConstantModelSpec, SsepModelSpec


def _nondecreasing(values):
    return all(a <= b for a, b in zip(values, values[1:]))


def test_symmetric_walk_mirrors_itself(executor):
    report = symmetry_recurrence_test(ConstantModelSpec(p=1.0, q=1.0), 1000.0, 200, seed=3, K=1, executor=executor)
    assert report.ks_pvalue > 1e-3
    assert report.checkpoints == [125.0, 250.0, 500.0, 1000.0]
    assert _nondecreasing(report.hit_minus_one) and _nondecreasing(report.hit_plus_one)
    assert report.hit_minus_one[-1] >= 0.95 and report.hit_plus_one[-1] >= 0.95
    assert report.trichotomy.p_right.estimate < 0.05
    assert report.trichotomy.p_left.estimate < 0.05


def test_biased_ssep_declared_symmetric_is_rejected(executor):
    spec = SsepModelSpec(alpha=2.0, beta=1.0, rho=0.7, half_width=100)
    with pytest.raises(ModelError, match="differ"):
        symmetry_recurrence_test(spec, 50.0, 100, seed=1, executor=executor)


def test_symmetry_needs_replicas(executor):
    with pytest.raises(ValueError):
        symmetry_recurrence_test(ConstantModelSpec(p=1.0, q=1.0), 10.0, 2, seed=1, executor=executor)


def test_exit_from_single_site_is_exponential(executor, biased_constant):
    checkpoints = [0.1, 0.5, 1.0, 3.0]
    survey = exit_time_survey(biased_constant, 0, checkpoints, 2000, seed=9, executor=executor)
    for c, fraction in zip(checkpoints, survey.fraction_exited):
        expected = 1.0 - math.exp(-3.0 * c)
        assert abs(fraction - expected) <= 4 * math.sqrt(expected * (1 - expected) / 2000) + 1e-3
    assert survey.passed
    assert survey.rate_bounds == (1.0, 2.0)


def test_exit_survey_fails_when_horizon_is_short(executor, biased_constant):
    survey = exit_time_survey(biased_constant, 50, [1.0, 2.0], 200, seed=9, executor=executor)
    assert survey.fraction_exited == [0.0, 0.0]
    assert not survey.passed
    assert all(t.censored for t in survey.exit_times)


def test_void_slab_average_matches_analytic(executor, biased_constant):
    estimate = spatial_ergodic_average(biased_constant, "no_arrows_in_slab", 2000, 1.0, seed=4, slab=(0.0, 0.5),
                                       annealed_replicas=500, executor=executor)
    assert estimate.analytic == pytest.approx(math.exp(-1.5))
    assert abs(estimate.spatial_average - estimate.analytic) < 0.05
    assert estimate.passed


def test_never_left_of_start_average(executor, biased_constant):
    estimate = spatial_ergodic_average(biased_constant, "never_left_of_start", 300, 20.0, seed=6,
                                       annealed_replicas=300, executor=executor)
    # A walk with p = 2, q = 1 never steps below its start with probability 1/2 over infinite time.
    assert 0.4 < estimate.spatial_average < 0.75
    assert estimate.passed


def test_unknown_event_kind(biased_constant):
    with pytest.raises(ValueError):
        spatial_ergodic_average(biased_constant, "sometimes", 10, 1.0, seed=0)


def test_returns_are_followed_by_visits(executor):
    survey = excursion_survey(ConstantModelSpec(p=1.0, q=1.0), 1, 2000.0, 3, 100, seed=8, executor=executor)
    assert survey.returns_observed[0] > 80
    assert np.all(np.array(survey.followed_by_hit) <= np.array(survey.returns_observed))
    assert survey.passed


def test_excursion_target_must_be_a_neighbour():
    with pytest.raises(ValueError):
        excursion_survey(ConstantModelSpec(p=1.0, q=1.0), 2, 10.0, 1, 5, seed=0)
