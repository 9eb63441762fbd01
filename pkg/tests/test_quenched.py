import numpy as np
import pytest

from src.analysis.stats import ks_two_sample
from src.common.models import PathStatus, Window
from src.common.rng import replica_seed
from src.environment.core import EnvironmentTrajectory, SiteRateTrack
from src.environment.models import ConstantModelSpec, build_environment, sample_iid_sites
from src.graphical.arrows import sample_arrow_field
from src.graphical.coupling import evolve_walk
from src.walk.quenched import simulate_quenched

HORIZON = 100.0


@pytest.fixture(scope="module")
def biased_env():
    return build_environment(ConstantModelSpec(p=2.0, q=1.0), Window(x_min=-300, x_max=400, t_max=HORIZON), 0)


def test_homogeneous_walk_has_skellam_moments(biased_env):
    finals = np.array([
        simulate_quenched(biased_env, 0, HORIZON, replica_seed(1, i)).final_position for i in range(1000)
    ])
    # X_T = N+ - N-, mean (p - q) T = 100, variance (p + q) T = 300.
    assert abs(finals.mean() - 100.0) < 3.0
    assert abs(finals.var(ddof=1) - 300.0) < 60.0


def test_both_engines_agree_in_law(biased_env):
    quenched = [simulate_quenched(biased_env, 0, HORIZON, replica_seed(2, i)).final_position for i in range(500)]
    graphical = [
        evolve_walk(sample_arrow_field(biased_env, replica_seed(3, i)), 0, HORIZON).final_position for i in range(500)
    ]
    _, pvalue = ks_two_sample(quenched, graphical)
    assert pvalue > 1e-3


def test_zero_rates_freeze_the_walk():
    window = Window(x_min=-1, x_max=1, t_max=10.0)
    env = EnvironmentTrajectory(window, {x: SiteRateTrack.constant(x, 0.0, 0.0, 10.0) for x in window.sites}, "frozen")
    path = simulate_quenched(env, 0, 10.0, seed=5)
    assert path.status is PathStatus.COMPLETED
    assert path.n_jumps == 0
    assert path.positions == [0]


def test_same_seed_same_path(two_state_chain):
    env = sample_iid_sites(two_state_chain, Window(x_min=-150, x_max=150, t_max=30.0), seed=4)
    a = simulate_quenched(env, 0, 30.0, seed=12)
    b = simulate_quenched(env, 0, 30.0, seed=12)
    assert a.jump_times == b.jump_times
    assert a.positions == b.positions
    assert all(abs(y - x) == 1 for x, y in zip(a.positions, a.positions[1:]))
    assert all(s < t for s, t in zip(a.jump_times, a.jump_times[1:]))


def test_narrow_bounds_report_violation(biased_env):
    path = simulate_quenched(biased_env, 0, HORIZON, seed=1, bounds=(-2, 2))
    assert path.status is PathStatus.WINDOW_VIOLATION
    assert abs(path.final_position) == 3
