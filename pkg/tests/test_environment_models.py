import io

import numpy as np
import pytest
from pydantic import ValidationError

from src.common.exceptions import ModelError
from src.common.models import Window
from src.environment.core import dump_environment, rates_at
from src.environment.models import (
    ChainSpec,
    ConstantModelSpec,
    SsepModelSpec,
    build_environment,
    extend_window,
    is_reflection_symmetric,
    rate_bounds,
    sample_iid_sites,
    sample_ssep,
    spread_half_width,
    stationary_distribution,
)
from src.graphical.arrows import sample_arrow_field


def _chain(generator, states=("a", "b")):
    states = list(states)
    return ChainSpec(
        states=states,
        generator=generator,
        alpha_plus={s: 1.0 + i for i, s in enumerate(states)},
        alpha_minus={s: 1.0 for s in states},
    )


def test_two_state_stationary_law():
    pi = stationary_distribution(_chain([[-1.0, 1.0], [2.0, -2.0]]))
    assert pi.weights["a"] == pytest.approx(2 / 3)
    assert pi.weights["b"] == pytest.approx(1 / 3)


def test_complete_graph_chain_is_uniform():
    q = [[-2.0, 1.0, 1.0], [1.0, -2.0, 1.0], [1.0, 1.0, -2.0]]
    pi = stationary_distribution(_chain(q, states=("x", "y", "z")))
    assert pi.vector(["x", "y", "z"]) == pytest.approx(np.full(3, 1 / 3))


def test_reducible_generator_is_rejected():
    with pytest.raises(ModelError, match="reducible"):
        stationary_distribution(_chain([[-1.0, 1.0], [0.0, 0.0]]))


@pytest.mark.parametrize("generator", [
    [[-1.0, 2.0], [1.0, -1.0]],
    [[1.0, -1.0], [1.0, -1.0]],
    [[-1.0, 1.0]],
])
def test_invalid_generator_fails_validation(generator):
    with pytest.raises(ValidationError):
        _chain(generator)


@pytest.mark.parametrize("alpha,beta", [(1.0, 1.0), (1.0, 2.0)])
def test_ssep_needs_beta_below_alpha(alpha, beta):
    with pytest.raises(ValidationError):
        SsepModelSpec(alpha=alpha, beta=beta, rho=0.5, half_width=10)


def test_constant_environment_is_flat(biased_constant):
    env = build_environment(biased_constant, Window(x_min=-5, x_max=5, t_max=3.0), seed=1)
    assert env.segment_count == 11
    assert rates_at(env, 4, 2.9) == (2.0, 1.0)


def test_ssep_conserves_particles_and_sets_rates(small_ssep):
    env = sample_ssep(small_ssep, 20.0, seed=7)
    sites = list(env.window.sites)
    assert len(sites) == 2 * small_ssep.half_width + 1
    counts = {sum(env.aux_state[x].state_at(t) for x in sites) for t in (0.0, 5.0, 10.0, 19.99)}
    assert len(counts) == 1
    for x in sites[:10]:
        occupied = env.aux_state[x].state_at(3.0)
        expected = (2.0, 1.0) if occupied else (1.0, 2.0)
        assert rates_at(env, x, 3.0) == expected


def test_ssep_density_near_rho():
    spec = SsepModelSpec(alpha=2.0, beta=1.0, rho=0.7, half_width=1000)
    env = sample_ssep(spec, 5.0, seed=11)
    n = len(env.window.sites)
    density = sum(env.aux_state[x].state_at(2.5) for x in env.window.sites) / n
    assert abs(density - 0.7) < 4 * np.sqrt(0.7 * 0.3 / n)


def test_ssep_is_reproducible(small_ssep):
    texts = []
    for _ in range(2):
        buffer = io.StringIO()
        dump_environment(sample_ssep(small_ssep, 10.0, seed=3), buffer)
        texts.append(buffer.getvalue())
    assert texts[0] == texts[1]


def test_chain_sites_spend_time_in_stationary_law(two_state_chain):
    window = Window(x_min=0, x_max=1999, t_max=5.0)
    env = sample_iid_sites(two_state_chain, window, seed=5)
    fast = sum(env.aux_state[x].state_at(2.0) for x in window.sites) / 2000
    assert abs(fast - 0.5) < 4 * np.sqrt(0.25 / 2000)


def test_extension_keeps_realized_sites(two_state_chain):
    small = sample_iid_sites(two_state_chain, Window(x_min=-3, x_max=3, t_max=8.0), seed=9)
    grown = extend_window(small, two_state_chain, Window(x_min=-7, x_max=7, t_max=8.0), seed=9)
    direct = sample_iid_sites(two_state_chain, Window(x_min=-7, x_max=7, t_max=8.0), seed=9)
    for x in small.window.sites:
        assert grown.track(x).segments == small.track(x).segments
    for x in direct.window.sites:
        assert grown.track(x).segments == direct.track(x).segments


def test_ssep_cannot_be_extended(small_ssep):
    env = sample_ssep(small_ssep, 5.0, seed=1)
    bigger = Window(x_min=-50, x_max=50, t_max=5.0)
    with pytest.raises(ModelError):
        extend_window(env, small_ssep, bigger, seed=1)


def test_reflection_symmetry(two_state_chain):
    assert is_reflection_symmetric(ConstantModelSpec(p=1.0, q=1.0))
    assert not is_reflection_symmetric(ConstantModelSpec(p=2.0, q=1.0))
    assert is_reflection_symmetric(SsepModelSpec(alpha=2.0, beta=1.0, rho=0.5, half_width=10))
    assert not is_reflection_symmetric(SsepModelSpec(alpha=2.0, beta=1.0, rho=0.7, half_width=10))
    assert not is_reflection_symmetric(two_state_chain)
    swapped = ChainSpec(
        states=["up", "down"],
        generator=[[-1.0, 1.0], [1.0, -1.0]],
        alpha_plus={"up": 2.0, "down": 1.0},
        alpha_minus={"up": 1.0, "down": 2.0},
    )
    assert is_reflection_symmetric(swapped)


def test_rate_bounds(biased_constant, small_ssep, two_state_chain):
    assert rate_bounds(biased_constant) == (1.0, 2.0)
    assert rate_bounds(small_ssep) == (1.0, 2.0)
    assert rate_bounds(two_state_chain) == (1.0, 3.0)


def _occupation(track, t_end, n_states):
    durations = np.diff(np.append(track.times, t_end))
    return np.bincount(track.states, weights=durations, minlength=n_states)


def test_birth_death_chain_matches_product_formula():
    # Births 1, 2, 1.5 and deaths 1, 1, 2 give pi proportional to 1, 1, 2, 1.5.
    generator = [
        [-1.0, 1.0, 0.0, 0.0],
        [1.0, -3.0, 2.0, 0.0],
        [0.0, 1.0, -2.5, 1.5],
        [0.0, 0.0, 2.0, -2.0],
    ]
    spec = _chain(generator, states=("s0", "s1", "s2", "s3"))
    expected = np.array([2.0, 2.0, 4.0, 3.0]) / 11.0
    assert stationary_distribution(spec).vector(spec.states) == pytest.approx(expected)

    T = 100.0
    env = sample_iid_sites(spec, Window(x_min=0, x_max=499, t_max=T), seed=13)
    occupation = sum(_occupation(env.aux_state[x], T, 4) for x in env.window.sites) / (500 * T)
    assert occupation == pytest.approx(expected, abs=0.02)


def test_chain_sites_are_independent(two_state_chain):
    window = Window(x_min=0, x_max=1999, t_max=10.0)
    env = sample_iid_sites(two_state_chain, window, seed=17)
    counts = np.array([len(env.aux_state[x].times) for x in window.sites], dtype=float)
    r = np.corrcoef(counts[:-1], counts[1:])[0, 1]
    assert abs(r) < 4 / np.sqrt(len(counts) - 1)


def test_fully_occupied_ssep_is_frozen():
    # rho = 1 lies outside the validated range; every site stays occupied.
    spec = SsepModelSpec.model_construct(alpha=2.0, beta=1.0, rho=1.0, half_width=20)
    env = sample_ssep(spec, 30.0, seed=4)
    assert env.seed_info["rings"] > 0
    assert env.seed_info["effective_rings"] == 0
    for x in env.window.sites:
        assert env.track(x).starts.tolist() == [0.0]
        assert rates_at(env, x, 29.0) == (2.0, 1.0)
        assert env.aux_state[x].state_at(15.0) == 1


def test_ssep_right_arrows_follow_occupation(small_ssep):
    T = 20.0
    env = sample_ssep(small_ssep, T, seed=6)
    occupied = _occupation(env.aux_state[0], T, 2)[1]
    mean = small_ssep.alpha * occupied + small_ssep.beta * (T - occupied)
    seeds = 2000
    counts = [int(np.sum(sample_arrow_field(env, s).arrows_at(0).steps == 1)) for s in range(seeds)]
    assert abs(np.mean(counts) - mean) < 4 * np.sqrt(mean / seeds)


def test_ssep_flips_alternate_occupation(small_ssep):
    env = sample_ssep(small_ssep, 10.0, seed=8)
    for x in env.window.sites:
        states = env.aux_state[x].states
        assert np.all(states[1:] != states[:-1])


@pytest.mark.parametrize("rho,T", [(0.5, 1500.0), (0.7, 1000.0), (0.5, 10.0)])
def test_spread_half_width_leaves_room_for_the_walk(rho, T):
    L = spread_half_width(2.0, 1.0, rho, T)
    safe = SsepModelSpec(alpha=2.0, beta=1.0, rho=rho, half_width=L).safe_bounds[1]
    assert safe >= (2 * rho - 1) * T + 4 * np.sqrt(3 * T)
    assert spread_half_width(2.0, 1.0, rho, 4 * T) > L
