"""Property suites run by ``validate``.

Every suite reads its models and sample sizes from the task context:
``model`` (the configured model), ``catalogue`` (preset name -> model spec),
``sizes`` (ValidateSection), ``run`` (RunSection) and ``executor``.
"""
import io
import logging
import math
from functools import partial
from typing import Any, Dict, List, Tuple

import numpy as np

from ..common.exceptions import CouplingViolationError
from ..common.models import PathStatus, Window
from ..common.rng import replica_seed
from ..environment.models import (
    ChainSpec,
    ConstantModelSpec,
    SsepModelSpec,
    build_environment,
    sample_iid_sites,
    sample_ssep,
    stationary_distribution,
)
from ..graphical.arrows import dump_arrows, load_arrows, sample_arrow_field
from ..graphical.coupling import evolve_coupled, evolve_walk
from ..graphical.paths import verify_paths
from ..orchestration.base_task import BaseSuite, SuiteResult, SuiteTask
from .replica import Engine, run_replica, walk_bounds
from .stats import KS_THRESHOLD, chisquare_frequencies, ks_two_sample, poisson_chisquare
from .surveys import exit_time_survey

logger = logging.getLogger(__name__)

COUPLING_STARTS = (-5, 0, 5)
CHI2_THRESHOLD = 1e-3
SIGMAS = 4.0


def _ssep(context: Dict[str, Any]) -> SsepModelSpec:
    model = context.get("model")
    limit = context["sizes"].ssep_half_width
    if isinstance(model, SsepModelSpec) and (limit is None or model.half_width <= limit):
        return model
    return context["catalogue"]["ssep-half"]


def _torus(spec: SsepModelSpec, T: float) -> Window:
    return Window(x_min=-spec.half_width, x_max=spec.half_width, t_max=T)


#Coupling
def _coupled_replica(spec: SsepModelSpec, horizon: float, seed: int, inject_fault: bool, index: int) -> Dict[str, int]:
    s = replica_seed(seed, index)
    env = build_environment(spec, _torus(spec, horizon), s)
    field_ = sample_arrow_field(env, s)
    outcome = {"live_violations": 0, "ordering": 0, "coalescence": 0, "coalesced_pairs": 0, "mismatches": 0}
    try:
        ensemble = evolve_coupled(field_, COUPLING_STARTS, horizon, bounds=spec.safe_bounds)
    except CouplingViolationError:
        outcome["live_violations"] = 1
        return outcome

    # Re-read the field from its text form and drive each start on its own.
    buffer = io.StringIO()
    dump_arrows(field_, buffer)
    text = buffer.getvalue()
    reloaded = load_arrows(io.StringIO(text))
    corrupted = load_arrows(io.StringIO(_mirror_arrows(text))) if inject_fault else reloaded
    paths = {}
    for j, x in enumerate(COUPLING_STARTS):
        source = corrupted if j % 2 == 1 else reloaded
        paths[x] = evolve_walk(source, x, horizon, bounds=spec.safe_bounds)
        reference = ensemble.paths[x]
        if paths[x].jump_times != reference.jump_times or paths[x].positions != reference.positions:
            outcome["mismatches"] += 1

    for check in (verify_paths(ensemble.paths), verify_paths(paths)):
        outcome["ordering"] += check.ordering_violations
        outcome["coalescence"] += check.coalescence_violations
    outcome["coalesced_pairs"] = len(ensemble.coalescence_events)
    return outcome


def _mirror_arrows(text: str) -> str:
    lines = []
    for line in text.splitlines():
        if line and not line.startswith("#"):
            site, t, direction = line.split()
            line = f"{site} {t} {'L' if direction == 'R' else 'R'}"
        lines.append(line)
    return "\n".join(lines) + "\n"


def _sum_outcomes(outcomes: List[Dict[str, int]]) -> Dict[str, int]:
    totals: Dict[str, int] = {}
    for outcome in outcomes:
        for key, value in outcome.items():
            totals[key] = totals.get(key, 0) + value
    return totals


class OrderingSuite(BaseSuite):
    name = "ordering"
    description = "Coupled walks from ordered starts never cross."

    def _define_checks(self) -> List[str]:
        return ["live_ordering", "posthoc_ordering"]

    def run(self, task: SuiteTask) -> SuiteResult:
        ctx = task.context
        spec = _ssep(ctx)
        sizes = ctx["sizes"]
        n = sizes.coupling_replicas
        outcomes = ctx["executor"].map(partial(_coupled_replica, spec, sizes.coupling_horizon, task.seed, False),
                                       range(n), stage=self.name)
        totals = _sum_outcomes(outcomes)
        stats = {"model": spec.tag, "replicas": n, "horizon": sizes.coupling_horizon,
                 "live_violations": totals["live_violations"], "ordering_violations": totals["ordering"]}
        return self._create_result(totals["live_violations"] == 0 and totals["ordering"] == 0, stats)


class CoalescenceSuite(BaseSuite):
    name = "coalescence"
    description = "Walks that meet stay together; the arrow file reproduces the coupled paths."

    def _define_checks(self) -> List[str]:
        return ["permanence", "artifact_replay"]

    def run(self, task: SuiteTask) -> SuiteResult:
        ctx = task.context
        spec = _ssep(ctx)
        sizes = ctx["sizes"]
        n = sizes.coupling_replicas
        outcomes = ctx["executor"].map(
            partial(_coupled_replica, spec, sizes.coupling_horizon, task.seed, task.inject_fault), range(n),
            stage=self.name,
        )
        totals = _sum_outcomes(outcomes)
        stats = {
            "model": spec.tag,
            "replicas": n,
            "fault_injected": task.inject_fault,
            "coalescence_events": totals["coalesced_pairs"],
            "permanence_violations": totals["coalescence"],
            "ordering_violations": totals["ordering"],
            "replay_mismatches": totals["mismatches"],
        }
        passed = totals["coalescence"] == 0 and totals["ordering"] == 0 and totals["mismatches"] == 0
        return self._create_result(passed, stats)


#Arrow counts
def _arrow_count(rate: float, horizon: float, seed: int, index: int) -> int:
    env = build_environment(ConstantModelSpec(p=rate, q=0.0), Window(x_min=0, x_max=0, t_max=horizon), 0)
    return len(sample_arrow_field(env, replica_seed(seed, index)).arrows_at(0))


class PoissonCountSuite(BaseSuite):
    name = "poisson_counts"
    description = "Arrow counts on a site match the Poisson law of the integrated rate."
    rate = 1.5
    horizon = 10.0

    def _define_checks(self) -> List[str]:
        return ["chisquare"]

    def run(self, task: SuiteTask) -> SuiteResult:
        ctx = task.context
        n = ctx["sizes"].poisson_seeds
        counts = ctx["executor"].map(partial(_arrow_count, self.rate, self.horizon, task.seed), range(n),
                                     stage=self.name)
        mean = self.rate * self.horizon
        statistic, pvalue, dof = poisson_chisquare(counts, mean)
        stats = {"seeds": n, "expected_mean": mean, "sample_mean": float(np.mean(counts)),
                 "chi2": statistic, "dof": dof, "pvalue": pvalue}
        return self._create_result(pvalue > CHI2_THRESHOLD, stats)


#Law equality
def _final_position(spec: Any, horizon: float, seed: int, engine: Engine, index: int) -> Tuple[str, int]:
    run = run_replica(spec, horizon, replica_seed(seed, index), index, engine=engine)
    return run.path.status.value, run.path.final_position


class LawEqualitySuite(BaseSuite):
    name = "law_equality"
    description = "X_T from the arrow construction and from direct simulation agree in law."
    horizons = {"const-biased": 100.0, "ssep-half": 100.0}

    def _define_checks(self) -> List[str]:
        return list(self.horizons)

    def run(self, task: SuiteTask) -> SuiteResult:
        ctx = task.context
        n = ctx["sizes"].law_replicas
        stats, passed = {}, True
        for name, horizon in self.horizons.items():
            spec = ctx["catalogue"][name]
            samples = {}
            for offset, engine in ((0, Engine.GRAPHICAL), (n, Engine.QUENCHED)):
                outcomes = ctx["executor"].map(
                    partial(_final_position, spec, horizon, task.seed, engine), range(offset, offset + n),
                    stage=f"{self.name} {engine.value}",
                )
                samples[engine] = [x for status, x in outcomes if status == PathStatus.COMPLETED.value]
            statistic, pvalue = ks_two_sample(samples[Engine.GRAPHICAL], samples[Engine.QUENCHED])
            stats[name] = {"model": spec.tag, "horizon": horizon, "ks": statistic, "pvalue": pvalue,
                           "graphical_mean": float(np.mean(samples[Engine.GRAPHICAL])),
                           "quenched_mean": float(np.mean(samples[Engine.QUENCHED]))}
            passed = passed and pvalue > KS_THRESHOLD
        return self._create_result(passed, stats)


#Restart
def _restart_pair(spec: Any, s: float, seed: int, index: int) -> Tuple[int, int]:
    path = run_replica(spec, 2 * s, replica_seed(seed, index), index).path
    return path.position_at(s) - path.start, path.final_position - path.position_at(s)


class MarkovRestartSuite(BaseSuite):
    name = "markov_restart"
    description = "Increments after a fixed time are distributed like the walk itself."
    restart_time = 25.0

    def _define_checks(self) -> List[str]:
        return ["increment_law"]

    def run(self, task: SuiteTask) -> SuiteResult:
        ctx = task.context
        spec = ctx["catalogue"]["const-biased"]
        n = ctx["sizes"].restart_replicas
        pairs = ctx["executor"].map(partial(_restart_pair, spec, self.restart_time, task.seed), range(n),
                                    stage=self.name)
        half = n // 2
        early = [first for first, _ in pairs[:half]]
        later = [second for _, second in pairs[half:]]
        statistic, pvalue = ks_two_sample(early, later)
        stats = {"model": spec.tag, "restart_time": self.restart_time, "replicas": n, "ks": statistic, "pvalue": pvalue}
        return self._create_result(pvalue > KS_THRESHOLD, stats)


#Stationarity
class StationaritySuite(BaseSuite):
    name = "stationarity"
    description = "Chain sites and SSEP occupations sit in their stationary laws; SSEP conserves particles."
    chain_horizon = 10.0
    ssep_horizon = 50.0

    def _define_checks(self) -> List[str]:
        return ["chain_chisquare", "ssep_density", "ssep_conservation"]

    def _chain(self, spec: ChainSpec, sites: int, seed: int) -> Dict[str, Any]:
        window = Window(x_min=0, x_max=sites - 1, t_max=self.chain_horizon)
        env = sample_iid_sites(spec, window, seed)
        t = self.chain_horizon / 2
        observed = np.bincount([env.aux_state[x].state_at(t) for x in window.sites], minlength=len(spec.states))
        pi = stationary_distribution(spec).vector(spec.states)
        statistic, pvalue = chisquare_frequencies(observed, pi)
        return {"model": spec.tag, "sites": sites, "time": t, "observed": observed.tolist(),
                "stationary": pi.tolist(), "chi2": statistic, "pvalue": pvalue, "ok": pvalue > CHI2_THRESHOLD}

    def _ssep(self, spec: SsepModelSpec, seed: int) -> Dict[str, Any]:
        T = self.ssep_horizon
        env = sample_ssep(spec, T, seed)
        check_times = [0.0, T / 4, T / 2, 3 * T / 4, float(np.nextafter(T, 0.0))]
        counts = [sum(env.aux_state[x].state_at(t) for x in env.window.sites) for t in check_times]
        n_sites = len(env.window.sites)
        density = counts[-1] / n_sites
        sigma = float(np.sqrt(spec.rho * (1 - spec.rho) / n_sites))
        conserved = len(set(counts)) == 1
        return {"model": spec.tag, "sites": n_sites, "density": density, "rho": spec.rho, "sigma": sigma,
                "particle_counts": counts, "conserved": conserved,
                "ok": conserved and abs(density - spec.rho) <= SIGMAS * sigma}

    def run(self, task: SuiteTask) -> SuiteResult:
        ctx = task.context
        model = ctx.get("model")
        chain = model if isinstance(model, ChainSpec) else ctx["catalogue"]["chain-2state"]
        stats = {
            "chain": self._chain(chain, ctx["sizes"].stationarity_sites, replica_seed(task.seed, 0)),
            "ssep": self._ssep(_ssep(ctx), replica_seed(task.seed, 1)),
        }
        return self._create_result(stats["chain"]["ok"] and stats["ssep"]["ok"], stats)


#Exit times and explosions
class ExitSurveySuite(BaseSuite):
    name = "exit_survey"
    description = "Every catalogue walk leaves the box [-n, n] by the calibrated horizon."
    checkpoints = (25.0, 50.0, 100.0, 200.0)

    def _define_checks(self) -> List[str]:
        return ["fraction_exited", "monotone"]

    def run(self, task: SuiteTask) -> SuiteResult:
        ctx = task.context
        n = ctx["run"].box_radius
        stats, passed = {}, True
        for i, (name, spec) in enumerate(ctx["catalogue"].items()):
            survey = exit_time_survey(spec, n, self.checkpoints, ctx["sizes"].exit_replicas,
                                      replica_seed(task.seed, i), ctx["executor"])
            stats[name] = {"n": n, "checkpoints": survey.checkpoints, "fraction_exited": survey.fraction_exited,
                           "rate_bounds": list(survey.rate_bounds), "passed": survey.passed}
            passed = passed and survey.passed
        return self._create_result(passed, stats)


def _explosion_statuses(spec: Any, horizon: float, seed: int, jump_cap: int, walkers: int, index: int) -> List[str]:
    """Statuses of the walks of task ``index``; an SSEP environment carries ``walkers`` walks."""
    s = replica_seed(seed, index)
    if not isinstance(spec, SsepModelSpec) or walkers == 1:
        return [run_replica(spec, horizon, s, index, jump_cap=jump_cap).path.status.value]
    env = sample_ssep(spec, horizon, s)
    bounds = walk_bounds(spec, env.window)
    return [
        evolve_walk(sample_arrow_field(env, replica_seed(s, k)), 0, horizon, jump_cap=jump_cap, bounds=bounds)
        .status.value
        for k in range(walkers)
    ]


class NoExplosionSuite(BaseSuite):
    name = "no_explosion"
    description = "No catalogue walk reaches the jump cap."

    def _define_checks(self) -> List[str]:
        return ["jump_cap"]

    def run(self, task: SuiteTask) -> SuiteResult:
        ctx = task.context
        sizes = ctx["sizes"]
        n = sizes.explosion_replicas
        jump_cap = ctx["run"].jump_cap
        stats = {"walks_per_model": n, "horizon": sizes.explosion_horizon, "jump_cap": jump_cap}
        exploded = 0
        for i, (name, spec) in enumerate(ctx["catalogue"].items()):
            walkers = sizes.explosion_walkers if isinstance(spec, SsepModelSpec) else 1
            batches = ctx["executor"].map(
                partial(_explosion_statuses, spec, sizes.explosion_horizon, replica_seed(task.seed, i), jump_cap,
                        walkers),
                range(math.ceil(n / walkers)), stage=f"{self.name} {name}",
            )
            statuses = [status for batch in batches for status in batch][:n]
            count = statuses.count(PathStatus.EXPLODED_CAP.value)
            stats[name] = {"walks": len(statuses), "environments": len(batches), "exploded": count,
                           "window_violations": statuses.count(PathStatus.WINDOW_VIOLATION.value)}
            exploded += count
        stats["exploded"] = exploded
        return self._create_result(exploded == 0, stats)


def default_suites() -> List[BaseSuite]:
    return [
        OrderingSuite(),
        CoalescenceSuite(),
        PoissonCountSuite(),
        LawEqualitySuite(),
        StationaritySuite(),
        ExitSurveySuite(),
        NoExplosionSuite(),
        MarkovRestartSuite(),
    ]
