"""One replica: environment, arrow field and walk, with lazy window growth.

Local models (constant, i.i.d. chains) start on a window sized from the rate
bounds and double it whenever the walk leaves; per-site substreams make the
grown realization agree with the old one on the old window. SSEP is realized
on its whole torus and walks are confined to the model's safe bounds.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Optional, Tuple

from ..common.exceptions import ModelError
from ..common.models import CensoredTime, PathStatus, ReplicaClass, ReplicaSummary, Window
from ..common.rng import replica_seed
from ..environment.core import EnvironmentTrajectory
from ..environment.models import SsepModelSpec, build_environment, extend_window, rate_bounds
from ..graphical.arrows import ArrowField, sample_arrow_field
from ..graphical.coupling import DEFAULT_JUMP_CAP, evolve_walk
from ..graphical.paths import WalkPath
from ..walk.hitting import hitting_time
from ..walk.quenched import simulate_quenched

logger = logging.getLogger(__name__)

MAX_WINDOW_GROWTHS = 16


class Engine(str, Enum):
    GRAPHICAL = "graphical"
    QUENCHED = "quenched"


@dataclass
class ReplicaRun:
    index: int
    seed: int
    env: EnvironmentTrajectory
    path: WalkPath
    arrows: Optional[ArrowField] = None
    window_growths: int = 0


@dataclass(frozen=True)
class ReplicaPlan:
    """Everything a worker needs to run replica ``index`` of a batch."""
    spec: Any
    horizon: float
    base_seed: int
    level: int = 20
    engine: Engine = Engine.GRAPHICAL
    jump_cap: int = DEFAULT_JUMP_CAP
    targets: Tuple[int, ...] = ()
    exit_radius: Optional[int] = None
    start: int = 0
    margin: Optional[int] = None


def initial_half_width(spec: Any, horizon: float) -> int:
    low, high = rate_bounds(spec)
    drift = (high - low) * horizon
    spread = 4.0 * math.sqrt(2.0 * high * horizon)
    return int(math.ceil(drift + spread)) + 8


def walk_bounds(spec: Any, window: Window, margin: Optional[int] = None) -> Tuple[int, int]:
    if isinstance(spec, SsepModelSpec):
        if margin is not None and margin != spec.margin:
            spec = spec.model_copy(update={"margin": margin})
        return spec.safe_bounds
    return window.x_min, window.x_max


def _grow(window: Window) -> Window:
    return Window(x_min=2 * window.x_min - 1, x_max=2 * window.x_max + 1, t_max=window.t_max)


def run_replica(
    spec: Any,
    horizon: float,
    seed: int,
    index: int = 0,
    start: int = 0,
    engine: Engine = Engine.GRAPHICAL,
    jump_cap: int = DEFAULT_JUMP_CAP,
    margin: Optional[int] = None,
) -> ReplicaRun:
    """Realize one replica with its own ``seed`` and run the walk from ``start`` up to ``horizon``."""
    if isinstance(spec, SsepModelSpec):
        window = Window(x_min=-spec.half_width, x_max=spec.half_width, t_max=horizon)
    else:
        half = initial_half_width(spec, horizon)
        window = Window(x_min=start - half, x_max=start + half, t_max=horizon)

    env = build_environment(spec, window, seed)
    growths = 0
    while True:
        bounds = walk_bounds(spec, env.window, margin)
        if engine is Engine.QUENCHED:
            arrows = None
            path = simulate_quenched(env, start, horizon, seed, jump_cap=jump_cap, bounds=bounds)
        else:
            arrows = sample_arrow_field(env, seed)
            path = evolve_walk(arrows, start, horizon, jump_cap=jump_cap, bounds=bounds)
        if path.status is not PathStatus.WINDOW_VIOLATION or isinstance(spec, SsepModelSpec):
            break
        if growths >= MAX_WINDOW_GROWTHS:
            logger.warning("[Replica] %d: window still too small after %d growths", index, growths)
            break
        try:
            env = extend_window(env, spec, _grow(env.window), seed)
        except ModelError:
            break
        growths += 1

    if path.status is PathStatus.WINDOW_VIOLATION:
        logger.info("[Replica] %d: left the safe window %s at t=%r", index, bounds, path.jump_times[-1])
    return ReplicaRun(index=index, seed=seed, env=env, path=path, arrows=arrows, window_growths=growths)


def classify_path(path: WalkPath, level: int) -> ReplicaClass:
    """Finite-horizon surrogate of the three almost-sure behaviours, recurrent first."""
    if path.status is not PathStatus.COMPLETED:
        return ReplicaClass.UNCLASSIFIED
    origin = path.start
    positions = path.positions
    up = next((k for k, x in enumerate(positions) if x - origin >= level), None)
    down = next((k for k, x in enumerate(positions) if origin - x >= level), None)
    if up is not None and down is not None:
        return ReplicaClass.RECURRENT
    final = path.final_position - origin
    if up is not None and final >= level and origin not in positions[up:]:
        return ReplicaClass.TRANSIENT_RIGHT
    if down is not None and final <= -level and origin not in positions[down:]:
        return ReplicaClass.TRANSIENT_LEFT
    return ReplicaClass.UNCLASSIFIED


def exit_time(path: WalkPath, radius: int) -> CensoredTime:
    """First time the path is outside ``[start - radius, start + radius]``."""
    for t, x in zip(path.jump_times, path.positions):
        if abs(x - path.start) > radius:
            return CensoredTime.observed(t)
    return CensoredTime.censored_at(path.observed_until)


def summarize(index: int, path: WalkPath, level: int, targets=(), exit_radius: Optional[int] = None) -> ReplicaSummary:
    return ReplicaSummary(
        index=index,
        status=path.status,
        final_position=path.final_position,
        n_jumps=path.n_jumps,
        min_position=path.min_position,
        max_position=path.max_position,
        replica_class=classify_path(path, level),
        observed_until=path.observed_until,
        hit_times={p: hitting_time(path, {p}) for p in targets},
        exit_time=exit_time(path, exit_radius) if exit_radius is not None else None,
    )


def simulate_replica(plan: ReplicaPlan, index: int) -> ReplicaSummary:
    """Top-level worker entry point; picklable for process pools."""
    seed = replica_seed(plan.base_seed, index)
    run = run_replica(plan.spec, plan.horizon, seed, index, plan.start, plan.engine, plan.jump_cap, plan.margin)
    return summarize(index, run.path, plan.level, plan.targets, plan.exit_radius)
