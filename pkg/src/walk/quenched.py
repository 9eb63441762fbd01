"""Direct simulation of X under the quenched law, without an arrow field.

Between rate changes at the current site the walk waits an exponential time
with the total rate; a wait that overruns the next change is discarded and
redrawn from the change time, which is exact by memorylessness.
"""
import logging
from typing import Optional, Tuple

from ..common.exceptions import WindowViolationError
from ..common.models import PathStatus
from ..common.rng import StreamPurpose, substream
from ..environment.core import EnvironmentTrajectory
from ..graphical.coupling import DEFAULT_JUMP_CAP
from ..graphical.paths import WalkPath

logger = logging.getLogger(__name__)


def simulate_quenched(
    env: EnvironmentTrajectory,
    x0: int,
    T: float,
    seed: int,
    jump_cap: int = DEFAULT_JUMP_CAP,
    bounds: Optional[Tuple[int, int]] = None,
) -> WalkPath:
    window = env.window
    if not 0.0 < T <= window.t_max:
        raise WindowViolationError(f"horizon {T} outside (0, {window.t_max}]", time=T, window=window)
    lo, hi = bounds if bounds is not None else (window.x_min, window.x_max)
    if not lo <= x0 <= hi:
        raise WindowViolationError(f"start {x0} outside safe window [{lo}, {hi}]", site=x0, window=window)

    rng = substream(seed, StreamPurpose.QUENCHED, x0)
    path = WalkPath(start=x0, horizon=T)
    times, positions = path.jump_times, path.positions
    pos, t, jumps = x0, 0.0, 0
    while t < T:
        track = env.track(pos)
        index = track.segment_index(t)
        r_plus, r_minus = track.rates(index)
        limit = min(track.segment_end(index), T)
        total = r_plus + r_minus
        if total <= 0.0:
            t = limit
            continue
        candidate = t + rng.exponential(1.0 / total)
        if candidate >= limit:
            t = limit
            continue
        t = candidate
        pos += 1 if rng.random() * total < r_plus else -1
        jumps += 1
        times.append(t)
        positions.append(pos)
        if not lo <= pos <= hi:
            path.status = PathStatus.WINDOW_VIOLATION
            break
        if jumps >= jump_cap:
            path.status = PathStatus.EXPLODED_CAP
            logger.warning("[Quenched] jump cap %d reached at t=%r from x0=%d", jump_cap, t, x0)
            break
    path.arrows_crossed = jumps
    return path
