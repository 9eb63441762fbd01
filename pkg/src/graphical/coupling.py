"""Walk paths driven across a shared arrow field.

A path moves up in time and crosses every arrow it meets at its current site
(the earliest arrow strictly after its current time). Paths from several
starts on one field form the monotone coalescing coupling.
"""
import bisect
import heapq
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from ..common.exceptions import CouplingViolationError, WindowViolationError
from ..common.models import PathStatus
from .arrows import ArrowField
from .paths import WalkPath

logger = logging.getLogger(__name__)

DEFAULT_JUMP_CAP = 10 ** 7


@dataclass(frozen=True)
class CoalescenceEvent:
    time: float
    site: int
    survivor: int
    absorbed: int


@dataclass
class CoupledEnsemble:
    field_ref: str
    starts: List[int]
    paths: Dict[int, WalkPath]
    coalescence_events: List[CoalescenceEvent] = field(default_factory=list)

    def classes_at_end(self) -> Dict[int, List[int]]:
        """Surviving class representative -> member starts."""
        classes: Dict[int, List[int]] = {x: [x] for x in self.starts}
        for event in self.coalescence_events:
            classes[event.survivor].extend(classes.pop(event.absorbed))
        return {rep: sorted(members) for rep, members in classes.items()}


def _bounds(field_: ArrowField, bounds: Optional[Tuple[int, int]]) -> Tuple[int, int]:
    if bounds is None:
        return field_.window.x_min, field_.window.x_max
    return bounds


def _check_horizon(field_: ArrowField, T: float) -> None:
    if not 0.0 < T <= field_.window.t_max:
        raise WindowViolationError(f"horizon {T} outside (0, {field_.window.t_max}]", time=T, window=field_.window)


def evolve_walk(
    field_: ArrowField,
    x0: int,
    T: float,
    jump_cap: int = DEFAULT_JUMP_CAP,
    bounds: Optional[Tuple[int, int]] = None,
) -> WalkPath:
    _check_horizon(field_, T)
    lo, hi = _bounds(field_, bounds)
    if not lo <= x0 <= hi:
        raise WindowViolationError(f"start {x0} outside safe window [{lo}, {hi}]", site=x0, window=field_.window)

    path = WalkPath(start=x0, horizon=T)
    times, positions = path.jump_times, path.positions
    pos, t, crossed = x0, 0.0, 0
    while True:
        site = field_.arrows_at(pos)
        k = site.next_index(t)
        if k >= len(site) or site.times[k] > T:
            break
        t = float(site.times[k])
        pos += int(site.steps[k])
        crossed += 1
        times.append(t)
        positions.append(pos)
        if not lo <= pos <= hi:
            path.status = PathStatus.WINDOW_VIOLATION
            break
        if crossed >= jump_cap:
            path.status = PathStatus.EXPLODED_CAP
            logger.warning("[Graphical] jump cap %d reached at t=%r from x0=%d", jump_cap, t, x0)
            break
    path.arrows_crossed = crossed
    return path


class _Coupler:
    def __init__(self, field_: ArrowField, starts: Sequence[int], T: float, jump_cap: int, bounds: Tuple[int, int]):
        self.field = field_
        self.T = T
        self.jump_cap = jump_cap
        self.lo, self.hi = bounds
        self.starts = list(starts)
        self.paths = {x: WalkPath(start=x, horizon=T) for x in starts}
        # A class is a set of coalesced starts, keyed by its lowest start.
        self.members: Dict[int, List[int]] = {x: [x] for x in starts}
        self.pos: Dict[int, int] = {x: x for x in starts}
        self.clock: Dict[int, float] = {x: 0.0 for x in starts}
        self.crossed: Dict[int, int] = {x: 0 for x in starts}
        self.alive: List[int] = list(starts)
        self.occupant: Dict[int, int] = {x: x for x in starts}
        self.scheduled: Dict[int, Tuple] = {}
        self.heap: List[Tuple] = []
        self.events: List[CoalescenceEvent] = []

    def schedule(self, cid: int) -> None:
        site = self.field.arrows_at(self.pos[cid])
        k = site.next_index(self.clock[cid])
        if k < len(site) and site.times[k] <= self.T:
            step = int(site.steps[k])
            entry = (float(site.times[k]), self.pos[cid], 0 if step > 0 else 1, cid, step)
            if self.scheduled.get(cid) != entry:
                self.scheduled[cid] = entry
                heapq.heappush(self.heap, entry)
        else:
            self.scheduled.pop(cid, None)

    def retire(self, cid: int, status: PathStatus) -> None:
        for x in self.members[cid]:
            self.paths[x].status = status
        self.alive.remove(cid)
        if self.occupant.get(self.pos[cid]) == cid:
            del self.occupant[self.pos[cid]]
        self.scheduled.pop(cid, None)

    def neighbours(self, cid: int) -> Tuple[Optional[int], Optional[int]]:
        i = bisect.bisect_left(self.alive, cid)
        below = self.alive[i - 1] if i > 0 else None
        above = self.alive[i + 1] if i + 1 < len(self.alive) else None
        return below, above

    def run(self) -> CoupledEnsemble:
        for cid in self.starts:
            self.schedule(cid)
        while self.heap:
            entry = heapq.heappop(self.heap)
            t, _, _, cid, step = entry
            if self.scheduled.get(cid) != entry:
                continue
            self.advance(cid, t, step)
        return CoupledEnsemble(self.field.field_id, self.starts, self.paths, self.events)

    def advance(self, cid: int, t: float, step: int) -> None:
        self.occupant.pop(self.pos[cid], None)
        new_pos = self.pos[cid] + step
        self.pos[cid] = new_pos
        self.clock[cid] = t
        self.crossed[cid] += 1
        for x in self.members[cid]:
            path = self.paths[x]
            path.jump_times.append(t)
            path.positions.append(new_pos)

        below, above = self.neighbours(cid)
        if (below is not None and self.pos[below] > new_pos) or (above is not None and self.pos[above] < new_pos):
            raise CouplingViolationError(
                f"ordering broken at t={t!r}: class {cid} moved to {new_pos} past a neighbour"
            )
        if not self.lo <= new_pos <= self.hi:
            self.retire(cid, PathStatus.WINDOW_VIOLATION)
            return
        if self.crossed[cid] >= self.jump_cap:
            logger.warning("[Graphical] jump cap %d reached by class %d at t=%r", self.jump_cap, cid, t)
            self.retire(cid, PathStatus.EXPLODED_CAP)
            return

        other = self.occupant.get(new_pos)
        if other is None:
            self.occupant[new_pos] = cid
            self.schedule(cid)
            return
        survivor, absorbed = min(cid, other), max(cid, other)
        self.events.append(CoalescenceEvent(time=t, site=new_pos, survivor=survivor, absorbed=absorbed))
        self.members[survivor].extend(self.members.pop(absorbed))
        self.crossed[survivor] = max(self.crossed[survivor], self.crossed[absorbed])
        self.clock[survivor] = t
        self.alive.remove(absorbed)
        self.scheduled.pop(absorbed, None)
        self.occupant[new_pos] = survivor
        self.schedule(survivor)


def evolve_coupled(
    field_: ArrowField,
    starts: Sequence[int],
    T: float,
    jump_cap: int = DEFAULT_JUMP_CAP,
    bounds: Optional[Tuple[int, int]] = None,
) -> CoupledEnsemble:
    """Monotone coupling of walks from ``starts`` on one field; coalesced walks advance as one."""
    starts = list(starts)
    if not starts:
        raise ValueError("evolve_coupled needs at least one start")
    if any(b <= a for a, b in zip(starts, starts[1:])):
        raise ValueError(f"starts must be strictly increasing, got {starts}")
    _check_horizon(field_, T)
    lo, hi = _bounds(field_, bounds)
    outside = [x for x in starts if not lo <= x <= hi]
    if outside:
        raise WindowViolationError(f"starts {outside} outside safe window [{lo}, {hi}]", site=outside[0], window=field_.window)
    ensemble = _Coupler(field_, starts, T, jump_cap, (lo, hi)).run()
    for path in ensemble.paths.values():
        path.arrows_crossed = path.n_jumps
    if ensemble.coalescence_events:
        logger.debug("[Graphical] %d coalescences among %d starts", len(ensemble.coalescence_events), len(starts))
    return ensemble
