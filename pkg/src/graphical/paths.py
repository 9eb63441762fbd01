import bisect
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, TextIO

import numpy as np

from ..common.exceptions import ArtifactIOError
from ..common.models import CensoredTime, PathStatus

FORMAT_HEADER = "# rwdre-path v1"


@dataclass
class WalkPath:
    """Right-continuous piecewise-constant walk; ``positions[k]`` holds on
    ``[jump_times[k], jump_times[k+1])`` and ``jump_times[0] == 0``."""
    start: int
    horizon: float
    jump_times: List[float] = field(default_factory=lambda: [0.0])
    positions: List[int] = field(default_factory=list)
    status: PathStatus = PathStatus.COMPLETED
    arrows_crossed: int = 0

    def __post_init__(self):
        if not self.positions:
            self.positions = [self.start]

    @property
    def n_jumps(self) -> int:
        return len(self.positions) - 1

    @property
    def final_position(self) -> int:
        return self.positions[-1]

    @property
    def observed_until(self) -> float:
        # Aborted paths are only known up to their last event.
        return self.horizon if self.status is PathStatus.COMPLETED else self.jump_times[-1]

    def position_at(self, t: float) -> int:
        return self.positions[bisect.bisect_right(self.jump_times, t) - 1]

    def positions_at(self, times) -> np.ndarray:
        index = np.searchsorted(np.asarray(self.jump_times), np.asarray(times, dtype=float), side="right") - 1
        return np.asarray(self.positions)[index]

    @property
    def min_position(self) -> int:
        return min(self.positions)

    @property
    def max_position(self) -> int:
        return max(self.positions)


@dataclass
class PathCheck:
    ordering_violations: int = 0
    coalescence_violations: int = 0
    pairs_checked: int = 0
    coalesced_pairs: int = 0

    @property
    def ok(self) -> bool:
        return self.ordering_violations == 0 and self.coalescence_violations == 0


def explosion_time(path: WalkPath) -> CensoredTime:
    """tau_Delta of the path: infinite when it completed, else a censored lower bound."""
    if path.status is PathStatus.COMPLETED:
        return CensoredTime.infinite()
    return CensoredTime.censored_at(path.jump_times[-1])


def verify_paths(paths: Mapping[int, WalkPath]) -> PathCheck:
    """Check ordering and coalescence permanence between neighbouring starts at every event time."""
    check = PathCheck()
    starts = sorted(paths)
    for y, z in zip(starts, starts[1:]):
        lower, upper = paths[y], paths[z]
        until = min(lower.observed_until, upper.observed_until)
        times = np.union1d(lower.jump_times, upper.jump_times)
        times = times[times <= until]
        gap = upper.positions_at(times) - lower.positions_at(times)
        check.pairs_checked += 1
        check.ordering_violations += int(np.count_nonzero(gap < 0))
        met = np.flatnonzero(gap == 0)
        if len(met):
            check.coalesced_pairs += 1
            check.coalescence_violations += int(np.count_nonzero(gap[met[0]:] != 0))
    return check


#Line-oriented text format
def dump_path(path: WalkPath, stream: TextIO) -> None:
    stream.write(f"{FORMAT_HEADER}\n")
    stream.write(f"# start {path.start} status {path.status.value} horizon {path.horizon!r} crossed {path.arrows_crossed}\n")
    for t, x in zip(path.jump_times, path.positions):
        stream.write(f"{t!r} {x}\n")


def load_path(stream: TextIO) -> WalkPath:
    header: Dict[str, str] = {}
    times: List[float] = []
    positions: List[int] = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            if line.startswith("#"):
                parts = line[1:].split()
                if parts and parts[0] == "start":
                    header = dict(zip(parts[::2], parts[1::2]))
                continue
            t, x = line.split()
            times.append(float(t))
            positions.append(int(x))
        except ValueError as e:
            raise ArtifactIOError(f"malformed path line {lineno}: {line!r} ({e})") from e
    if not header or not positions:
        raise ArtifactIOError("path file lacks a '# start' header or events")
    return WalkPath(
        start=int(header["start"]),
        horizon=float(header["horizon"]),
        jump_times=times,
        positions=positions,
        status=PathStatus(header["status"]),
        arrows_crossed=int(header["crossed"]),
    )
