"""Poisson arrow fields N^+ / N^- driven by an environment.

Arrows of a site are realized on first access from that site's own substream,
segment by segment: on a segment of constant rate r and length l the count is
Poisson(r * l) and the times are i.i.d. uniform on the segment.
"""
import logging
import threading
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, TextIO, Tuple

import numpy as np

from ..common.exceptions import ArtifactIOError, WindowViolationError
from ..common.models import ArrowDirection, Window
from ..common.rng import StreamPurpose, site_stream
from ..environment.core import EnvironmentTrajectory

logger = logging.getLogger(__name__)

FORMAT_HEADER = "# rwdre-arrows v1"


@dataclass(frozen=True)
class Arrow:
    site: int
    time: float
    direction: ArrowDirection

    def sort_key(self) -> Tuple[float, int, int]:
        # Ties: (time, site, right before left).
        return self.time, self.site, 0 if self.direction is ArrowDirection.RIGHT else 1


@dataclass(frozen=True)
class SiteArrows:
    times: np.ndarray
    steps: np.ndarray

    @classmethod
    def empty(cls) -> "SiteArrows":
        return cls(np.empty(0, dtype=float), np.empty(0, dtype=np.int8))

    @classmethod
    def build(cls, times, steps) -> "SiteArrows":
        times = np.asarray(times, dtype=float)
        steps = np.asarray(steps, dtype=np.int8)
        order = np.lexsort((-steps, times))
        times, steps = times[order], steps[order]
        times.setflags(write=False)
        steps.setflags(write=False)
        return cls(times, steps)

    def __len__(self) -> int:
        return len(self.times)

    def next_index(self, t: float) -> int:
        """Index of the earliest arrow strictly after ``t``."""
        return int(np.searchsorted(self.times, t, side="right"))


class ArrowField:
    """Realized arrows on a window; immutable once a site is materialized."""

    def __init__(
        self,
        window: Window,
        env: Optional[EnvironmentTrajectory] = None,
        seed: Optional[int] = None,
        arrows: Optional[Dict[int, SiteArrows]] = None,
        field_id: Optional[str] = None,
    ):
        self.window = window
        self.env = env
        self.seed = seed
        self._lazy = env is not None
        self._sites: Dict[int, SiteArrows] = dict(arrows or {})
        self._lock = threading.Lock()
        self._root: Optional["ArrowField"] = None
        self._offset: Tuple[int, float] = (0, 0.0)
        self.field_id = field_id or (f"{env.model_tag}|seed={seed}" if env is not None else "fixed")

    @classmethod
    def from_arrows(cls, window: Window, arrows: Iterable[Arrow], field_id: str = "fixed") -> "ArrowField":
        grouped: Dict[int, Tuple[List[float], List[int]]] = {}
        for arrow in arrows:
            if not window.contains_site(arrow.site) or not 0.0 < arrow.time <= window.t_max:
                raise WindowViolationError(f"arrow {arrow} outside window {window}", site=arrow.site, window=window)
            times, steps = grouped.setdefault(arrow.site, ([], []))
            times.append(arrow.time)
            steps.append(arrow.direction.step)
        return cls(window, arrows={x: SiteArrows.build(*ts) for x, ts in grouped.items()}, field_id=field_id)

    @property
    def offset(self) -> Tuple[int, float]:
        return self._offset

    def arrows_at(self, x: int) -> SiteArrows:
        if not self.window.contains_site(x):
            raise WindowViolationError(
                f"site {x} outside arrow window [{self.window.x_min}, {self.window.x_max}]",
                site=x, window=self.window,
            )
        cached = self._sites.get(x)
        if cached is not None:
            return cached
        with self._lock:
            cached = self._sites.get(x)
            if cached is None:
                cached = self._realize(x)
                self._sites[x] = cached
        return cached

    def _realize(self, x: int) -> SiteArrows:
        if self._root is not None:
            z, s = self._offset
            base = self._root.arrows_at(x + z)
            keep = base.times > s
            return SiteArrows.build(base.times[keep] - s, base.steps[keep])
        if not self._lazy:
            return SiteArrows.empty()
        track = self.env.track(x)
        rng = site_stream(self.seed, StreamPurpose.ARROWS, x)
        starts = track.starts
        ends = np.append(starts[1:], track.t_end)
        lengths = ends - starts
        times, steps = [], []
        for rates, step in ((track.rate_plus, 1), (track.rate_minus, -1)):
            counts = rng.poisson(rates * lengths)
            total = int(counts.sum())
            if total:
                times.append(rng.uniform(np.repeat(starts, counts), np.repeat(ends, counts)))
                steps.append(np.full(total, step, dtype=np.int8))
        if not times:
            return SiteArrows.empty()
        times = np.concatenate(times)
        steps = np.concatenate(steps)
        keep = times > 0.0
        return SiteArrows.build(times[keep], steps[keep])

    @property
    def materialized_sites(self) -> List[int]:
        return sorted(self._sites)

    def iter_arrows(self, sites: Optional[Iterable[int]] = None) -> List[Arrow]:
        chosen = sorted(sites) if sites is not None else self.materialized_sites
        arrows = []
        for x in chosen:
            site = self.arrows_at(x)
            for t, step in zip(site.times, site.steps):
                arrows.append(Arrow(x, float(t), ArrowDirection.RIGHT if step > 0 else ArrowDirection.LEFT))
        return sorted(arrows, key=Arrow.sort_key)


def sample_arrow_field(env: EnvironmentTrajectory, seed: int) -> ArrowField:
    return ArrowField(env.window, env=env, seed=seed)


def translate_field(field: ArrowField, z: int, s: float) -> ArrowField:
    """theta^z_s: arrow at (x, t) in the result iff arrow at (x + z, t + s) in ``field``."""
    if not 0.0 <= s < field.window.t_max:
        raise WindowViolationError(f"time shift {s} outside [0, {field.window.t_max})", time=s, window=field.window)
    root = field._root or field
    total_z, total_s = field.offset[0] + z, field.offset[1] + s
    if total_z == 0 and total_s == 0.0:
        return root
    translated = ArrowField(root.window.shifted(total_z, total_s), field_id=f"{root.field_id}|shift=({total_z},{total_s!r})")
    translated._root = root
    translated._offset = (total_z, total_s)
    return translated


#Line-oriented text format
def dump_arrows(field: ArrowField, stream: TextIO, sites: Optional[Iterable[int]] = None) -> None:
    w = field.window
    stream.write(f"{FORMAT_HEADER}\n")
    stream.write(f"# field {field.field_id}\n")
    stream.write(f"# window {w.x_min} {w.x_max} {w.t_max!r}\n")
    chosen = sorted(sites) if sites is not None else field.materialized_sites
    for x in chosen:
        site = field.arrows_at(x)
        for t, step in zip(site.times, site.steps):
            stream.write(f"{x} {float(t)!r} {'R' if step > 0 else 'L'}\n")


def load_arrows(stream: TextIO) -> ArrowField:
    window, field_id = None, "fixed"
    arrows: List[Arrow] = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            if line.startswith("#"):
                parts = line[1:].strip().split(" ", 1)
                if parts[0] == "window":
                    x_min, x_max, t_max = parts[1].split()
                    window = Window(x_min=int(x_min), x_max=int(x_max), t_max=float(t_max))
                elif parts[0] == "field":
                    field_id = parts[1]
                continue
            site, t, direction = line.split()
            arrows.append(Arrow(int(site), float(t), ArrowDirection(direction)))
        except ValueError as e:
            raise ArtifactIOError(f"malformed arrow line {lineno}: {line!r} ({e})") from e
    if window is None:
        raise ArtifactIOError("arrow file lacks a '# window' header")
    return ArrowField.from_arrows(window, arrows, field_id=field_id)
