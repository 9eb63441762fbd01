"""Space-time rate fields, piecewise constant in time per site.

A site's rates on ``[t_start, t_end)`` are constant; evaluation is
right-continuous, so a query at a boundary sees the segment starting there.
"""
import json
import logging
import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Any, Dict, Iterable, List, Mapping, Optional, TextIO, Tuple

import numpy as np

from ..common.exceptions import ArtifactIOError, WindowViolationError
from ..common.models import Window

logger = logging.getLogger(__name__)

FORMAT_HEADER = "# rwdre-environment v1"


@dataclass(frozen=True)
class RateSegment:
    t_start: float
    t_end: float
    rate_plus: float
    rate_minus: float

    def __post_init__(self):
        if not self.t_start < self.t_end:
            raise ValueError(f"segment must have t_start < t_end, got [{self.t_start}, {self.t_end})")
        for rate in (self.rate_plus, self.rate_minus):
            if not (math.isfinite(rate) and rate >= 0):
                raise ValueError(f"rates must be finite and nonnegative, got {rate}")

    @property
    def length(self) -> float:
        return self.t_end - self.t_start


def _frozen(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


class SiteRateTrack:
    """Maximal rate segments of one site tiling ``[0, t_end]``."""

    __slots__ = ("site", "starts", "rate_plus", "rate_minus", "t_end")

    def __init__(self, site: int, starts, rate_plus, rate_minus, t_end: float, compact: bool = True):
        starts = np.asarray(starts, dtype=float)
        plus = np.asarray(rate_plus, dtype=float)
        minus = np.asarray(rate_minus, dtype=float)
        if not (len(starts) == len(plus) == len(minus)) or len(starts) == 0:
            raise ValueError(f"site {site}: starts and rate arrays must be non-empty and aligned")
        if starts[0] != 0.0:
            raise ValueError(f"site {site}: first segment must start at 0, got {starts[0]}")
        if np.any(np.diff(starts) <= 0) or starts[-1] >= t_end:
            raise ValueError(f"site {site}: segment starts must increase strictly inside [0, {t_end})")
        if not (np.all(np.isfinite(plus)) and np.all(np.isfinite(minus))) or np.any(plus < 0) or np.any(minus < 0):
            raise ValueError(f"site {site}: rates must be finite and nonnegative")
        if compact and len(starts) > 1:
            keep = np.ones(len(starts), dtype=bool)
            keep[1:] = (plus[1:] != plus[:-1]) | (minus[1:] != minus[:-1])
            starts, plus, minus = starts[keep], plus[keep], minus[keep]
        self.site = int(site)
        self.starts = _frozen(starts, float)
        self.rate_plus = _frozen(plus, float)
        self.rate_minus = _frozen(minus, float)
        self.t_end = float(t_end)

    @classmethod
    def from_segments(cls, site: int, segments: Iterable[RateSegment]) -> "SiteRateTrack":
        segments = list(segments)
        if not segments:
            raise ValueError(f"site {site}: no segments")
        for left, right in zip(segments, segments[1:]):
            if left.t_end != right.t_start:
                raise ValueError(f"site {site}: gap or overlap at {left.t_end} / {right.t_start}")
        return cls(
            site,
            [seg.t_start for seg in segments],
            [seg.rate_plus for seg in segments],
            [seg.rate_minus for seg in segments],
            segments[-1].t_end,
        )

    @classmethod
    def constant(cls, site: int, rate_plus: float, rate_minus: float, t_end: float) -> "SiteRateTrack":
        return cls(site, [0.0], [rate_plus], [rate_minus], t_end)

    def __len__(self) -> int:
        return len(self.starts)

    @property
    def segments(self) -> List[RateSegment]:
        ends = list(self.starts[1:]) + [self.t_end]
        return [
            RateSegment(float(a), float(b), float(p), float(m))
            for a, b, p, m in zip(self.starts, ends, self.rate_plus, self.rate_minus)
        ]

    def segment_index(self, t: float) -> int:
        return int(np.searchsorted(self.starts, t, side="right")) - 1

    def segment_end(self, index: int) -> float:
        return float(self.starts[index + 1]) if index + 1 < len(self.starts) else self.t_end

    def rates(self, index: int) -> Tuple[float, float]:
        return float(self.rate_plus[index]), float(self.rate_minus[index])

    def integrated(self, t0: float, t1: float) -> Tuple[float, float]:
        """Integrals of both rates over ``[t0, t1]``."""
        ends = np.append(self.starts[1:], self.t_end)
        overlap = np.clip(np.minimum(ends, t1) - np.maximum(self.starts, t0), 0.0, None)
        return float(overlap @ self.rate_plus), float(overlap @ self.rate_minus)

    def shifted(self, s: float, new_site: int, t_end: float) -> "SiteRateTrack":
        # Restriction to [s, s + t_end] re-rooted at time 0.
        index = self.segment_index(s)
        starts = self.starts[index:] - s
        keep = starts < t_end
        starts = starts[keep]
        starts[0] = 0.0
        return SiteRateTrack(
            new_site, starts, self.rate_plus[index:][keep], self.rate_minus[index:][keep], t_end
        )


@dataclass(frozen=True)
class LatentTrack:
    """Jump path of a site's latent state eta_t(x); ``states[k]`` holds on ``[times[k], times[k+1])``."""
    times: np.ndarray
    states: np.ndarray

    def state_at(self, t: float) -> int:
        return int(self.states[int(np.searchsorted(self.times, t, side="right")) - 1])

    def shifted(self, s: float, t_end: float) -> "LatentTrack":
        index = int(np.searchsorted(self.times, s, side="right")) - 1
        times = self.times[index:] - s
        keep = times < t_end
        times = times[keep]
        times[0] = 0.0
        return LatentTrack(_frozen(times, float), _frozen(self.states[index:][keep], int))


class EnvironmentTrajectory:
    """A realized environment on a finite window; immutable after construction."""

    def __init__(
        self,
        window: Window,
        tracks: Mapping[int, SiteRateTrack],
        model_tag: str,
        seed_info: Optional[Dict[str, Any]] = None,
        aux_state: Optional[Mapping[int, LatentTrack]] = None,
    ):
        missing = [x for x in window.sites if x not in tracks]
        if missing:
            raise ValueError(f"window sites without a track: {missing[:5]}{'...' if len(missing) > 5 else ''}")
        for x in window.sites:
            if tracks[x].t_end != window.t_max:
                raise ValueError(f"track of site {x} ends at {tracks[x].t_end}, window ends at {window.t_max}")
        self.window = window
        self.tracks: Mapping[int, SiteRateTrack] = MappingProxyType({x: tracks[x] for x in window.sites})
        self.model_tag = model_tag
        self.seed_info: Dict[str, Any] = dict(seed_info or {})
        self.aux_state: Optional[Mapping[int, LatentTrack]] = (
            MappingProxyType({x: aux_state[x] for x in window.sites}) if aux_state is not None else None
        )

    def track(self, x: int) -> SiteRateTrack:
        if not self.window.contains_site(x):
            raise WindowViolationError(
                f"site {x} outside window [{self.window.x_min}, {self.window.x_max}]",
                site=x, window=self.window,
            )
        return self.tracks[x]

    @property
    def segment_count(self) -> int:
        return sum(len(track) for track in self.tracks.values())


def _check_time(env: EnvironmentTrajectory, x: int, t: float) -> None:
    if not 0.0 <= t < env.window.t_max:
        raise WindowViolationError(
            f"time {t} outside [0, {env.window.t_max}) at site {x}", site=x, time=t, window=env.window
        )


def rates_at(env: EnvironmentTrajectory, x: int, t: float) -> Tuple[float, float]:
    track = env.track(x)
    _check_time(env, x, t)
    return track.rates(track.segment_index(t))


def translate(env: EnvironmentTrajectory, z: int, s: float, window: Optional[Window] = None) -> EnvironmentTrajectory:
    """theta^z_s: the result at (x, t) is ``env`` at (x + z, t + s)."""
    natural = env.window.shifted(z, s) if s < env.window.t_max else None
    if s < 0 or natural is None:
        raise WindowViolationError(f"time shift {s} outside [0, {env.window.t_max})", time=s, window=env.window)
    target = window or natural
    if not natural.contains(target):
        raise WindowViolationError(
            f"translated window {target} not contained in {natural}", window=env.window
        )
    if z == 0 and s == 0 and target == env.window:
        return env
    tracks = {x: env.tracks[x + z].shifted(s, x, target.t_max) for x in target.sites}
    aux = None
    if env.aux_state is not None:
        aux = {x: env.aux_state[x + z].shifted(s, target.t_max) for x in target.sites}
    seed_info = dict(env.seed_info)
    offset = seed_info.get("offset", [0, 0.0])
    seed_info["offset"] = [offset[0] + z, offset[1] + s]
    return EnvironmentTrajectory(target, tracks, env.model_tag, seed_info, aux)


def rate_change_times(env: EnvironmentTrajectory, x: int, t0: float, t1: float) -> List[float]:
    track = env.track(x)
    if not 0.0 <= t0 <= t1 <= env.window.t_max:
        raise WindowViolationError(
            f"interval ({t0}, {t1}) outside [0, {env.window.t_max}]", site=x, window=env.window
        )
    inner = track.starts[(track.starts > t0) & (track.starts < t1)]
    return [float(t) for t in inner]


#Line-oriented text format
def dump_environment(env: EnvironmentTrajectory, stream: TextIO) -> None:
    w = env.window
    stream.write(f"{FORMAT_HEADER}\n")
    stream.write(f"# model {env.model_tag}\n")
    stream.write(f"# window {w.x_min} {w.x_max} {w.t_max!r}\n")
    stream.write(f"# seed {json.dumps(env.seed_info, sort_keys=True)}\n")
    for x in w.sites:
        for seg in env.tracks[x].segments:
            stream.write(f"{x} {seg.t_start!r} {seg.t_end!r} {seg.rate_plus!r} {seg.rate_minus!r}\n")
    if env.aux_state is not None:
        for x in w.sites:
            latent = env.aux_state[x]
            for t, state in zip(latent.times, latent.states):
                stream.write(f"L {x} {float(t)!r} {int(state)}\n")


def load_environment(stream: TextIO) -> EnvironmentTrajectory:
    model_tag, window, seed_info = None, None, {}
    segments: Dict[int, List[RateSegment]] = {}
    latent: Dict[int, Tuple[List[float], List[int]]] = {}
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            if line.startswith("#"):
                parts = line[1:].strip().split(" ", 1)
                if parts[0] == "model":
                    model_tag = parts[1]
                elif parts[0] == "window":
                    x_min, x_max, t_max = parts[1].split()
                    window = Window(x_min=int(x_min), x_max=int(x_max), t_max=float(t_max))
                elif parts[0] == "seed":
                    seed_info = json.loads(parts[1])
                continue
            fields = line.split()
            if fields[0] == "L":
                times, states = latent.setdefault(int(fields[1]), ([], []))
                times.append(float(fields[2]))
                states.append(int(fields[3]))
                continue
            x, a, b, p, m = fields
            segments.setdefault(int(x), []).append(RateSegment(float(a), float(b), float(p), float(m)))
        except (ValueError, IndexError) as e:
            raise ArtifactIOError(f"malformed environment line {lineno}: {line!r} ({e})") from e
    if window is None or model_tag is None:
        raise ArtifactIOError("environment file lacks '# window' or '# model' header")
    tracks = {x: SiteRateTrack.from_segments(x, segs) for x, segs in segments.items()}
    aux = None
    if latent:
        aux = {x: LatentTrack(_frozen(ts, float), _frozen(ss, int)) for x, (ts, ss) in latent.items()}
    return EnvironmentTrajectory(window, tracks, model_tag, seed_info, aux)
