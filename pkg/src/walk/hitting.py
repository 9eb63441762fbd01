"""Hitting, shifted hitting and k-th return times on a realized path.

Times beyond what a path observed are reported as censored at the horizon.
For a path that starts inside the target, ``hitting_time`` reads the infimum
over t > 0 as the first return after leaving the target, which is what the
return-time recursion uses.
"""
import bisect
from typing import FrozenSet, Iterable, List, Optional, TextIO, Union

from pydantic import BaseModel, Field, model_validator

from ..common.models import CensoredTime
from ..graphical.paths import WalkPath

TimeLike = Union[float, CensoredTime]


class HittingRecord(BaseModel):
    target: List[int] = Field(..., description="Target site set A, sorted.")
    h_time: CensoredTime = Field(..., description="H_A.")
    returns: List[CensoredTime] = Field(..., description="T^(k)_A for k = 1..K.")
    shift_base: Optional[float] = Field(None, description="S when the record describes the path after S.")

    @model_validator(mode="after")
    def _check_monotone(self) -> "HittingRecord":
        seen_unobserved = False
        previous = 0.0
        for ret in self.returns:
            if seen_unobserved and ret.is_finite:
                raise ValueError("a return time follows a censored or infinite one")
            if ret.is_finite and ret.value < previous:
                raise ValueError("return times must be nondecreasing")
            seen_unobserved = seen_unobserved or not ret.is_finite
            previous = ret.value
        return self


def _as_set(A: Iterable[int]) -> FrozenSet[int]:
    return frozenset(int(a) for a in A)


def _index_at(path: WalkPath, t: float) -> int:
    return bisect.bisect_right(path.jump_times, t) - 1


def _first_index(path: WalkPath, start: int, inside: bool, A: FrozenSet[int]) -> Optional[int]:
    # First index > start whose position is in A (inside=True) or outside A.
    positions = path.positions
    for k in range(start + 1, len(positions)):
        if (positions[k] in A) == inside:
            return k
    return None


def _entry_after(path: WalkPath, index: int, A: FrozenSet[int]) -> Optional[int]:
    """Index of the first entry into A after ``index``, leaving A first if needed."""
    if path.positions[index] in A:
        index = _first_index(path, index, False, A)
        if index is None:
            return None
    return _first_index(path, index, True, A)


def hitting_time(path: WalkPath, A: Iterable[int]) -> CensoredTime:
    A = _as_set(A)
    k = _entry_after(path, 0, A)
    if k is None:
        return CensoredTime.censored_at(path.observed_until)
    return CensoredTime.observed(path.jump_times[k])


def shifted_hitting(path: WalkPath, S: TimeLike, A: Iterable[int]) -> CensoredTime:
    """Theta_S H_A: time after S until the path is next in A."""
    if isinstance(S, CensoredTime):
        if S.censored:
            return CensoredTime.censored_at(0.0)
        S = S.value
    if S == float("inf"):
        return CensoredTime.infinite()
    # The path carries no information past its observation window.
    if S > path.observed_until:
        return CensoredTime.censored_at(0.0)
    k = _entry_after(path, _index_at(path, S), _as_set(A))
    if k is None:
        return CensoredTime.censored_at(path.observed_until - S)
    return CensoredTime.observed(path.jump_times[k] - S)


def reroot(path: WalkPath, S: float) -> WalkPath:
    """The path t -> X_{S+t} - X_S on [0, horizon - S]."""
    if not 0.0 <= S <= path.observed_until:
        raise ValueError(f"cannot re-root at {S}: path observed on [0, {path.observed_until}]")
    k = _index_at(path, S)
    base = path.positions[k]
    times = [0.0] + [t - S for t in path.jump_times[k + 1:]]
    positions = [p - base for p in path.positions[k:]]
    return WalkPath(
        start=0,
        horizon=path.horizon - S,
        jump_times=times,
        positions=positions,
        status=path.status,
        arrows_crossed=len(positions) - 1,
    )


def return_times(path: WalkPath, A: Iterable[int], K: int, shift: Optional[float] = None) -> HittingRecord:
    """T^(1..K)_A by the exit-then-enter recursion; censoring propagates."""
    if K < 1:
        raise ValueError(f"K must be at least 1, got {K}")
    A = _as_set(A)
    observed = path if shift is None else reroot(path, shift)
    if shift is not None:
        A = frozenset(a - path.position_at(shift) for a in A)

    returns: List[CensoredTime] = []
    index: Optional[int] = 0
    for _ in range(K):
        index = _entry_after(observed, index, A) if index is not None else None
        if index is None:
            returns.append(CensoredTime.censored_at(observed.observed_until))
        else:
            returns.append(CensoredTime.observed(observed.jump_times[index]))
    return HittingRecord(
        target=sorted(A),
        h_time=hitting_time(observed, A),
        returns=returns,
        shift_base=shift,
    )


def dump_hitting_record(record: HittingRecord, stream: TextIO) -> None:
    stream.write("# rwdre-hitting v1\n")
    stream.write(f"# target {' '.join(str(a) for a in record.target)}\n")
    if record.shift_base is not None:
        stream.write(f"# shift {record.shift_base!r}\n")
    stream.write(f"H {record.h_time.to_text()}\n")
    for k, ret in enumerate(record.returns, start=1):
        stream.write(f"T {k} {ret.to_text()}\n")
