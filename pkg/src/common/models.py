import math
from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator


class ArrowDirection(str, Enum):
    RIGHT = "R"
    LEFT = "L"

    @property
    def step(self) -> int:
        return 1 if self is ArrowDirection.RIGHT else -1


class PathStatus(str, Enum):
    COMPLETED = "completed"
    EXPLODED_CAP = "exploded_cap"
    WINDOW_VIOLATION = "window_violation"


class ReplicaClass(str, Enum):
    TRANSIENT_RIGHT = "transient_right"
    TRANSIENT_LEFT = "transient_left"
    RECURRENT = "recurrent"
    UNCLASSIFIED = "unclassified"


class Verdict(str, Enum):
    TRANSIENT_RIGHT = "transient_right"
    TRANSIENT_LEFT = "transient_left"
    RECURRENT = "recurrent"
    INCONCLUSIVE = "inconclusive"


class PilotMode(str, Enum):
    OFF = "off"
    CHECK = "check"
    RESCALE = "rescale"


#Space-time primitives
class Window(BaseModel):
    model_config = ConfigDict(frozen=True)

    x_min: int = Field(..., description="Leftmost realized site.")
    x_max: int = Field(..., description="Rightmost realized site.")
    t_max: float = Field(..., gt=0, description="Time horizon T_window of the realization.")

    @model_validator(mode="after")
    def _check_sites(self) -> "Window":
        if self.x_min > self.x_max:
            raise ValueError(f"empty window: x_min={self.x_min} > x_max={self.x_max}")
        return self

    @property
    def sites(self) -> range:
        return range(self.x_min, self.x_max + 1)

    def contains_site(self, x: int) -> bool:
        return self.x_min <= x <= self.x_max

    def contains(self, other: "Window") -> bool:
        return (self.x_min <= other.x_min and other.x_max <= self.x_max
                and other.t_max <= self.t_max)

    def shifted(self, z: int, s: float) -> "Window":
        # Window of theta^z_s applied to a realization on this window.
        return Window(x_min=self.x_min - z, x_max=self.x_max - z, t_max=self.t_max - s)


class CensoredTime(BaseModel):
    """A random time observed on a finite horizon.

    ``censored=True`` means the event was not seen before ``value`` (the
    horizon); ``value=inf`` with ``censored=False`` is a genuine infinity.
    """
    model_config = ConfigDict(frozen=True)

    value: float
    censored: bool = False

    @classmethod
    def observed(cls, t: float) -> "CensoredTime":
        return cls(value=t, censored=False)

    @classmethod
    def censored_at(cls, horizon: float) -> "CensoredTime":
        return cls(value=horizon, censored=True)

    @classmethod
    def infinite(cls) -> "CensoredTime":
        return cls(value=math.inf, censored=False)

    @property
    def is_finite(self) -> bool:
        return not self.censored and math.isfinite(self.value)

    def to_text(self) -> str:
        if self.censored:
            return f">={self.value!r}"
        if math.isinf(self.value):
            return "inf"
        return repr(self.value)


#Estimates
class ProbabilityEstimate(BaseModel):
    estimate: float = Field(..., ge=0, le=1)
    lower: float = Field(..., ge=0, le=1, description="Lower end of the Wilson interval.")
    upper: float = Field(..., ge=0, le=1, description="Upper end of the Wilson interval.")
    successes: int = Field(..., ge=0)
    trials: int = Field(..., ge=0)


class ReplicaSummary(BaseModel):
    index: int
    status: PathStatus
    final_position: int
    n_jumps: int
    min_position: int
    max_position: int
    replica_class: ReplicaClass = ReplicaClass.UNCLASSIFIED
    observed_until: float
    hit_times: Dict[int, CensoredTime] = Field(default_factory=dict, description="First hitting time per target site.")
    exit_time: Optional[CensoredTime] = None


class TrichotomyEstimate(BaseModel):
    model_tag: str
    horizon: float
    level: int = Field(..., ge=1, description="Threshold K of the finite-horizon surrogate.")
    replicas: int = Field(..., ge=0, description="Replicas kept after discarding window violations.")
    discarded: int = Field(0, ge=0)
    exploded: int = Field(0, ge=0)
    p_right: ProbabilityEstimate
    p_left: ProbabilityEstimate
    p_rec: ProbabilityEstimate
    p_unclassified: ProbabilityEstimate
    verdict: Verdict
    band_ok: Optional[bool] = Field(None, description="Zero-one band check, set by sweeps.")
    parameters: Dict[str, float] = Field(default_factory=dict)
    config_hash: Optional[str] = None
    seed: Optional[int] = None


class HorizonCalibration(BaseModel):
    """Outcome of the homogeneous-baseline pilot run ahead of a classification."""
    model_tag: str
    baseline_tag: str
    expected: ReplicaClass
    level: int = Field(..., ge=1)
    requested_horizon: float
    horizon: float = Field(..., description="Horizon after any rescaling.")
    half_width: Optional[int] = Field(None, description="SSEP torus radius after any rescaling.")
    agreement: ProbabilityEstimate = Field(..., description="Share of classified pilot replicas in the expected class.")
    classified: ProbabilityEstimate
    target: float
    rounds: int = Field(..., ge=1)
    passed: bool


class ExitSurvey(BaseModel):
    model_tag: str
    n: int = Field(..., ge=0, description="Box radius.")
    checkpoints: List[float]
    fraction_exited: List[float]
    exit_times: List[CensoredTime]
    rate_bounds: Tuple[float, float]
    passed: bool


class SymmetryReport(BaseModel):
    model_tag: str
    horizon: float
    ks_statistic: float
    ks_pvalue: float
    trichotomy: TrichotomyEstimate
    checkpoints: List[float]
    hit_minus_one: List[float]
    hit_plus_one: List[float]
    passed: bool


class ErgodicEstimate(BaseModel):
    model_tag: str
    event_kind: str
    n_sites: int
    spatial_average: float
    spatial_stderr: float
    annealed_average: float
    annealed_stderr: float
    analytic: Optional[float] = None
    z_score: float
    passed: bool


class ExcursionSurvey(BaseModel):
    model_tag: str
    target: int
    returns_observed: List[int]
    followed_by_hit: List[int]
    censored: List[int]
    passed: bool
