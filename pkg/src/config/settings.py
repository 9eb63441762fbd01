"""Experiment configuration: strict parsing, preset merging and the config hash."""
import copy
import hashlib
import json
import os
import re
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from typing import Any, Dict, List, Literal, Mapping, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..analysis.replica import Engine
from ..common.exceptions import ConfigError
from ..common.models import PilotMode
from ..common.rng import STREAM_SCHEME
from ..environment.models import ModelSpec
from ..graphical.coupling import DEFAULT_JUMP_CAP
from .presets import get_preset


class RunSection(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    horizon: float = Field(100.0, gt=0, alias="T", description="Time horizon of every walk.")
    level: int = Field(20, ge=1, alias="K", description="Classification threshold.")
    replicas: int = Field(1000, ge=1, alias="N")
    box_radius: int = Field(5, ge=0, alias="n", description="Radius of the exit-time box.")
    jump_cap: int = Field(DEFAULT_JUMP_CAP, ge=1)
    checkpoints: Optional[List[float]] = Field(None, description="Times at which survey fractions are read.")
    margin: Optional[int] = Field(None, ge=0, description="Safe-window margin for SSEP walks.")
    engine: Engine = Engine.GRAPHICAL
    pilot: PilotMode = Field(PilotMode.CHECK, description="Homogeneous-baseline pilot ahead of classify and sweep.")
    pilot_replicas: int = Field(400, ge=20)
    pilot_agreement: float = Field(0.99, gt=0, lt=1, description="Per-replica agreement the baseline must reach.")

    @model_validator(mode="after")
    def _check_checkpoints(self) -> "RunSection":
        if self.checkpoints is not None:
            if not self.checkpoints:
                raise ValueError("checkpoints must not be empty")
            if any(not 0 < c <= self.horizon for c in self.checkpoints):
                raise ValueError(f"checkpoints must lie in (0, T={self.horizon}]")
        return self


class RngSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    base_seed: int = Field(0, ge=0, lt=2 ** 64)
    stream_scheme: Literal["philox-seedseq-v1"] = STREAM_SCHEME


class OutputSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    directory: str = "results"
    formats: List[Literal["jsonl", "csv", "text"]] = Field(default_factory=lambda: ["jsonl", "csv", "text"])


class SweepSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    grid: List[Dict[str, float]] = Field(..., min_length=1, description="Model overrides, one object per point.")


class ValidateSection(BaseModel):
    """Sample sizes of the validate suites; the defaults are desk scale, see ``ACCEPTANCE_SIZES``."""
    model_config = ConfigDict(extra="forbid")

    coupling_replicas: int = Field(200, ge=1)
    coupling_horizon: float = Field(50.0, gt=0)
    poisson_seeds: int = Field(10000, ge=100)
    law_replicas: int = Field(1000, ge=50)
    exit_replicas: int = Field(2000, ge=100)
    explosion_replicas: int = Field(500, ge=1, description="Walks per catalogue model.")
    explosion_horizon: float = Field(100.0, gt=0)
    explosion_walkers: int = Field(1, ge=1, description="Walks sharing one SSEP environment, each with its own arrows.")
    restart_replicas: int = Field(2000, ge=50)
    stationarity_sites: int = Field(4000, ge=100)
    ssep_half_width: Optional[int] = Field(
        100, ge=10, description="Torus radius used by SSEP suites; null keeps the preset tori.",
    )


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: ModelSpec
    run: RunSection = Field(default_factory=RunSection)
    rng: RngSection = Field(default_factory=RngSection)
    output: OutputSection = Field(default_factory=OutputSection)
    sweep: Optional[SweepSection] = None
    validate_: ValidateSection = Field(default_factory=ValidateSection, alias="validate")


def config_hash(config: ExperimentConfig) -> str:
    canonical = json.dumps(config.model_dump(mode="json", by_alias=True), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def deep_merge(base: Mapping[str, Any], override: Mapping[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(dict(base))
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _locate(text: str, loc: Sequence[Any]) -> Optional[int]:
    # Line of the deepest key in ``loc`` found, in order, in the source text.
    position, line = 0, None
    for key in loc:
        if not isinstance(key, str):
            continue
        k = re.escape(key)
        pattern = re.compile(rf'"{k}"\s*:|^[ \t]*{k}\s*=|^[ \t]*\[(?:[\w.]*\.)?{k}\]', re.M)
        match = pattern.search(text, position)
        if match is None:
            break
        position = match.end()
        line = text.count("\n", 0, match.start()) + 1
    return line


def parse_config_text(text: str, suffix: str) -> Dict[str, Any]:
    if suffix == ".toml":
        try:
            return tomllib.loads(text)
        except tomllib.TOMLDecodeError as e:
            raise ConfigError("cannot parse TOML configuration", [str(e)]) from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError("cannot parse JSON configuration", [f"line {e.lineno}, column {e.colno}: {e.msg}"]) from e
    if not isinstance(data, dict):
        raise ConfigError("configuration must be an object at the top level")
    return data


def read_config_file(path: str) -> str:
    suffix = os.path.splitext(path)[1].lower()
    if suffix not in (".json", ".toml"):
        raise ConfigError(f"unsupported configuration format {suffix!r}", ["use a .json or .toml file"])
    try:
        with open(path, "r", encoding="utf-8") as f:
            return f.read()
    except OSError as e:
        raise ConfigError(f"cannot read configuration {path}", [str(e)]) from e


def validate_config(data: Mapping[str, Any], source_text: Optional[str] = None) -> ExperimentConfig:
    """Validate a raw mapping; every problem becomes one ``field path: message`` diagnostic."""
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        diagnostics = []
        for err in e.errors():
            # Discriminated unions report the chosen tag inside the path.
            path = ".".join(str(p) for p in err["loc"]) or "<root>"
            message = err["msg"]
            line = _locate(source_text, err["loc"]) if source_text else None
            diagnostics.append(f"{path}: {message}" + (f" (line {line})" if line else ""))
        raise ConfigError(f"invalid configuration ({len(diagnostics)} problem(s))", diagnostics) from e


def build_config(
    preset: Optional[str] = None,
    path: Optional[str] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> ExperimentConfig:
    """Preset, then the config file deep-merged over it, then command-line overrides."""
    data: Dict[str, Any] = get_preset(preset) if preset else {}
    source_text = None
    if path:
        text = read_config_file(path)
        data = deep_merge(data, parse_config_text(text, os.path.splitext(path)[1].lower()))
        if not preset:
            source_text = text
    if overrides:
        data = deep_merge(data, overrides)
    return validate_config(data, source_text)
