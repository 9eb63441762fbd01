"""Markdown reports for validate, classify and sweep runs."""
import os
from typing import Any, Dict, Mapping, Optional, Sequence

from jinja2 import Environment, FileSystemLoader

from ..common.models import HorizonCalibration, TrichotomyEstimate

SECTIONS = {
    "validate": ["validate_header", "validate_suites"],
    "classify": ["trichotomy_header", "trichotomy_estimates"],
    "sweep": ["trichotomy_header", "trichotomy_estimates", "sweep_band"],
}


def format_interval(p: Mapping[str, Any]) -> str:
    return f"{p['estimate']:.4f} [{p['lower']:.4f}, {p['upper']:.4f}]"


class ReportGenerator:
    def __init__(self, template_dir: Optional[str] = None):
        if template_dir is None:
            template_dir = os.path.join(os.path.dirname(__file__), "templates")
        self.env = Environment(loader=FileSystemLoader(template_dir), trim_blocks=True, lstrip_blocks=True)
        self.env.filters["interval"] = format_interval

    def generate_report(self, kind: str, context: Dict[str, Any]) -> str:
        if kind not in SECTIONS:
            raise ValueError(f"unknown report kind {kind!r}; expected one of {', '.join(sorted(SECTIONS))}")
        output = []
        for section in SECTIONS[kind]:
            template = self.env.get_template(f"{section}.j2")
            output.append(template.render(context))
        return "\n\n".join(output)

    def trichotomy_report(
        self,
        kind: str,
        estimates: Sequence[TrichotomyEstimate],
        config_hash: str,
        seed: int,
        calibrations: Sequence[HorizonCalibration] = (),
        overrides: Optional[Sequence[Mapping[str, Any]]] = None,
    ) -> str:
        """Verdict table of a classify run (one estimate) or a sweep (one per grid point)."""
        if not estimates:
            raise ValueError("a trichotomy report needs at least one estimate")
        return self.generate_report(kind, {
            "kind": kind,
            "config_hash": config_hash,
            "seed": seed,
            "estimates": [e.model_dump(mode="json") for e in estimates],
            "calibrations": [c.model_dump(mode="json") for c in calibrations],
            "overrides": list(overrides) if overrides is not None else [{} for _ in estimates],
            "flagged": [i for i, e in enumerate(estimates) if e.band_ok is False],
        })
