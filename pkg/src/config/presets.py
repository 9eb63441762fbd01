"""Preset catalogue. Each preset is a complete configuration mapping.

Symmetric presets classify at K = 1: a transient label then needs a path that
never returns to its start, whose chance decays like T ** -0.5, while at larger
K the chance of wandering off to one side decays too slowly for any practical T.
SSEP tori are sized from the walk's spread over the horizon.
"""
import copy
from typing import Any, Dict, Optional

from ..common.exceptions import ConfigError
from ..environment.models import spread_half_width

_SSEP_HALF_T = 2500.0
_SSEP_BIASED_T = 1000.0

# Validate section of acceptance runs: 10^5 no-explosion walks across the five
# catalogue models, each SSEP environment shared by 50 walks.
ACCEPTANCE_SIZES: Dict[str, Any] = {
    "coupling_replicas": 1000,
    "coupling_horizon": 50.0,
    "poisson_seeds": 10000,
    "law_replicas": 5000,
    "exit_replicas": 2000,
    "explosion_replicas": 20000,
    "explosion_horizon": 1000.0,
    "explosion_walkers": 50,
    "restart_replicas": 2000,
    "stationarity_sites": 100000,
    "ssep_half_width": None,
}

PRESETS: Dict[str, Dict[str, Any]] = {
    "const-biased": {
        "model": {"kind": "constant", "p": 2.0, "q": 1.0},
        "run": {"T": 200.0, "K": 20, "N": 2000, "n": 5, "checkpoints": [10.0, 25.0, 50.0, 100.0, 200.0]},
        "sweep": {"grid": [
            {"p": 0.5, "q": 1.5},
            {"p": 1.0, "q": 1.5},
            {"p": 2.0, "q": 1.5},
            {"p": 2.5, "q": 1.5},
        ]},
    },
    "const-symmetric": {
        "model": {"kind": "constant", "p": 1.0, "q": 1.0},
        "run": {"T": 4000.0, "K": 1, "N": 2000, "n": 5, "checkpoints": [50.0, 100.0, 200.0, 1000.0, 4000.0]},
    },
    "ssep-half": {
        "model": {"kind": "ssep", "alpha": 2.0, "beta": 1.0, "rho": 0.5,
                  "half_width": spread_half_width(2.0, 1.0, 0.5, _SSEP_HALF_T)},
        "run": {"T": _SSEP_HALF_T, "K": 1, "N": 2000, "n": 5,
                "checkpoints": [100.0, 250.0, 500.0, 1000.0, _SSEP_HALF_T]},
    },
    "ssep-biased": {
        "model": {"kind": "ssep", "alpha": 2.0, "beta": 1.0, "rho": 0.7,
                  "half_width": spread_half_width(2.0, 1.0, 0.7, _SSEP_BIASED_T)},
        "run": {"T": _SSEP_BIASED_T, "K": 20, "N": 2000, "n": 5,
                "checkpoints": [50.0, 100.0, 250.0, 500.0, _SSEP_BIASED_T]},
    },
    "chain-2state": {
        "model": {
            "kind": "iid_chain",
            "states": ["slow", "fast"],
            "generator": [[-1.0, 1.0], [1.0, -1.0]],
            "alpha_plus": {"slow": 1.5, "fast": 3.0},
            "alpha_minus": {"slow": 1.0, "fast": 1.0},
        },
        "run": {"T": 200.0, "K": 20, "N": 2000, "n": 5, "checkpoints": [10.0, 25.0, 50.0, 100.0, 200.0]},
    },
}


def get_preset(name: str) -> Dict[str, Any]:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}", [f"available presets: {', '.join(sorted(PRESETS))}"])
    return copy.deepcopy(PRESETS[name])


def catalogue(half_width: Optional[int] = None) -> Dict[str, Any]:
    """Preset name -> validated model spec; ``half_width`` shrinks the SSEP torus for desk-scale suites."""
    from .settings import validate_config

    models = {}
    for name in PRESETS:
        data = get_preset(name)
        if half_width is not None and data["model"]["kind"] == "ssep":
            data["model"]["half_width"] = half_width
        models[name] = validate_config(data).model
    return models
