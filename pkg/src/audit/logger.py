import json
import logging
import os
from typing import Any, Dict, Optional

from dotenv import load_dotenv

from ..common.exceptions import ArtifactIOError

LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"


def configure_logging(level: Optional[str] = None) -> int:
    """Install one stream handler on the root logger; the level defaults to RWDRE_LOG."""
    load_dotenv()
    name = (level or os.getenv("RWDRE_LOG") or "WARNING").upper()
    resolved = logging.getLevelName(name)
    if not isinstance(resolved, int):
        resolved = logging.WARNING
    root = logging.getLogger()
    for handler in list(root.handlers):
        if getattr(handler, "_rwdre", False):
            root.removeHandler(handler)
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler._rwdre = True
    root.addHandler(handler)
    root.setLevel(resolved)
    return resolved


class ResultsLogger:
    """Appends one JSON object per line; every record carries the config hash and seed."""

    def __init__(self, filepath: str, config_hash: str, seed: int):
        self.filepath = filepath
        self.config_hash = config_hash
        self.seed = seed

    def log_record(self, kind: str, payload: Dict[str, Any]):
        record = {"kind": kind, "config_hash": self.config_hash, "seed": self.seed}
        record.update(payload)
        try:
            with open(self.filepath, "a", encoding="utf-8") as f:
                f.write(json.dumps(record) + "\n")
        except OSError as e:
            raise ArtifactIOError(f"cannot append to {self.filepath}: {e}") from e
