from typing import List, Optional


class RwdreError(Exception):
    # Base exception for everything raised by the simulation laboratory.
    pass


class ModelError(RwdreError):
    # Raised when a model specification is unusable (e.g. a reducible generator).
    pass


class WindowViolationError(RwdreError):
    # Raised on a query or translation that leaves the realized space-time window.
    def __init__(self, message: str, site: Optional[int] = None, time: Optional[float] = None, window=None):
        super().__init__(message)
        self.site = site
        self.time = time
        self.window = window


class CouplingViolationError(RwdreError):
    # Raised when coupled paths cross or separate after coalescing.
    pass


class ConfigError(RwdreError):
    # Raised when an experiment configuration cannot be parsed or validated.
    def __init__(self, message: str, diagnostics: Optional[List[str]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []

    def __str__(self) -> str:
        base = super().__str__()
        if not self.diagnostics:
            return base
        return base + "\n" + "\n".join(f"  - {d}" for d in self.diagnostics)


class SuiteFailure(RwdreError):
    # Raised when one or more validation suites did not pass.
    def __init__(self, message: str, failed_suites: Optional[List[str]] = None):
        super().__init__(message)
        self.failed_suites = failed_suites or []


class ArtifactIOError(RwdreError):
    # Raised when an artifact file cannot be read or written.
    pass
