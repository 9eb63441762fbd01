from .base_task import BaseSuite, SuiteRegistry, SuiteResult, SuiteTask, TaskStatus
from .orchestrator import ExperimentOrchestrator, ReplicaExecutor

__all__ = [
    "BaseSuite",
    "SuiteRegistry",
    "SuiteResult",
    "SuiteTask",
    "TaskStatus",
    "ExperimentOrchestrator",
    "ReplicaExecutor",
]
