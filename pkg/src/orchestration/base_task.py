from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional
import logging
import time

logger = logging.getLogger(__name__)


class TaskStatus(Enum):
    PENDING = "pending"
    RUNNING = "running"
    PASSED = "passed"
    FAILED = "failed"
    ERROR = "error"


@dataclass
class SuiteResult:
    suite_name: str
    status: TaskStatus
    statistics: Dict[str, Any] = field(default_factory=dict)
    error_message: Optional[str] = None
    execution_time_ms: Optional[int] = None

    def is_success(self) -> bool:
        return self.status == TaskStatus.PASSED and self.error_message is None

    def to_record(self) -> Dict[str, Any]:
        # Timing is left out so reruns produce identical records.
        return {
            "suite": self.suite_name,
            "status": self.status.value,
            "statistics": self.statistics,
            "error": self.error_message,
        }


@dataclass
class SuiteTask:
    task_id: str
    suite_name: str
    context: Dict[str, Any]
    seed: int = 0
    inject_fault: bool = False


class BaseSuite(ABC):
    """A property check run by ``validate``; ``run`` reports, never raises."""

    name: str = "suite"
    description: str = ""

    def __init__(self):
        self.checks = self._define_checks()

    @abstractmethod
    def _define_checks(self) -> List[str]:
        pass

    @abstractmethod
    def run(self, task: SuiteTask) -> SuiteResult:
        pass

    def get_info(self) -> Dict[str, Any]:
        return {"name": self.name, "description": self.description, "checks": self.checks}

    def _create_result(
        self,
        passed: bool,
        statistics: Optional[Dict[str, Any]] = None,
        error_message: Optional[str] = None,
    ) -> SuiteResult:
        return SuiteResult(
            suite_name=self.name,
            status=TaskStatus.PASSED if passed else TaskStatus.FAILED,
            statistics=statistics or {},
            error_message=error_message,
        )

    def _execute_safely(self, task: SuiteTask) -> SuiteResult:
        start_time = time.time()
        try:
            result = self.run(task)
        except Exception as e:
            logger.exception("[Suite] %s raised", self.name)
            result = SuiteResult(
                suite_name=self.name,
                status=TaskStatus.ERROR,
                error_message=f"Suite execution failed: {e}",
            )
        result.execution_time_ms = int((time.time() - start_time) * 1000)
        return result


class SuiteRegistry:
    def __init__(self):
        self.suites: Dict[str, BaseSuite] = {}
        self.suite_stats: Dict[str, Dict[str, int]] = {}

    def register_suite(self, suite: BaseSuite) -> bool:
        if suite.name in self.suites:
            return False
        self.suites[suite.name] = suite
        self.suite_stats[suite.name] = {"runs": 0, "failures": 0, "total_execution_time_ms": 0}
        return True

    def get_suite(self, name: str) -> Optional[BaseSuite]:
        return self.suites.get(name)

    def names(self) -> List[str]:
        return list(self.suites)

    def update_stats(self, result: SuiteResult):
        stats = self.suite_stats.get(result.suite_name)
        if stats is None:
            return
        stats["runs"] += 1
        if not result.is_success():
            stats["failures"] += 1
        if result.execution_time_ms:
            stats["total_execution_time_ms"] += result.execution_time_ms
