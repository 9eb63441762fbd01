import logging
import time
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, TypeVar

from ..analysis.replica import ReplicaPlan, simulate_replica
from ..common.models import ReplicaSummary
from .base_task import BaseSuite, SuiteRegistry, SuiteResult, SuiteTask, TaskStatus

logger = logging.getLogger(__name__)

T = TypeVar("T")
ProgressCallback = Callable[[str, float, str], None]


class ReplicaExecutor:
    """Runs independent replica tasks; results always come back in index order.

    Each task derives its randomness from its own index, so the output does
    not depend on ``workers``.
    """

    def __init__(self, workers: int = 1, progress_callback: Optional[ProgressCallback] = None):
        if workers < 1:
            raise ValueError(f"workers must be at least 1, got {workers}")
        self.workers = workers
        self.progress_callback = progress_callback

    def _report_progress(self, stage: str, progress: float, message: str):
        if self.progress_callback:
            try:
                self.progress_callback(stage, progress, message)
            except Exception as e:
                logger.warning("[Orchestrator] progress callback error: %s", e)

    def map(self, fn: Callable[[int], T], indices: Iterable[int], stage: str = "replicas") -> List[T]:
        indices = list(indices)
        total = len(indices)
        if total == 0:
            return []
        step = max(1, total // 10)
        results: List[T] = []
        if self.workers == 1:
            iterator = map(fn, indices)
            pool = None
        else:
            pool = ProcessPoolExecutor(max_workers=self.workers)
            iterator = pool.map(fn, indices, chunksize=max(1, total // (self.workers * 8)))
        try:
            for done, result in enumerate(iterator, start=1):
                results.append(result)
                if done % step == 0 or done == total:
                    self._report_progress(stage, 100.0 * done / total, f"{done}/{total}")
        finally:
            if pool is not None:
                pool.shutdown()
        return results

    def run_replicas(self, plan: ReplicaPlan, n: int, offset: int = 0, stage: str = "replicas") -> List[ReplicaSummary]:
        return self.map(partial(simulate_replica, plan), range(offset, offset + n), stage=stage)


class ExperimentOrchestrator:
    def __init__(self, workers: int = 1):
        self.registry = SuiteRegistry()
        self.executor = ReplicaExecutor(workers)
        self.progress_callback: Optional[ProgressCallback] = None

    def register_suite(self, suite: BaseSuite) -> bool:
        return self.registry.register_suite(suite)

    def suite_info(self) -> Dict[str, Dict[str, Any]]:
        return {name: self.registry.get_suite(name).get_info() for name in self.registry.names()}

    def set_progress_callback(self, callback: ProgressCallback):
        self.progress_callback = callback
        self.executor.progress_callback = callback

    def _report_progress(self, stage: str, progress: float, message: str):
        self.executor._report_progress(stage, progress, message)

    def run_suites(
        self,
        context: Dict[str, Any],
        seed: int,
        inject_fault: bool = False,
        only: Optional[Sequence[str]] = None,
    ) -> List[SuiteResult]:
        """Run the registered suites in registration order; a failing suite never stops the pipeline."""
        names = [n for n in self.registry.names() if only is None or n in only]
        unknown = sorted(set(only or ()) - set(self.registry.names()))
        if unknown:
            raise ValueError(f"unknown suites: {unknown}")
        context = dict(context, executor=self.executor)
        results: List[SuiteResult] = []
        logger.info("[Orchestrator] running %d suites with seed %d", len(names), seed)
        for i, name in enumerate(names):
            suite = self.registry.get_suite(name)
            self._report_progress("validate", 100.0 * i / len(names), f"suite {i + 1}/{len(names)}: {name}")
            task = SuiteTask(task_id=f"validate_{seed}_{name}", suite_name=name, context=context,
                             seed=seed, inject_fault=inject_fault)
            stage_start = time.time()
            result = suite._execute_safely(task)
            self.registry.update_stats(result)
            elapsed = int((time.time() - stage_start) * 1000)
            if result.status is TaskStatus.PASSED:
                logger.info("[Orchestrator] %s passed in %dms", name, elapsed)
            else:
                logger.warning("[Orchestrator] %s %s: %s", name, result.status.value,
                               result.error_message or result.statistics)
            results.append(result)
        self._report_progress("validate", 100.0, "done")
        return results
