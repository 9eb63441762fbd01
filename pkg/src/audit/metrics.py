from typing import Dict

from ..common.models import PathStatus, ReplicaSummary


class RunMetrics:
    def __init__(self):
        self.metrics = {
            "replicas": 0,
            "completed": 0,
            "window_violations": 0,
            "exploded": 0,
            "jumps": 0,
        }

    def update(self, summary: ReplicaSummary):
        self.metrics["replicas"] += 1
        self.metrics["jumps"] += summary.n_jumps
        if summary.status is PathStatus.COMPLETED:
            self.metrics["completed"] += 1
        elif summary.status is PathStatus.WINDOW_VIOLATION:
            self.metrics["window_violations"] += 1
        else:
            self.metrics["exploded"] += 1

    @property
    def all_abnormal(self) -> bool:
        return self.metrics["replicas"] > 0 and self.metrics["completed"] == 0

    def get_metrics(self) -> Dict[str, int]:
        return dict(self.metrics)
