"""Run metrics for one CLI invocation."""

from dataclasses import dataclass, field
from threading import Lock
from typing import Any, Dict, Optional

from eikolab.core.logging import get_logger

logger = get_logger()


@dataclass
class Metrics:
    """Counters collected during a run."""
    # Operation metrics
    total_operations: int = 0
    operations: Dict[str, int] = field(default_factory=dict)

    # Contract metrics
    contract_violations: int = 0
    validation_failures: int = 0

    # Performance metrics
    step_times_ms: Dict[str, float] = field(default_factory=dict)


class MetricsCollector:
    """Thread-safe metrics collector."""

    def __init__(self):
        self.metrics = Metrics()
        self.lock = Lock()

    def increment_operation(self, name: str):
        """Count one call of a numerical operation."""
        with self.lock:
            self.metrics.total_operations += 1
            self.metrics.operations[name] = self.metrics.operations.get(name, 0) + 1

    def increment_error(self, error_type: str):
        """Increment error counters."""
        with self.lock:
            if error_type == "contract":
                self.metrics.contract_violations += 1
            elif error_type == "validation":
                self.metrics.validation_failures += 1

    def record_step_time(self, step: str, duration_ms: float):
        """Accumulate wall time spent in a step."""
        with self.lock:
            self.metrics.step_times_ms[step] = self.metrics.step_times_ms.get(step, 0.0) + duration_ms

    def get_metrics(self) -> Dict[str, Any]:
        """Get current metrics as dictionary."""
        with self.lock:
            return {
                "operations": {
                    "total": self.metrics.total_operations,
                    "by_name": dict(sorted(self.metrics.operations.items())),
                },
                "errors": {
                    "contract": self.metrics.contract_violations,
                    "validation": self.metrics.validation_failures,
                },
                "steps_ms": {k: round(v, 2) for k, v in sorted(self.metrics.step_times_ms.items())},
            }

    def reset_metrics(self):
        """Reset all metrics."""
        with self.lock:
            self.metrics = Metrics()
            logger.debug("Metrics reset")


# Global metrics collector instance
_metrics_collector: Optional[MetricsCollector] = None


def get_metrics_collector() -> MetricsCollector:
    """Get the global metrics collector instance."""
    global _metrics_collector
    if _metrics_collector is None:
        _metrics_collector = MetricsCollector()
    return _metrics_collector
