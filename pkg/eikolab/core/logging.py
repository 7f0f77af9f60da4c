"""Structured logging with run ID support."""

import sys
import uuid
from typing import Any, Dict, Optional

from loguru import logger

from .config import get_settings


class StructuredLogger:
    """Structured logger bound to the run ID of the current invocation."""

    def __init__(self):
        self.settings = get_settings()
        self.run_id = str(uuid.uuid4())
        self._setup_logger()

    def _setup_logger(self):
        """Configure loguru logger."""
        # Remove default handler
        logger.remove()

        # stdout stays free for --print-config and piped reports
        if self.settings.log_format == "json":
            logger.add(sys.stderr, level=self.settings.log_level, serialize=True)
        else:
            logger.add(
                sys.stderr,
                format="<green>{time:HH:mm:ss}</green> | <level>{level: <5}</level> | <level>{message}</level>",
                level=self.settings.log_level,
            )

    def new_run(self) -> str:
        """Start a new run and return its ID."""
        self.run_id = str(uuid.uuid4())
        return self.run_id

    def log_with_run(
        self,
        level: str,
        message: str,
        run_id: Optional[str] = None,
        **kwargs: Any,
    ):
        """Log message with run ID and additional context."""
        extra: Dict[str, Any] = {"run_id": run_id or self.run_id, **kwargs}
        if kwargs and self.settings.log_format != "json":
            message = f"{message} | " + " | ".join(f"{k}={v}" for k, v in kwargs.items())
        logger.bind(**extra).log(level.upper(), message)

    def info(self, message: str, run_id: Optional[str] = None, **kwargs: Any):
        self.log_with_run("INFO", message, run_id, **kwargs)

    def error(self, message: str, run_id: Optional[str] = None, **kwargs: Any):
        self.log_with_run("ERROR", message, run_id, **kwargs)

    def warning(self, message: str, run_id: Optional[str] = None, **kwargs: Any):
        self.log_with_run("WARNING", message, run_id, **kwargs)

    def debug(self, message: str, run_id: Optional[str] = None, **kwargs: Any):
        self.log_with_run("DEBUG", message, run_id, **kwargs)

    # Convenience structured logs for steps
    def step(self, message: str, run_id: Optional[str] = None, duration_ms: Optional[float] = None, **kwargs: Any):
        """Log a processing step with optional duration."""
        if duration_ms is not None:
            kwargs["duration_ms"] = round(duration_ms, 2)
        self.log_with_run("INFO", f"STEP | {message}", run_id, **kwargs)

    def event(self, message: str, run_id: Optional[str] = None, **kwargs: Any):
        self.log_with_run("INFO", f"EVENT | {message}", run_id, **kwargs)

    def data(self, message: str, run_id: Optional[str] = None, **kwargs: Any):
        self.log_with_run("DEBUG", f"DATA | {message}", run_id, **kwargs)

    def timing(self, operation: str, duration_ms: float, run_id: Optional[str] = None, **kwargs: Any):
        """Log timing information for operations."""
        self.log_with_run("INFO", f"TIMING | {operation}", run_id, duration_ms=round(duration_ms, 2), **kwargs)


# Global logger instance
structured_logger = StructuredLogger()


def get_logger() -> StructuredLogger:
    """Get the global structured logger instance."""
    return structured_logger
