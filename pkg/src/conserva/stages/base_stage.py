"""Base stage class with common functionality."""

import logging
import time
from contextlib import contextmanager
from datetime import datetime, timezone
from typing import Any, Dict, Iterator


class BaseStage:
    """Base class for all pipeline stages"""

    def __init__(self, name: str, config: Dict[str, Any]):
        self.name = name
        self.config = config if isinstance(config, dict) else {}
        self.progress_tracker = {
            "current_step": 0,
            "total_steps": 0,
            "status": ""
        }
        self.seconds = 0.0
        self.log = logging.getLogger(f"conserva.stages.{name}")

    def update_progress(self, current: int, total: int, status: str) -> None:
        """Update progress tracker"""
        self.progress_tracker["current_step"] = current
        self.progress_tracker["total_steps"] = total
        self.progress_tracker["status"] = status

        if self.config.get("verbose", False):
            self.log.info(f"Progress: {current}/{total} - {status}")

    @contextmanager
    def timed(self) -> Iterator[None]:
        """Accumulate wall-clock seconds on a monotonic clock"""
        start = time.perf_counter()
        try:
            yield
        finally:
            self.seconds += time.perf_counter() - start

    def success(self, **payload: Any) -> Dict[str, Any]:
        return {
            "status": "success",
            **payload,
            "seconds": self.seconds,
            "timestamp": datetime.now(timezone.utc).isoformat()
        }

    def failure(self, error: Exception) -> Dict[str, Any]:
        self.log.error(f"Error executing {self.name} stage: {str(error)}")
        return {
            "status": "error",
            "error": str(error),
            "error_type": type(error).__name__,
            "timestamp": datetime.now(timezone.utc).isoformat()
        }

    def cleanup(self) -> None:
        """Reset progress and timing"""
        if self.config.get("verbose", False):
            self.log.info(f"Cleaning up {self.name} stage")

        self.progress_tracker = {
            "current_step": 0,
            "total_steps": 0,
            "status": ""
        }
        self.seconds = 0.0
