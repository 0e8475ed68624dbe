"""Domain exceptions."""

from typing import Any, Dict, Optional


class ConservaError(Exception):
    """Base class for all package errors"""


class IntegrationError(ConservaError, RuntimeError):
    """A trajectory could not be integrated (step underflow or non-finite state)"""

    def __init__(self, message: str, traj_id: Optional[int] = None):
        self.traj_id = traj_id
        if traj_id is not None:
            message = f"trajectory {traj_id}: {message}"
        super().__init__(message)


class DatasetFormatError(ConservaError, ValueError):
    """A stored dataset or checkpoint is unreadable"""


class TrainingDivergedError(ConservaError, RuntimeError):
    """Loss became non-finite during training"""

    def __init__(self, message: str, epoch: int, diagnostics: Optional[Dict[str, Any]] = None):
        self.epoch = epoch
        self.diagnostics = diagnostics or {}
        super().__init__(f"{message} (epoch {epoch}, {self.diagnostics})")


class DegenerateLibraryError(ConservaError, ValueError):
    """Feature covariance is identically zero"""


class StageError(ConservaError, RuntimeError):
    """A pipeline stage failed"""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")
