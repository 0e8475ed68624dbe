"""Command handlers package."""

from .audit_handler import AuditCommandHandler
from .base_handler import CommandHandler
from .discover_handler import DiscoverCommandHandler
from .experiment_handler import ExperimentCommandHandler
from .generate_handler import GenerateCommandHandler

__all__ = [
    "AuditCommandHandler",
    "CommandHandler",
    "DiscoverCommandHandler",
    "ExperimentCommandHandler",
    "GenerateCommandHandler",
]
