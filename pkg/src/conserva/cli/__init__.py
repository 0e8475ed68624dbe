"""Command-line interface package."""

from .app import ConservaCLI
from .formatters import OutputFormatter
from .handlers import (
    AuditCommandHandler,
    DiscoverCommandHandler,
    ExperimentCommandHandler,
    GenerateCommandHandler
)
from .parser import ArgumentParser

__all__ = [
    "ArgumentParser",
    "AuditCommandHandler",
    "ConservaCLI",
    "DiscoverCommandHandler",
    "ExperimentCommandHandler",
    "GenerateCommandHandler",
    "OutputFormatter",
]
