"""Main CLI application class."""

import asyncio
import logging
import sys
from typing import Optional, Sequence

from dotenv import find_dotenv, load_dotenv

from .formatters import OutputFormatter
from .handlers import (
    AuditCommandHandler,
    DiscoverCommandHandler,
    ExperimentCommandHandler,
    GenerateCommandHandler
)
from .parser import ArgumentParser


class ConservaCLI:
    """Command-line interface for the discovery pipeline"""

    def __init__(self):
        self.formatter = OutputFormatter()
        self.log = logging.getLogger("conserva.cli")
        self._load_environment()

        self.handlers = {
            "generate": GenerateCommandHandler(),
            "discover": DiscoverCommandHandler(),
            "experiment": ExperimentCommandHandler(),
            "audit": AuditCommandHandler(),
        }

    def _load_environment(self) -> None:
        """Load environment variables from the nearest .env file"""
        env_path = find_dotenv(usecwd=True)
        if env_path:
            load_dotenv(env_path)
            self.log.debug(f"Loaded environment from {env_path}")
        else:
            self.log.debug("No .env file found")

    def execute(self, argv: Optional[Sequence[str]] = None) -> None:
        """Execute CLI command; exits with code 1 on any failure"""
        try:
            args = ArgumentParser.parse_args(argv)
        except SystemExit as e:
            if e.code not in (0, None):
                raise SystemExit(1)
            raise

        if args.get("verbose", False):
            logging.getLogger().setLevel(logging.DEBUG)
            self.log.debug("Verbose logging enabled")

        command = args.get("command")
        if not command:
            ArgumentParser.create_parser().print_help()
            return

        try:
            asyncio.run(self.handlers[command].handle(args))
        except KeyboardInterrupt:
            print("\nOperation cancelled by user")
            raise SystemExit(1)
        except Exception as e:
            self.log.error(f"Error executing {command}: {e}")
            print(self.formatter.format_error(str(e)))
            print(self.formatter.format_error_record(command, e), file=sys.stderr)
            raise SystemExit(1)
