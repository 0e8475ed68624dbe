"""Shared plumbing of the command handlers."""

import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, List

import yaml

from ...dataset import MANIFEST
from ...pipeline import PipelineOptions, options_for, resolve_output_root
from ...systems import list_systems
from ..formatters import OutputFormatter

RESOLVED_CONFIG = "resolved_config.yaml"


class CommandHandler(ABC):
    """Base class for command handlers"""

    def __init__(self):
        self.formatter = OutputFormatter()
        self.log = logging.getLogger(f"conserva.cli.{type(self).__name__}")

    @abstractmethod
    async def handle(self, args: Dict[str, Any]) -> None:
        ...

    @staticmethod
    def output_root(args: Dict[str, Any]) -> Path:
        return resolve_output_root(args.get("output_dir"))

    @staticmethod
    def dataset_root(args: Dict[str, Any]) -> Path:
        if args.get("dataset_dir"):
            return Path(args["dataset_dir"])
        return CommandHandler.output_root(args) / "datasets"

    @staticmethod
    def selected_systems(args: Dict[str, Any]) -> List[str]:
        """--system, --systems or --all; nothing selected means every system"""
        known = list_systems()
        if args.get("system"):
            return [args["system"]]
        if args.get("systems"):
            unknown = [s for s in args["systems"] if s not in known]
            if unknown:
                raise ValueError(f"Unknown system(s): {', '.join(unknown)}")
            return list(dict.fromkeys(args["systems"]))
        return known

    @staticmethod
    def single_system(args: Dict[str, Any]) -> str:
        systems = CommandHandler.selected_systems(args)
        if args.get("all") or len(systems) != 1:
            raise ValueError("this command needs exactly one system (--system NAME)")
        return systems[0]

    @staticmethod
    def seeds(args: Dict[str, Any]) -> List[int]:
        if args.get("seeds"):
            return list(dict.fromkeys(args["seeds"]))
        return [args["seed"] if args.get("seed") is not None else 0]

    def options(self, args: Dict[str, Any], generate_missing: bool = True) -> PipelineOptions:
        """Pipeline options resolved from the scale plus command-line overrides"""
        return options_for(
            args.get("scale", "desk"),
            tau=args.get("tau"),
            rho_min=args.get("rho_min"),
            restarts=args.get("restarts"),
            jobs=args.get("jobs"),
            data_seed=args.get("data_seed"),
            verbose=args.get("verbose") or None,
            data_root=self.dataset_root(args),
            generate_missing=generate_missing,
        )

    def write_resolved_config(self, out_dir: Path, config: Dict[str, Any]) -> Path:
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / RESOLVED_CONFIG
        with open(path, "w", encoding="utf-8") as f:
            yaml.safe_dump(config, f, sort_keys=True)
        self.log.debug(f"Wrote {path}")
        return path


def find_datasets(root: Path) -> List[Path]:
    """Dataset directories directly under root, sorted by name"""
    if not root.is_dir():
        return []
    return sorted(p for p in root.iterdir() if (p / MANIFEST).is_file())

