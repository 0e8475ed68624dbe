"""Loading and resolution of the packaged YAML configuration."""

import copy
import logging
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

CONFIG_DIR = Path(__file__).resolve().parent
SCALES = ("desk", "full")
PIPELINE_SECTIONS = ("dynamics", "phi", "gp", "gate", "adjudication")

log = logging.getLogger(__name__)


def deep_merge(base: Dict[str, Any], override: Optional[Dict[str, Any]]) -> Dict[str, Any]:
    """Return base updated recursively with override; None values in override are skipped"""
    merged = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if value is None:
            continue
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


class ConfigLoader:
    def __init__(self, config_dir: Optional[Path] = None):
        self.config_dir = Path(config_dir) if config_dir else CONFIG_DIR

    def _load(self, filename: str) -> Dict[str, Any]:
        path = self.config_dir / filename
        try:
            with open(path, "r", encoding="utf-8") as f:
                return yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            log.error(f"Error loading config from {path}: {e}")
            raise RuntimeError(f"Failed to load config: {e}") from e

    def load_systems(self) -> Dict[str, Any]:
        return self._load("systems.yaml")

    def load_pipeline(self) -> Dict[str, Any]:
        return self.apply_defaults(self._load("pipeline.yaml"))

    def apply_defaults(self, config: Dict[str, Any]) -> Dict[str, Any]:
        config.setdefault("version", 1)
        config.setdefault("defaults", {})
        config.setdefault("scales", {})
        defaults = config["defaults"]
        defaults.setdefault("data_seed", 42)
        defaults.setdefault("restarts", 10)
        defaults.setdefault("gp_samples", 4096)
        defaults.setdefault("parametric", "auto")
        defaults.setdefault("jobs", 1)
        defaults.setdefault("verbose", False)
        for section in PIPELINE_SECTIONS:
            defaults.setdefault(section, {})
        for scale in SCALES:
            config["scales"].setdefault(scale, {})
        return config

    def validate_config(self, config: Dict[str, Any]) -> None:
        if not isinstance(config, dict):
            raise ValueError("Config must be a dictionary")

        for section in PIPELINE_SECTIONS:
            if not isinstance(config.get(section), dict):
                raise ValueError(f"Missing required {section} section")

        gate = config["gate"]
        if gate.get("tau", 0) <= 0:
            raise ValueError("gate.tau must be positive")
        if gate.get("rho_min", -1) < 0:
            raise ValueError("gate.rho_min must be non-negative")
        if int(config.get("restarts", 0)) < 1:
            raise ValueError("restarts must be at least 1")
        if config.get("parametric") not in ("auto", "on", "off"):
            raise ValueError("parametric must be one of auto, on, off")
        if config["phi"].get("max_epochs", 0) > 300:
            raise ValueError("phi.max_epochs must not exceed 300")
        for section in ("dynamics", "phi"):
            if config[section].get("schedule") not in ("one_cycle", "cosine"):
                raise ValueError(f"{section}.schedule must be one_cycle or cosine")

    def resolve(self, scale: str = "desk", overrides: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """Merge defaults, the scale section and explicit overrides into one config"""
        if scale not in SCALES:
            raise ValueError(f"Unknown scale: {scale}")
        pipeline = self.load_pipeline()
        resolved = deep_merge(pipeline["defaults"], pipeline["scales"][scale])
        resolved = deep_merge(resolved, overrides)
        resolved["scale"] = scale
        resolved.setdefault("n_traj", None)
        resolved.setdefault("T", None)
        self.validate_config(resolved)
        return resolved
