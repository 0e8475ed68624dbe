"""Packaged configuration."""

from .config_loader import CONFIG_DIR, SCALES, ConfigLoader, deep_merge

__all__ = ["CONFIG_DIR", "SCALES", "ConfigLoader", "deep_merge"]
