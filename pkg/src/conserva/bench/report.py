"""Run reports and the files written for them."""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
REPORT_FILE = "report.json"
TIMINGS_FILE = "timings.csv"
CANDIDATES_FILE = "candidates.csv"
LAWS_FILE = "laws.txt"


def _clean(value: Any) -> Any:
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats to None"""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_clean(v) for v in value.tolist()]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if np.isfinite(value) else None
    return value


@dataclass
class RunReport:
    system: str
    seed: int
    scale: str = "desk"
    variant: str = "full"
    noise_sigma: float = 0.0
    train_size: Optional[int] = None
    restarts: int = 1
    selected_restart: Optional[int] = None
    restart_constancies: List[float] = field(default_factory=list)
    candidates: List[Dict[str, Any]] = field(default_factory=list)
    accepted_laws: List[str] = field(default_factory=list)
    metrics: Dict[str, Any] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def to_record(self, include_timings: bool = False) -> Dict[str, Any]:
        record = {
            "schema_version": self.schema_version,
            "system": self.system,
            "seed": self.seed,
            "scale": self.scale,
            "variant": self.variant,
            "noise_sigma": self.noise_sigma,
            "train_size": self.train_size,
            "restarts": self.restarts,
            "selected_restart": self.selected_restart,
            "restart_constancies": self.restart_constancies,
            "candidates": self.candidates,
            "accepted_laws": self.accepted_laws,
            "metrics": self.metrics,
        }
        if include_timings:
            record["timings"] = self.timings
        return _clean(record)

    def to_json(self) -> str:
        """Byte-stable JSON without wall-clock timings"""
        return json.dumps(self.to_record(), sort_keys=True, indent=2) + "\n"

    def timings_frame(self) -> pd.DataFrame:
        rows = [{"system": self.system, "seed": self.seed, "stage": stage, "seconds": seconds}
                for stage, seconds in self.timings.items()]
        return pd.DataFrame(rows, columns=["system", "seed", "stage", "seconds"])

    def candidates_frame(self) -> pd.DataFrame:
        columns = ["id", "source", "complexity", "test_constancy", "diversity_rho",
                   "invalid_fraction", "accepted", "reason", "verdict", "rank_correlation", "expression"]
        return pd.DataFrame([{c: rec.get(c) for c in columns} for rec in self.candidates], columns=columns)

    def write(self, out_dir: Union[str, Path]) -> Dict[str, Path]:
        """Write report.json, timings.csv, candidates.csv and laws.txt into out_dir"""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = {
            "report": out_dir / REPORT_FILE,
            "timings": out_dir / TIMINGS_FILE,
            "candidates": out_dir / CANDIDATES_FILE,
            "laws": out_dir / LAWS_FILE,
        }
        paths["report"].write_text(self.to_json(), encoding="utf-8")
        self.timings_frame().to_csv(paths["timings"], index=False)
        self.candidates_frame().to_csv(paths["candidates"], index=False)
        paths["laws"].write_text("".join(f"{law}\n" for law in self.accepted_laws), encoding="utf-8")
        log.info(f"Wrote {self.system} seed {self.seed} report to {out_dir}")
        return paths

    @classmethod
    def from_record(cls, record: Dict[str, Any]) -> "RunReport":
        if record.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {record.get('schema_version')}")
        known = {k: v for k, v in record.items() if k in cls.__dataclass_fields__}
        return cls(**known)

    @classmethod
    def read(cls, path: Union[str, Path]) -> "RunReport":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_record(json.load(f))
