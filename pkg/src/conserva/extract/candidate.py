"""Candidate conservation laws and their gate / verdict bookkeeping."""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from .expression import Node, complexity, to_infix, to_prefix

SOURCES = ("poly_lasso", "lv_lasso", "explicit", "gp")
TRUE_DISCOVERY = "true_discovery"
SPURIOUS = "spurious"


def _num(value: Optional[float]) -> Optional[float]:
    if value is None:
        return None
    value = float(value)
    return value if np.isfinite(value) else None


@dataclass
class Candidate:
    expression: Node
    source: str
    cid: str = ""
    basis_tag: Optional[str] = None
    basis_labels: List[str] = field(default_factory=list)
    weights: Optional[np.ndarray] = None
    lambda_min: Optional[float] = None
    fit_mse: Optional[float] = None
    test_constancy: Optional[float] = None
    diversity_rho: Optional[float] = None
    invalid_fraction: Optional[float] = None
    accepted: bool = False
    reason: str = ""
    verdict: Optional[str] = None
    rank_correlation: Optional[float] = None

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"Unknown candidate source: {self.source}")

    @property
    def complexity(self) -> int:
        return complexity(self.expression)

    @property
    def prefix(self) -> str:
        return to_prefix(self.expression)

    def to_record(self) -> Dict[str, Any]:
        """JSON-ready verdict record"""
        return {
            "id": self.cid,
            "source": self.source,
            "expression": self.prefix,
            "infix": to_infix(self.expression),
            "complexity": self.complexity,
            "basis_tag": self.basis_tag,
            "weights": None if self.weights is None else [float(w) for w in self.weights],
            "lambda_min": _num(self.lambda_min),
            "fit_mse": _num(self.fit_mse),
            "test_constancy": _num(self.test_constancy),
            "diversity_rho": _num(self.diversity_rho),
            "invalid_fraction": _num(self.invalid_fraction),
            "accepted": bool(self.accepted),
            "reason": self.reason,
            "verdict": self.verdict,
            "rank_correlation": _num(self.rank_correlation),
        }
