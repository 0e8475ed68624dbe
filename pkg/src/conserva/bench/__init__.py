"""Benchmark reports, metrics and experiment suites.

The suites live in `conserva.bench.suites`; they import the pipeline, so they
are not imported here.
"""

from .metrics import compute_metrics, discovery_metrics, f1_score, pareto_frontier
from .report import SCHEMA_VERSION, RunReport

__all__ = [
    "RunReport",
    "SCHEMA_VERSION",
    "compute_metrics",
    "discovery_metrics",
    "f1_score",
    "pareto_frontier",
]
