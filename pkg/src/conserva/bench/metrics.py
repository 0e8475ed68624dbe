"""Discovery metrics, aggregation over seeds, and Pareto frontiers."""

from typing import Any, Dict, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..extract.candidate import SPURIOUS, TRUE_DISCOVERY, Candidate

METRIC_NAMES = ("dr", "fdr", "f1", "best_constancy", "val_mse", "mse_at_16")


def f1_score(dr: float, fdr: float) -> float:
    """Harmonic mean of precision (1 - FDR) and recall (DR); 0 when both vanish"""
    precision = 1.0 - fdr
    if precision + dr == 0:
        return 0.0
    return 2.0 * precision * dr / (precision + dr)


def discovery_metrics(verdicts: Sequence[str], has_true_law: bool) -> Dict[str, float]:
    """DR, FDR and F1 of one run from the verdicts of its accepted candidates"""
    accepted = len(verdicts)
    true = sum(v == TRUE_DISCOVERY for v in verdicts)
    spurious = sum(v == SPURIOUS for v in verdicts)
    dr = 1.0 if has_true_law and true > 0 else 0.0
    fdr = spurious / accepted if accepted else 0.0
    return {
        "dr": dr,
        "fdr": fdr,
        "f1": f1_score(dr, fdr),
        "accepted": accepted,
        "true_discoveries": true,
    }


def compute_metrics(reports: Sequence[Any], metrics: Sequence[str] = METRIC_NAMES) -> pd.DataFrame:
    """Mean and population std of each metric over runs (std 0 for a single run)"""
    if not reports:
        raise ValueError("need at least one report")
    rows = []
    for name in metrics:
        values = np.array([np.nan if r.metrics.get(name) is None else r.metrics[name] for r in reports], dtype=float)
        finite = values[np.isfinite(values)]
        rows.append({
            "metric": name,
            "mean": float(finite.mean()) if len(finite) else np.nan,
            "std": float(finite.std()) if len(finite) >= 2 else 0.0,
            "n": int(len(finite)),
        })
    return pd.DataFrame(rows, columns=["metric", "mean", "std", "n"])


def format_metric(mean: float, std: float) -> str:
    return f"{mean:.2f} ± {std:.2f}"


Point = Union[Candidate, Tuple[float, int]]


def _coords(point: Point) -> Tuple[float, int]:
    if isinstance(point, Candidate):
        return float(point.test_constancy), point.complexity
    return float(point[0]), int(point[1])


def pareto_frontier(points: Sequence[Point]) -> List[Point]:
    """Members not dominated in (constancy, complexity), sorted by complexity; equal points all stay"""
    coords = [_coords(p) for p in points]
    front = []
    for i, (c_i, k_i) in enumerate(coords):
        dominated = any(
            c_j <= c_i and k_j <= k_i and (c_j < c_i or k_j < k_i)
            for j, (c_j, k_j) in enumerate(coords) if j != i
        )
        if not dominated:
            front.append(i)
    front.sort(key=lambda i: (coords[i][1], coords[i][0], i))
    return [points[i] for i in front]
