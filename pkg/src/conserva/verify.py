"""Constancy, the acceptance gate, diversity filtering and adjudication."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .dataset import Trajectory
from .extract.candidate import SPURIOUS, TRUE_DISCOVERY, Candidate
from .extract.expression import Node, evaluate
from .systems import SystemSpec, get_system, true_invariant

log = logging.getLogger(__name__)

EPS = 1e-8


@dataclass(frozen=True)
class GateConfig:
    tau: float = 0.01
    rho_min: float = 10.0
    eps: float = EPS
    max_invalid_fraction: float = 0.01
    max_complexity: Optional[int] = None

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.rho_min < 0:
            raise ValueError(f"rho_min must be non-negative, got {self.rho_min}")

    @classmethod
    def from_dict(cls, config: Mapping[str, Any], max_complexity: Optional[int] = None) -> "GateConfig":
        return cls(
            tau=float(config.get("tau", 0.01)),
            rho_min=float(config.get("rho_min", 10.0)),
            eps=float(config.get("eps", EPS)),
            max_invalid_fraction=float(config.get("max_invalid_fraction", 0.01)),
            max_complexity=max_complexity,
        )


def _series_list(values_per_trajectory) -> List[np.ndarray]:
    series = [np.asarray(v, dtype=np.float64).ravel() for v in values_per_trajectory]
    if not series:
        raise ValueError("need at least one series")
    return series


def constancy(values_per_trajectory: Sequence[np.ndarray], eps: float = EPS) -> float:
    """Mean over trajectories of std / (|mean| + eps), population std"""
    series = _series_list(values_per_trajectory)
    if any(len(s) < 2 for s in series):
        raise ValueError("each series needs at least two values")
    return float(np.mean([s.std() / (abs(s.mean()) + eps) for s in series]))


def diversity_rho(values_per_trajectory: Sequence[np.ndarray], eps: float = EPS) -> float:
    """Spread of per-trajectory means over the typical within-trajectory std"""
    series = _series_list(values_per_trajectory)
    if len(series) < 2:
        raise ValueError("diversity needs at least two trajectories")
    means = np.array([s.mean() for s in series])
    stds = np.array([s.std() for s in series])
    return float(means.std() / (stds.mean() + eps))


def evaluate_on_trajectories(expression: Node, trajs: Sequence[Trajectory]) -> Tuple[List[np.ndarray], float]:
    """Per-trajectory series and the fraction of invalid points.

    State columns bind to x1..xD; parameter names bind to the trajectory's values.
    """
    series, bad, total = [], 0, 0
    for traj in trajs:
        states = np.asarray(traj.states, dtype=np.float64)
        T = states.shape[0]
        env = {f"x{j + 1}": states[:, j] for j in range(states.shape[1])}
        env.update({name: np.full(T, float(v)) for name, v in traj.params.items()})
        values, valid = evaluate(expression, env)
        bad += int((~valid).sum())
        total += T
        series.append(values[valid] if not valid.all() else values)
    return series, bad / max(total, 1)


def _judge(cand: Candidate, trajs: Sequence[Trajectory], cfg: GateConfig) -> Candidate:
    if cfg.max_complexity is not None and cand.complexity > cfg.max_complexity:
        cand.accepted = False
        cand.reason = f"complexity {cand.complexity} exceeds cap {cfg.max_complexity}"
        return cand

    series, invalid = evaluate_on_trajectories(cand.expression, trajs)
    cand.invalid_fraction = invalid
    if invalid > cfg.max_invalid_fraction:
        cand.accepted = False
        cand.reason = f"invalid evaluation on {invalid:.1%} of test points"
        return cand
    series = [s for s in series if len(s) >= 2]
    if len(series) < 2:
        cand.accepted = False
        cand.reason = "too few valid test trajectories"
        return cand

    cand.test_constancy = constancy(series, cfg.eps)
    cand.diversity_rho = diversity_rho(series, cfg.eps)
    if not cand.test_constancy < cfg.tau:
        cand.accepted, cand.reason = False, f"constancy {cand.test_constancy:.3g} >= tau {cfg.tau}"
    elif not cand.diversity_rho >= cfg.rho_min:
        cand.accepted, cand.reason = False, f"diversity rho {cand.diversity_rho:.3g} < {cfg.rho_min}"
    else:
        cand.accepted, cand.reason = True, "accepted"
    return cand


def apply_gate(cands: Sequence[Candidate], test_trajs: Sequence[Trajectory],
               cfg: Optional[GateConfig] = None, jobs: int = 1) -> List[Candidate]:
    """Evaluate every candidate on the test split; return the accepted ones in input order"""
    cfg = cfg or GateConfig()
    if jobs > 1 and len(cands) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(lambda c: _judge(c, test_trajs, cfg), cands))
    else:
        for cand in cands:
            _judge(cand, test_trajs, cfg)
    for cand in cands:
        log.debug(f"{cand.cid or cand.source}: {cand.reason}")
    accepted = [c for c in cands if c.accepted]
    log.info(f"Gate accepted {len(accepted)} of {len(cands)} candidates")
    return accepted


def rank_correlation(a: Sequence[float], b: Sequence[float]) -> float:
    """Spearman correlation with average ranks for ties; nan when either side is constant"""
    ra = pd.Series(np.asarray(a, dtype=np.float64)).rank().to_numpy()
    rb = pd.Series(np.asarray(b, dtype=np.float64)).rank().to_numpy()
    if ra.std() == 0 or rb.std() == 0:
        return float("nan")
    return float(np.corrcoef(ra, rb)[0, 1])


def adjudicate(accepted: Sequence[Candidate], system: Union[str, SystemSpec], test_trajs: Sequence[Trajectory],
               min_rank_correlation: float = 0.95) -> List[str]:
    """Mark each accepted candidate as a true discovery or spurious"""
    spec = get_system(system) if isinstance(system, str) else system
    verdicts = []
    if not spec.has_true_law:
        for cand in accepted:
            cand.verdict = SPURIOUS
            verdicts.append(SPURIOUS)
        return verdicts

    truth = [float(np.mean(true_invariant(spec.name, np.asarray(t.states, dtype=np.float64), t.params)))
             for t in test_trajs]
    for cand in accepted:
        series, _ = evaluate_on_trajectories(cand.expression, test_trajs)
        levels = [float(np.mean(s)) if len(s) else np.nan for s in series]
        keep = [i for i, v in enumerate(levels) if np.isfinite(v)]
        rs = rank_correlation([levels[i] for i in keep], [truth[i] for i in keep]) if len(keep) >= 2 else np.nan
        cand.rank_correlation = rs
        cand.verdict = TRUE_DISCOVERY if np.isfinite(rs) and abs(rs) >= min_rank_correlation else SPURIOUS
        verdicts.append(cand.verdict)
    return verdicts


def ground_truth_constancy(spec: SystemSpec, trajs: Sequence[Trajectory], eps: float = EPS) -> Optional[float]:
    """Constancy of the closed-form invariant on trajs; None for systems without one"""
    if not spec.has_true_law:
        return None
    series = [true_invariant(spec.name, np.asarray(t.states, dtype=np.float64), t.params) for t in trajs]
    return constancy(series, eps)


# Analysis helpers

def restart_success_probability(p: float, restarts: int) -> float:
    """Chance that at least one of R independent restarts succeeds"""
    if not 0.0 <= p <= 1.0 or restarts < 1:
        raise ValueError("need 0 <= p <= 1 and at least one restart")
    return 1.0 - (1.0 - p) ** restarts


def chebyshev_false_positive_bound(sigma_inter: float, tau: float, delta: float) -> float:
    """Upper bound on P(rho > tau) for a null candidate with intra-trajectory std >= delta"""
    if tau <= 0 or delta <= 0:
        raise ValueError("tau and delta must be positive")
    return min(1.0, sigma_inter / (tau * delta))


def noise_growth_exponent(sigmas: Sequence[float], variances: Sequence[float]) -> float:
    """Least-squares slope of log variance against log sigma"""
    sigmas = np.asarray(sigmas, dtype=np.float64)
    variances = np.asarray(variances, dtype=np.float64)
    if len(sigmas) < 2 or len(sigmas) != len(variances):
        raise ValueError("need at least two matching (sigma, variance) points")
    if np.any(sigmas <= 0) or np.any(variances <= 0):
        raise ValueError("sigmas and variances must be positive")
    slope, _ = np.polyfit(np.log(sigmas), np.log(variances), 1)
    return float(slope)
