"""Extraction stage: turn the training data and the selected phi into symbolic candidates."""

import asyncio
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..dataset import Dataset
from ..errors import DegenerateLibraryError
from ..extract.candidate import Candidate
from ..extract.gp import GpConfig, gp_symreg
from ..extract.lasso import explicit_pde_candidates, lv_lasso, poly_lasso, positive_trajectories
from ..extract.sampling import sample_phi_pairs
from .base_stage import BaseStage

PARAMETRIC_MODES = ("auto", "on", "off")


def parametric_params(dataset: Dataset, mode: str = "auto") -> Tuple[str, ...]:
    """Parameters that enter the library as g(theta) * b(x) products"""
    if mode not in PARAMETRIC_MODES:
        raise ValueError(f"parametric must be one of {PARAMETRIC_MODES}, got {mode}")
    if mode == "off":
        return ()
    if mode == "on":
        return dataset.system.varying_params
    train = np.asarray(dataset.split_params("train"))
    return tuple(name for j, name in enumerate(dataset.param_names)
                 if train.shape[0] and np.ptp(train[:, j]) > 0)


class ExtractionStage(BaseStage):
    """Runs the linear-library solvers, the explicit PDE candidate and GP"""

    def __init__(self, config: Dict[str, Any]):
        super().__init__("extraction", config)

    def lasso_candidates(self, dataset: Dataset, use_poly_lasso: bool, use_lv_lasso: bool,
                         params: Sequence[str]) -> List[Candidate]:
        train = dataset.split("train")
        sigma = float(dataset.noise_sigma or 0.0)
        found: List[Candidate] = []
        if use_poly_lasso:
            try:
                found.append(poly_lasso(train, parametric_params=params, noise_sigma=sigma))
            except DegenerateLibraryError as e:
                self.log.warning(f"poly_lasso skipped: {e}")
        if use_lv_lasso and dataset.system.name == "lotka_volterra":
            positive = positive_trajectories(train)
            if len(positive) < 2:
                self.log.warning("lv_lasso skipped: fewer than two strictly positive trajectories")
            else:
                if len(positive) < len(train):
                    self.log.info(f"lv_lasso uses {len(positive)} of {len(train)} positive trajectories")
                try:
                    found.append(lv_lasso(positive, parametric_params=params, noise_sigma=sigma))
                except DegenerateLibraryError as e:
                    self.log.warning(f"lv_lasso skipped: {e}")
        return found

    def gp_candidates(self, dataset: Dataset, phi_model, gp_config: GpConfig, n_samples: int,
                      seed: int) -> List[Candidate]:
        total = len(dataset.splits["train"]) * dataset.states.shape[1]
        samples = sample_phi_pairs(phi_model, dataset, min(n_samples, total), seed)
        front = gp_symreg(samples.states, samples.values, gp_config)
        return [Candidate(expression=e.expression, source="gp", fit_mse=e.mse) for e in front]

    async def execute(self, dataset: Dataset, phi_model=None, seed: int = 0,
                      use_poly_lasso: bool = True, use_lv_lasso: bool = True, use_gp: bool = True,
                      parametric: str = "auto", gp_config: Optional[GpConfig] = None,
                      gp_samples: int = 4096) -> Dict[str, Any]:
        """Execute extraction tasks"""
        try:
            candidates: List[Candidate] = []
            with self.timed():
                params = parametric_params(dataset, parametric)
                if params:
                    self.log.info(f"Parameter-aware libraries over {', '.join(params)}")

                self.update_progress(1, 3, "Solving library eigenproblems")
                candidates.extend(await asyncio.to_thread(
                    self.lasso_candidates, dataset, use_poly_lasso, use_lv_lasso, params))

                self.update_progress(2, 3, "Adding explicit candidates")
                if dataset.system.is_pde:
                    candidates.extend(explicit_pde_candidates(dataset.system))

                self.update_progress(3, 3, "Running symbolic regression")
                if use_gp and phi_model is not None:
                    cfg = gp_config or GpConfig(seed=seed)
                    candidates.extend(await asyncio.to_thread(
                        self.gp_candidates, dataset, phi_model, cfg, gp_samples, seed))

            for k, cand in enumerate(candidates):
                cand.cid = f"{dataset.system.name}-{k:03d}-{cand.source}"
            return self.success(candidates=candidates, parametric_params=list(params))

        except Exception as e:
            return self.failure(e)
