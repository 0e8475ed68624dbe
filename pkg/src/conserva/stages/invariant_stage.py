"""Invariant stage: multi-restart phi training and restart selection."""

import asyncio
from typing import Any, Dict

from ..dataset import Dataset
from ..neural.training import TrainConfig, train_phi_restarts
from .base_stage import BaseStage


class InvariantStage(BaseStage):
    def __init__(self, config: Dict[str, Any]):
        super().__init__("invariant", config)

    async def execute(self, dataset: Dataset, restarts: int, cfg: TrainConfig, seed: int,
                      jobs: int = 1) -> Dict[str, Any]:
        try:
            with self.timed():
                self.update_progress(1, 1, f"Training {restarts} phi restart(s)")
                results, best = await asyncio.to_thread(train_phi_restarts, dataset, restarts, cfg, seed, jobs)
            return self.success(
                restarts=results,
                best=best,
                restart_constancies=[r.val_constancy for r in results],
            )

        except Exception as e:
            return self.failure(e)
