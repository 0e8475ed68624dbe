"""Dynamics stage: fit the one-step model used for MSE reporting."""

import asyncio
from typing import Any, Dict

from ..dataset import Dataset
from ..neural.training import TrainConfig, train_dynamics
from .base_stage import BaseStage


class DynamicsStage(BaseStage):
    def __init__(self, config: Dict[str, Any]):
        super().__init__("dynamics", config)

    async def execute(self, dataset: Dataset, cfg: TrainConfig, seed: int) -> Dict[str, Any]:
        try:
            with self.timed():
                self.update_progress(1, 1, f"Training dynamics model for {dataset.system.name}")
                result = await asyncio.to_thread(train_dynamics, dataset, cfg, seed)
            return self.success(result=result, val_mse=result.val_mse, mse_at_16=result.mse_at_16)

        except Exception as e:
            return self.failure(e)
