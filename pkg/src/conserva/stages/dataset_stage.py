"""Dataset stage: load or simulate a benchmark dataset and apply perturbations."""

import asyncio
from pathlib import Path
from typing import Any, Dict, Optional, Union

from ..dataset import Dataset, add_noise, load_or_generate, subsample_train
from ..systems import SystemSpec
from .base_stage import BaseStage


class DatasetStage(BaseStage):
    """Provides the trajectories every later stage works on"""

    def __init__(self, config: Dict[str, Any]):
        super().__init__("dataset", config)

    def prepare(self, spec: SystemSpec, seed: int, root: Optional[Union[str, Path]] = None,
                scale: str = "desk", jobs: int = 1, generate_missing: bool = True) -> Dataset:
        return load_or_generate(spec, seed, root, scale, jobs, generate_missing=generate_missing)

    async def execute(self, spec: SystemSpec, seed: int, root: Optional[Union[str, Path]] = None,
                      scale: str = "desk", jobs: int = 1, noise_sigma: float = 0.0, noise_seed: int = 0,
                      train_size: Optional[int] = None, generate_missing: bool = True) -> Dict[str, Any]:
        """Execute dataset tasks"""
        try:
            with self.timed():
                self.update_progress(1, 3, f"Preparing {spec.name} dataset")
                clean = await asyncio.to_thread(self.prepare, spec, seed, root, scale, jobs, generate_missing)

                self.update_progress(2, 3, f"Applying noise sigma={noise_sigma}")
                ds = clean
                if noise_sigma > 0:
                    ds = await asyncio.to_thread(add_noise, clean, noise_sigma, noise_seed)

                self.update_progress(3, 3, "Selecting training trajectories")
                if train_size is not None:
                    ds = subsample_train(ds, train_size)

            # candidates are judged on the noise-free test split
            return self.success(dataset=ds, reference=clean, split_sizes=ds.split_sizes())

        except Exception as e:
            return self.failure(e)
