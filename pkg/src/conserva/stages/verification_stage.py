"""Verification stage: gate every candidate on the test split and adjudicate the survivors."""

import asyncio
from typing import Any, Dict, List, Optional, Tuple

from ..dataset import Dataset
from ..extract.candidate import Candidate
from ..verify import GateConfig, adjudicate, apply_gate
from .base_stage import BaseStage


class VerificationStage(BaseStage):
    def __init__(self, config: Dict[str, Any]):
        super().__init__("verification", config)

    def verify(self, candidates: List[Candidate], dataset: Dataset, gate: GateConfig,
               min_rank_correlation: float, jobs: int) -> Tuple[List[Candidate], List[str]]:
        """Gate and adjudicate on the test split of dataset"""
        test = dataset.split("test")
        accepted = apply_gate(candidates, test, gate, jobs=jobs)
        verdicts = adjudicate(accepted, dataset.system, test, min_rank_correlation)
        return accepted, verdicts

    async def execute(self, candidates: List[Candidate], dataset: Dataset, gate: GateConfig,
                      min_rank_correlation: float = 0.95, jobs: int = 1,
                      reference: Optional[Dataset] = None) -> Dict[str, Any]:
        """Execute verification tasks; reference, when given, supplies the test split instead of dataset"""
        try:
            with self.timed():
                self.update_progress(1, 1, f"Gating {len(candidates)} candidates")
                accepted, verdicts = await asyncio.to_thread(
                    self.verify, candidates, reference if reference is not None else dataset,
                    gate, min_rank_correlation, jobs)
            return self.success(accepted=accepted, verdicts=verdicts)

        except Exception as e:
            return self.failure(e)
