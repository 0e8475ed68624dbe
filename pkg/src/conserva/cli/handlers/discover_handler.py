"""Handler for the discover command."""

import asyncio
from pathlib import Path
from typing import Any, Dict, List

from ...bench.metrics import compute_metrics
from ...bench.report import RunReport
from ...checkpoint import save_model
from ...pipeline import DiscoveryPipeline, PipelineOptions
from .base_handler import CommandHandler

SUMMARY_FILE = "summary.csv"


class DiscoverCommandHandler(CommandHandler):
    """Runs the pipeline per (system, seed) and writes reports and models"""

    async def handle(self, args: Dict[str, Any]) -> None:
        options = self.options(args, generate_missing=bool(args.get("generate_missing")))
        seeds = self.seeds(args)
        out_root = self.output_root(args) / "discover"

        for system in self.selected_systems(args):
            reports: List[RunReport] = []
            for seed in seeds:
                out_dir = out_root / f"{system}-{options.scale}" / f"seed{seed}"
                reports.append(await self._run_one(system, seed, options, out_dir))

            if len(reports) > 1:
                summary = compute_metrics(reports)
                path = out_root / f"{system}-{options.scale}" / SUMMARY_FILE
                await asyncio.to_thread(summary.to_csv, path, index=False)
                print(self.formatter.format_summary(system, summary))

    async def _run_one(self, system: str, seed: int, options: PipelineOptions, out_dir: Path) -> RunReport:
        self.log.info(f"Discovering {system} seed {seed}")
        pipeline = DiscoveryPipeline(options)
        report = await pipeline.run(system, seed)

        await asyncio.to_thread(report.write, out_dir)
        ctx = pipeline.context
        if ctx.dynamics is not None:
            await asyncio.to_thread(save_model, ctx.dynamics.model, out_dir / "dynamics")
        if ctx.best is not None:
            await asyncio.to_thread(save_model, ctx.best.model, out_dir / "phi")
        config = options.to_config()
        config.update({"command": "discover", "system": system, "seed": seed})
        self.write_resolved_config(out_dir, config)

        print(self.formatter.format_report(report, out_dir))
        return report
