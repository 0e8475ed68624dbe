"""Handler for the experiment command."""

import asyncio
from typing import Any, Dict

import pandas as pd

from ...bench import suites
from ...pipeline import VARIANTS, PipelineOptions
from .base_handler import CommandHandler


class ExperimentCommandHandler(CommandHandler):
    """Dispatches to the benchmark suites and writes their tables"""

    async def handle(self, args: Dict[str, Any]) -> None:
        suite = args["suite"]
        runner = getattr(self, f"_run_{suite}", None)
        if runner is None:
            raise ValueError(f"Unknown suite: {suite}")

        options = self.options(args)
        seed = args["seed"] if args.get("seed") is not None else 0
        out_dir = self.output_root(args) / "experiments" / f"{suite}-{options.scale}"
        print(self.formatter.format_header(f"Experiment {suite} ({options.scale})", "INFO"))

        tables = await asyncio.to_thread(runner, args, options, seed)
        for name, frame in tables.items():
            path = suites.write_table(frame, out_dir / f"{name}.csv")
            print(self.formatter.format_table(name, frame, path))

        config = options.to_config()
        config.update({"command": "experiment", "suite": suite, "seed": seed})
        self.write_resolved_config(out_dir, config)

    def _run_benchmark(self, args: Dict[str, Any], options: PipelineOptions, seed: int) -> Dict[str, pd.DataFrame]:
        seeds = self.seeds(args)
        reports, summary = suites.run_benchmark(self.selected_systems(args), seeds, options)
        runs = pd.DataFrame([{"system": r.system, "seed": r.seed, **{k: r.metrics.get(k) for k in ("dr", "fdr", "f1")}}
                             for r in reports])
        return {"benchmark": summary, "runs": runs}

    def _run_ablate(self, args: Dict[str, Any], options: PipelineOptions, seed: int) -> Dict[str, pd.DataFrame]:
        variants = args.get("variants") or list(VARIANTS)
        frame = suites.run_ablation(self.selected_systems(args), variants, seed, options)
        return {"ablation": frame, "ablation_table": suites.ablation_table(frame).reset_index()}

    def _run_noise(self, args: Dict[str, Any], options: PipelineOptions, seed: int) -> Dict[str, pd.DataFrame]:
        sigmas = args.get("sigmas") or list(suites.DEFAULT_SIGMAS)
        return {"noise": suites.run_noise_suite(self.selected_systems(args), sigmas, seed, options)}

    def _run_samples(self, args: Dict[str, Any], options: PipelineOptions, seed: int) -> Dict[str, pd.DataFrame]:
        sizes = args.get("sizes") or list(suites.DEFAULT_SIZES)
        return {"samples": suites.run_sample_efficiency(self.single_system(args), sizes, seed, options)}

    def _run_sweep(self, args: Dict[str, Any], options: PipelineOptions, seed: int) -> Dict[str, pd.DataFrame]:
        restarts = args.get("restarts_list") or list(suites.DEFAULT_RESTARTS)
        rhos = args.get("rhos") or list(suites.DEFAULT_RHOS)
        return {"sweep": suites.run_sweep(self.single_system(args), restarts, rhos, seed, options)}

    def _run_pareto(self, args: Dict[str, Any], options: PipelineOptions, seed: int) -> Dict[str, pd.DataFrame]:
        return {"pareto": suites.run_pareto(self.single_system(args), seed, options)}

    def _run_runtime(self, args: Dict[str, Any], options: PipelineOptions, seed: int) -> Dict[str, pd.DataFrame]:
        return {"runtime": suites.run_runtime(self.selected_systems(args), seed, options)}
