"""Handler for the generate command."""

import asyncio
from pathlib import Path
from typing import Any, Dict, List

from ...dataset import Dataset, dataset_path, generate, save
from ...pipeline import options_for
from ...verify import ground_truth_constancy
from .base_handler import CommandHandler


def audit_row(ds: Dataset) -> Dict[str, Any]:
    return {
        "system": ds.system.name,
        "n_traj": ds.n_traj,
        "T": ds.system.T,
        "constancy": ground_truth_constancy(ds.system, ds.split("test")),
    }


class GenerateCommandHandler(CommandHandler):
    """Simulates datasets and audits their ground-truth invariants"""

    async def handle(self, args: Dict[str, Any]) -> None:
        options = options_for(args.get("scale", "desk"), jobs=args.get("jobs"))
        seed = args["seed"] if args.get("seed") is not None else options.data_seed
        root = Path(args["output_dir"]) if args.get("output_dir") else self.dataset_root({})
        systems = self.selected_systems(args)

        print(self.formatter.format_header(f"Generating {len(systems)} dataset(s) at {options.scale} scale", "INFO"))
        rows: List[Dict[str, Any]] = []
        for step, system in enumerate(systems, start=1):
            spec = options.system_spec(system)
            path = dataset_path(root, system, seed, options.scale)
            print(self.formatter.format_progress(step, len(systems), f"{system}: {spec.n_traj} x {spec.T}"))
            ds = await asyncio.to_thread(generate, spec, seed, options.jobs)
            await asyncio.to_thread(save, ds, path)
            rows.append(audit_row(ds))

        config = options.to_config()
        config.update({"command": "generate", "seed": seed, "systems": systems})
        self.write_resolved_config(root, config)
        print(self.formatter.format_audit(rows))
