"""Experiment suites built on the discovery pipeline.

Every suite returns a pandas DataFrame with one row per cell. Cells are
independent and seed-derived, so running them on several workers gives the
same table as running them one after another.
"""

import asyncio
import copy
import dataclasses
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, TypeVar, Union

import pandas as pd

from ..dataset import Dataset, add_noise, load_or_generate, subsample_train
from ..pipeline import VARIANTS, DiscoveryPipeline, PipelineOptions, options_for
from ..verify import adjudicate, apply_gate
from .metrics import compute_metrics, discovery_metrics, format_metric, pareto_frontier
from .report import RunReport

log = logging.getLogger(__name__)

DEFAULT_RESTARTS = (1, 3, 10)
DEFAULT_RHOS = (5.0, 10.0, 20.0, 50.0)
DEFAULT_SIGMAS = (0.01, 0.05, 0.1)
DEFAULT_SIZES = (50, 100, 150, 200, 280, 350)
STAGES = ("dataset", "dynamics", "invariant", "extraction", "verification", "total")

CellT = TypeVar("CellT")
RowT = TypeVar("RowT")


def _map_cells(fn: Callable[[CellT], RowT], cells: Sequence[CellT], jobs: int) -> List[RowT]:
    if jobs > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, cells))
    return [fn(cell) for cell in cells]


def _options(options: Optional[PipelineOptions]) -> PipelineOptions:
    return options if options is not None else options_for("desk")


def base_dataset(system: str, options: PipelineOptions) -> Dataset:
    spec = options.system_spec(system)
    return load_or_generate(spec, options.data_seed, options.data_root, options.scale, options.jobs)


def run_pipeline(system: str, seed: int, options: Optional[PipelineOptions] = None,
                 dataset: Optional[Dataset] = None, reference: Optional[Dataset] = None) -> RunReport:
    """One end-to-end run; deterministic per (system, seed, options)"""
    return asyncio.run(DiscoveryPipeline(_options(options)).run(system, seed, dataset, reference))


def _run_with_context(system: str, seed: int, options: PipelineOptions,
                      dataset: Optional[Dataset] = None) -> Tuple[RunReport, DiscoveryPipeline]:
    pipeline = DiscoveryPipeline(options)
    report = asyncio.run(pipeline.run(system, seed, dataset))
    return report, pipeline


def _row(report: RunReport, **extra) -> Dict[str, object]:
    m = report.metrics
    return {
        **extra,
        "dr": m["dr"],
        "fdr": m["fdr"],
        "f1": m["f1"],
        "accepted": m["accepted"],
        "best_constancy": m.get("best_constancy"),
    }


def run_benchmark(systems: Sequence[str], seeds: Sequence[int],
                  options: Optional[PipelineOptions] = None) -> Tuple[List[RunReport], pd.DataFrame]:
    """Main table: every system over every seed, with mean ± std per system"""
    options = _options(options)
    datasets = {s: base_dataset(s, options) for s in systems}
    cells = [(s, seed) for s in systems for seed in seeds]
    reports = _map_cells(lambda c: run_pipeline(c[0], c[1], options, datasets[c[0]]), cells, options.jobs)

    rows = []
    for system in systems:
        summary = compute_metrics([r for r in reports if r.system == system])
        row = {"system": system}
        for rec in summary.to_dict("records"):
            row[f"{rec['metric']}_mean"] = rec["mean"]
            row[f"{rec['metric']}_std"] = rec["std"]
        row["summary"] = " / ".join(format_metric(row[f"{k}_mean"], row[f"{k}_std"]) for k in ("dr", "fdr", "f1"))
        rows.append(row)
    return reports, pd.DataFrame(rows)


def run_ablation(systems: Sequence[str], variants: Sequence[str] = VARIANTS, seed: int = 0,
                 options: Optional[PipelineOptions] = None) -> pd.DataFrame:
    """F1 (DR/FDR) for every (system, variant) cell"""
    options = _options(options)
    unknown = [v for v in variants if v not in VARIANTS]
    if unknown:
        raise ValueError(f"Unknown variant(s): {', '.join(unknown)}")
    datasets = {s: base_dataset(s, options) for s in systems}
    cells = [(s, v) for s in systems for v in variants]

    def run(cell):
        system, variant = cell
        report = run_pipeline(system, seed, options.with_variant(variant), datasets[system])
        row = _row(report, system=system, variant=variant)
        row["cell"] = f"{row['f1']:.2f} ({row['dr']:.1f}/{row['fdr']:.1f})"
        return row

    return pd.DataFrame(_map_cells(run, cells, options.jobs))


def ablation_table(frame: pd.DataFrame) -> pd.DataFrame:
    """Variants as rows, systems as columns, 'F1 (DR/FDR)' cells"""
    table = frame.pivot(index="variant", columns="system", values="cell")
    order = [v for v in VARIANTS if v in table.index]
    return table.loc[order]


def run_noise_suite(systems: Sequence[str], sigmas: Sequence[float] = DEFAULT_SIGMAS, seed: int = 0,
                    options: Optional[PipelineOptions] = None) -> pd.DataFrame:
    """DR/FDR and best constancy against state-noise level.

    Noise enters the training data only; candidates are gated on the clean test split.
    """
    options = _options(options)
    datasets = {s: base_dataset(s, options) for s in systems}
    cells = [(s, float(sigma)) for s in systems for sigma in sigmas]

    def run(cell):
        system, sigma = cell
        ds = add_noise(datasets[system], sigma, seed)
        report = run_pipeline(system, seed, dataclasses.replace(options, noise_sigma=sigma), ds,
                              reference=datasets[system])
        return _row(report, system=system, sigma=sigma)

    return pd.DataFrame(_map_cells(run, cells, options.jobs))


def run_sample_efficiency(system: str, sizes: Sequence[int] = DEFAULT_SIZES, seed: int = 0,
                          options: Optional[PipelineOptions] = None) -> pd.DataFrame:
    """Discovery against the number of training trajectories"""
    options = _options(options)
    ds = base_dataset(system, options)
    available = len(ds.splits["train"])
    usable = [int(n) for n in sizes if 0 < int(n) <= available]
    skipped = [int(n) for n in sizes if int(n) not in usable]
    if skipped:
        log.warning(f"Skipping training sizes {skipped}: only {available} training trajectories")

    def run(size):
        report = run_pipeline(system, seed, dataclasses.replace(options, train_size=size),
                              subsample_train(ds, size))
        return _row(report, system=system, train_size=size)

    return pd.DataFrame(_map_cells(run, usable, options.jobs),
                        columns=["system", "train_size", "dr", "fdr", "f1", "accepted", "best_constancy"])


def run_sweep(system: str, restarts_list: Sequence[int] = DEFAULT_RESTARTS, rho_list: Sequence[float] = DEFAULT_RHOS,
              seed: int = 0, options: Optional[PipelineOptions] = None) -> pd.DataFrame:
    """Restart-count sweep plus a diversity-threshold sweep over one run's candidates"""
    options = _options(options)
    ds = base_dataset(system, options)

    def run_restarts(r):
        report = run_pipeline(system, seed, dataclasses.replace(options, restarts=int(r)), ds)
        row = _row(report, system=system, parameter="restarts", value=float(r))
        row["best_val_constancy"] = report.metrics.get("best_val_constancy")
        return row

    rows = _map_cells(run_restarts, list(restarts_list), options.jobs)

    _, pipeline = _run_with_context(system, seed, options, ds)
    test = ds.split("test")
    spec = ds.system
    for rho in rho_list:
        gate = dataclasses.replace(options.gate_config(spec), rho_min=float(rho))
        candidates = [copy.copy(c) for c in pipeline.context.candidates]
        accepted = apply_gate(candidates, test, gate)
        verdicts = adjudicate(accepted, spec, test, options.min_rank_correlation)
        metrics = discovery_metrics(verdicts, spec.has_true_law)
        constancies = [c.test_constancy for c in accepted]
        rows.append({
            "system": system,
            "parameter": "rho_min",
            "value": float(rho),
            "dr": metrics["dr"],
            "fdr": metrics["fdr"],
            "f1": metrics["f1"],
            "accepted": metrics["accepted"],
            "best_constancy": min(constancies) if constancies else None,
            "best_val_constancy": pipeline.context.best.val_constancy,
        })
    return pd.DataFrame(rows)


def run_pareto(system: str, seed: int = 0, options: Optional[PipelineOptions] = None) -> pd.DataFrame:
    """(constancy, complexity) of every gated candidate and whether it is on the frontier.

    Only candidates that pass the diversity threshold compete for the frontier;
    a global constant would otherwise dominate every law.
    """
    options = _options(options)
    ds = base_dataset(system, options)
    _, pipeline = _run_with_context(system, seed, options, ds)
    rho_min = options.gate_config(ds.system).rho_min
    scored = [c for c in pipeline.context.candidates if c.test_constancy is not None]
    diverse = [c for c in scored if c.diversity_rho is not None and c.diversity_rho >= rho_min]
    front = {id(c) for c in pareto_frontier(diverse)}
    rows = [{
        "system": system,
        "id": c.cid,
        "source": c.source,
        "complexity": c.complexity,
        "test_constancy": c.test_constancy,
        "diversity_rho": c.diversity_rho,
        "accepted": c.accepted,
        "on_frontier": id(c) in front,
        "expression": c.prefix,
    } for c in scored]
    frame = pd.DataFrame(rows, columns=["system", "id", "source", "complexity", "test_constancy",
                                        "diversity_rho", "accepted", "on_frontier", "expression"])
    return frame.sort_values(["complexity", "test_constancy", "id"], kind="mergesort").reset_index(drop=True)


def run_runtime(systems: Sequence[str], seed: int = 0, options: Optional[PipelineOptions] = None) -> pd.DataFrame:
    """Per-stage wall-clock seconds for one run of each system"""
    options = _options(options)
    rows = []
    for system in systems:
        report = run_pipeline(system, seed, options)
        rows.append({"system": system, **{s: report.timings.get(s) for s in STAGES}})
    return pd.DataFrame(rows, columns=["system", *STAGES])


def write_table(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    log.info(f"Wrote {len(frame)} rows to {path}")
    return path


__all__ = [
    "ablation_table",
    "run_ablation",
    "run_benchmark",
    "run_noise_suite",
    "run_pareto",
    "run_pipeline",
    "run_runtime",
    "run_sample_efficiency",
    "run_sweep",
    "write_table",
]
