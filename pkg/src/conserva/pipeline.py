"""End-to-end discovery pipeline."""

import dataclasses
import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from .bench.metrics import discovery_metrics
from .bench.report import RunReport
from .config import ConfigLoader
from .dataset import Dataset
from .errors import StageError
from .extract.candidate import Candidate
from .extract.gp import GpConfig
from .neural.training import DynamicsResult, RestartResult, TrainConfig
from .stages import DatasetStage, DynamicsStage, ExtractionStage, InvariantStage, VerificationStage
from .systems import SystemSpec, get_system
from .verify import GateConfig

log = logging.getLogger(__name__)

VARIANTS = ("full", "no_restarts", "no_diversity", "no_lv_lasso", "no_poly_lasso", "lasso_off")
CONFIG_KEYS = ("data_seed", "restarts", "gp_samples", "parametric", "jobs", "verbose", "n_traj", "T",
               "dynamics", "phi", "gp", "gate", "adjudication")


@dataclass
class PipelineOptions:
    """Resolved settings of one pipeline run"""
    dynamics: TrainConfig
    phi: TrainConfig
    gp: Dict[str, Any]
    gate: Dict[str, Any]
    scale: str = "desk"
    data_seed: int = 42
    restarts: int = 3
    gp_samples: int = 4096
    parametric: str = "auto"
    jobs: int = 1
    verbose: bool = False
    n_traj: Optional[int] = None
    T: Optional[int] = None
    min_rank_correlation: float = 0.95
    variant: str = "full"
    use_poly_lasso: bool = True
    use_lv_lasso: bool = True
    use_gp: bool = True
    noise_sigma: float = 0.0
    train_size: Optional[int] = None
    data_root: Optional[Path] = None
    generate_missing: bool = True

    @classmethod
    def from_config(cls, config: Dict[str, Any], **fields: Any) -> "PipelineOptions":
        options = cls(
            dynamics=TrainConfig.from_dict(config["dynamics"]),
            phi=TrainConfig.from_dict(config["phi"]),
            gp=dict(config["gp"]),
            gate=dict(config["gate"]),
            scale=config.get("scale", "desk"),
            data_seed=int(config.get("data_seed", 42)),
            restarts=int(config["restarts"]),
            gp_samples=int(config.get("gp_samples", 4096)),
            parametric=config.get("parametric", "auto"),
            jobs=int(config.get("jobs", 1)),
            verbose=bool(config.get("verbose", False)),
            n_traj=config.get("n_traj"),
            T=config.get("T"),
            min_rank_correlation=float(config.get("adjudication", {}).get("min_rank_correlation", 0.95)),
        )
        return dataclasses.replace(options, **fields) if fields else options

    def system_spec(self, name: str) -> SystemSpec:
        return get_system(name).scaled(n_traj=self.n_traj, T=self.T)

    def gate_config(self, spec: SystemSpec) -> GateConfig:
        cap = self.gate.get("pde_max_complexity") if spec.is_pde else None
        return GateConfig.from_dict(self.gate, max_complexity=None if cap is None else int(cap))

    def gp_config(self, seed: int) -> GpConfig:
        return GpConfig.from_dict(self.gp, seed=seed, n_jobs=self.jobs)

    def with_variant(self, variant: str) -> "PipelineOptions":
        """Options for one ablation variant"""
        if variant not in VARIANTS:
            raise ValueError(f"Unknown variant: {variant}")
        changes: Dict[str, Any] = {"variant": variant}
        if variant == "no_restarts":
            changes["restarts"] = 1
        elif variant == "no_diversity":
            changes["gate"] = {**self.gate, "rho_min": 0.0}
        elif variant == "no_lv_lasso":
            changes["use_lv_lasso"] = False
        elif variant == "no_poly_lasso":
            changes["use_poly_lasso"] = False
        elif variant == "lasso_off":
            changes["use_lv_lasso"] = False
            changes["use_poly_lasso"] = False
        return dataclasses.replace(self, **changes)

    def to_config(self) -> Dict[str, Any]:
        """Plain-data snapshot written next to run outputs"""
        record = dataclasses.asdict(self)
        for key in ("dynamics", "phi"):
            record[key]["hidden"] = list(record[key]["hidden"])
        record["data_root"] = None if self.data_root is None else str(self.data_root)
        return record


def options_for(scale: str = "desk", loader: Optional[ConfigLoader] = None, **overrides: Any) -> PipelineOptions:
    """Resolve packaged config for a scale; keyword overrides go to the config or to option fields.

    tau and rho_min are shorthands for the gate section.
    """
    config_overrides: Dict[str, Any] = {}
    fields: Dict[str, Any] = {}
    for key, value in overrides.items():
        if value is None:
            continue
        if key in ("tau", "rho_min"):
            config_overrides.setdefault("gate", {})[key] = value
        elif key in CONFIG_KEYS:
            config_overrides[key] = value
        else:
            fields[key] = value
    resolved = (loader or ConfigLoader()).resolve(scale, config_overrides)
    options = PipelineOptions.from_config(resolved, **fields)
    if options.variant != "full":
        options = options.with_variant(options.variant)
    return options


@dataclass
class PipelineContext:
    """Intermediate products of the last run"""
    dataset: Optional[Dataset] = None
    dynamics: Optional[DynamicsResult] = None
    restarts: List[RestartResult] = field(default_factory=list)
    best: Optional[RestartResult] = None
    candidates: List[Candidate] = field(default_factory=list)
    accepted: List[Candidate] = field(default_factory=list)


class DiscoveryPipeline:
    """Runs dataset, dynamics, invariant, extraction and verification stages in order"""

    def __init__(self, options: PipelineOptions):
        self.options = options
        stage_config = {"verbose": options.verbose}
        self.dataset_stage = DatasetStage(stage_config)
        self.dynamics_stage = DynamicsStage(stage_config)
        self.invariant_stage = InvariantStage(stage_config)
        self.extraction_stage = ExtractionStage(stage_config)
        self.verification_stage = VerificationStage(stage_config)
        self.context = PipelineContext()

    @property
    def stages(self):
        return [self.dataset_stage, self.dynamics_stage, self.invariant_stage,
                self.extraction_stage, self.verification_stage]

    @staticmethod
    def _check(stage: str, result: Dict[str, Any]) -> Dict[str, Any]:
        if result["status"] != "success":
            raise StageError(stage, result.get("error", "unknown error"))
        return result

    async def run(self, system: str, seed: int, dataset: Optional[Dataset] = None,
                  reference: Optional[Dataset] = None) -> RunReport:
        """Run every stage for one (system, seed); raises StageError tagged with the failing stage.

        reference is the noise-free dataset whose test split gates the
        candidates; it defaults to dataset itself.
        """
        opts = self.options
        for stage in self.stages:
            stage.cleanup()
        self.context = PipelineContext()
        start = time.perf_counter()
        spec = dataset.system if dataset is not None else opts.system_spec(system)
        log.info(f"Running {spec.name} seed {seed} ({opts.scale}, variant {opts.variant})")

        if dataset is None:
            data_result = self._check("dataset", await self.dataset_stage.execute(
                spec, opts.data_seed, root=opts.data_root, scale=opts.scale, jobs=opts.jobs,
                noise_sigma=opts.noise_sigma, noise_seed=seed, train_size=opts.train_size,
                generate_missing=opts.generate_missing,
            ))
            dataset = data_result["dataset"]
            reference = reference if reference is not None else data_result["reference"]
        self.context.dataset = dataset

        dyn = self._check("dynamics", await self.dynamics_stage.execute(dataset, opts.dynamics, seed))
        self.context.dynamics = dyn["result"]

        inv = self._check("invariant", await self.invariant_stage.execute(
            dataset, opts.restarts, opts.phi, seed, jobs=opts.jobs))
        self.context.restarts, self.context.best = inv["restarts"], inv["best"]

        ext = self._check("extraction", await self.extraction_stage.execute(
            dataset, inv["best"].model, seed=seed,
            use_poly_lasso=opts.use_poly_lasso, use_lv_lasso=opts.use_lv_lasso, use_gp=opts.use_gp,
            parametric=opts.parametric, gp_config=opts.gp_config(seed), gp_samples=opts.gp_samples,
        ))
        self.context.candidates = ext["candidates"]

        ver = self._check("verification", await self.verification_stage.execute(
            ext["candidates"], dataset, opts.gate_config(spec), opts.min_rank_correlation, jobs=opts.jobs,
            reference=reference))
        self.context.accepted = ver["accepted"]

        timings = {stage.name: stage.seconds for stage in self.stages}
        timings["total"] = time.perf_counter() - start
        return self.build_report(spec, seed, timings)

    def build_report(self, spec: SystemSpec, seed: int, timings: Optional[Dict[str, float]] = None) -> RunReport:
        ctx = self.context
        verdicts = [c.verdict for c in ctx.accepted]
        metrics: Dict[str, Any] = discovery_metrics(verdicts, spec.has_true_law)
        constancies = [c.test_constancy for c in ctx.accepted]
        metrics["best_constancy"] = min(constancies) if constancies else None
        metrics["val_mse"] = ctx.dynamics.val_mse if ctx.dynamics else None
        metrics["mse_at_16"] = ctx.dynamics.mse_at_16 if ctx.dynamics else None
        metrics["best_val_constancy"] = ctx.best.val_constancy if ctx.best else None

        return RunReport(
            system=spec.name,
            seed=int(seed),
            scale=self.options.scale,
            variant=self.options.variant,
            noise_sigma=float(self.options.noise_sigma),
            train_size=self.options.train_size,
            restarts=len(ctx.restarts),
            selected_restart=ctx.best.index if ctx.best else None,
            restart_constancies=[r.val_constancy for r in ctx.restarts],
            candidates=[c.to_record() for c in ctx.candidates],
            accepted_laws=[c.prefix for c in ctx.accepted],
            metrics=metrics,
            timings=dict(timings or {}),
        )


def resolve_output_root(root: Optional[Union[str, Path]] = None) -> Path:
    """Explicit root, else CONSERVA_OUTPUT_ROOT, else ./runs"""
    return Path(root or os.getenv("CONSERVA_OUTPUT_ROOT", "./runs"))
