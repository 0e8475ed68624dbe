import copy
import dataclasses

import pytest

from conserva.bench.report import RunReport
from conserva.dataset import load_or_generate
from conserva.errors import StageError
from conserva.pipeline import VARIANTS, DiscoveryPipeline, options_for, resolve_output_root
from conserva.verify import apply_gate


def test_options_for_desk():
    """Should resolve the desk scale with its trajectory counts"""
    options = options_for("desk")
    assert options.scale == "desk"
    assert options.n_traj == 100 and options.T == 200
    assert options.restarts == 3
    assert options.gate["tau"] == 0.01


def test_options_overrides():
    """Should route shorthands to the gate, config keys to the config and the rest to fields"""
    options = options_for("desk", tau=0.05, rho_min=2.0, restarts=4, jobs=None, noise_sigma=0.1)
    assert options.gate["tau"] == 0.05 and options.gate["rho_min"] == 2.0
    assert options.restarts == 4
    assert options.jobs == 1
    assert options.noise_sigma == 0.1


def test_options_unknown_scale():
    with pytest.raises(ValueError):
        options_for("galaxy")


@pytest.mark.parametrize("variant", VARIANTS)
def test_variants(variant):
    """Should switch off exactly what each ablation names"""
    options = options_for("desk", variant=variant)
    assert options.variant == variant
    assert options.restarts == (1 if variant == "no_restarts" else 3)
    assert options.gate["rho_min"] == (0.0 if variant == "no_diversity" else 10.0)
    assert options.use_poly_lasso == (variant not in ("no_poly_lasso", "lasso_off"))
    assert options.use_lv_lasso == (variant not in ("no_lv_lasso", "lasso_off"))


def test_unknown_variant():
    with pytest.raises(ValueError):
        options_for("desk").with_variant("no_everything")


def test_pde_complexity_cap():
    """Should cap complexity for PDE systems only"""
    options = options_for("desk")
    assert options.gate_config(options.system_spec("burgers")).max_complexity == 6
    assert options.gate_config(options.system_spec("lorenz")).max_complexity is None


def test_to_config_is_plain(tmp_path):
    options = options_for("desk", data_root=tmp_path)
    record = options.to_config()
    assert record["dynamics"]["hidden"] == [256, 256]
    assert record["data_root"] == str(tmp_path)


def test_resolve_output_root(monkeypatch, tmp_path):
    """Should prefer the explicit root, then the environment, then ./runs"""
    monkeypatch.delenv("CONSERVA_OUTPUT_ROOT", raising=False)
    assert str(resolve_output_root()) == "runs"
    monkeypatch.setenv("CONSERVA_OUTPUT_ROOT", str(tmp_path))
    assert resolve_output_root() == tmp_path
    assert str(resolve_output_root("elsewhere")) == "elsewhere"


@pytest.mark.asyncio
async def test_mass_spring_end_to_end(tiny_options, tmp_path):
    """Should discover the energy and record every stage"""
    pipeline = DiscoveryPipeline(tiny_options)
    report = await pipeline.run("mass_spring", seed=0)
    assert isinstance(report, RunReport)
    assert report.metrics["dr"] == 1.0
    assert report.restarts == 2
    assert report.selected_restart in (0, 1)
    assert set(report.timings) == {"dataset", "dynamics", "invariant", "extraction", "verification", "total"}
    assert pipeline.context.best is not None
    assert any(c["source"] == "poly_lasso" for c in report.candidates)
    paths = report.write(tmp_path / "out")
    assert RunReport.read(paths["report"]).metrics["dr"] == 1.0


@pytest.mark.asyncio
async def test_lorenz_has_no_true_discovery(tiny_options):
    """Should never claim a discovery on a chaotic system"""
    report = await DiscoveryPipeline(tiny_options).run("lorenz", seed=0)
    assert report.metrics["dr"] == 0.0
    assert report.metrics["true_discoveries"] == 0


@pytest.mark.asyncio
async def test_reports_are_reproducible(tiny_options):
    """Should produce identical reports for the same seed"""
    first = await DiscoveryPipeline(tiny_options).run("mass_spring", seed=1)
    second = await DiscoveryPipeline(tiny_options).run("mass_spring", seed=1)
    assert first.to_json() == second.to_json()


@pytest.mark.asyncio
async def test_missing_dataset_raises_stage_error(tiny_options):
    """Should tag the failing stage"""
    options = dataclasses.replace(tiny_options, generate_missing=False)
    with pytest.raises(StageError) as e:
        await DiscoveryPipeline(options).run("mass_spring", seed=0)
    assert e.value.stage == "dataset"


@pytest.mark.asyncio
async def test_given_dataset_is_used(tiny_options, mass_spring_ds):
    """Should skip loading when a dataset is passed in"""
    pipeline = DiscoveryPipeline(dataclasses.replace(tiny_options, generate_missing=False))
    report = await pipeline.run("mass_spring", seed=0, dataset=mass_spring_ds)
    assert pipeline.context.dataset is mass_spring_ds
    assert report.system == "mass_spring"


@pytest.mark.asyncio
async def test_diversity_threshold_rejects_the_constant(tiny_options):
    """Should accept the symbolic-regression baseline constant on lorenz only when rho_min is zero"""
    full = await DiscoveryPipeline(tiny_options).run("lorenz", seed=0)
    constant = [c for c in full.candidates if c["source"] == "gp" and c["complexity"] == 1]
    assert constant and constant[0]["reason"].startswith("diversity rho")
    ablated = await DiscoveryPipeline(tiny_options.with_variant("no_diversity")).run("lorenz", seed=0)
    assert ablated.metrics["accepted"] >= 1
    assert ablated.metrics["fdr"] == 1.0


@pytest.mark.asyncio
async def test_noise_is_gated_on_clean_data(tiny_options):
    """Should train on noisy states and score candidates on the clean test split"""
    pipeline = DiscoveryPipeline(dataclasses.replace(tiny_options, noise_sigma=0.05))
    report = await pipeline.run("mass_spring", seed=0)
    assert pipeline.context.dataset.noise_sigma == 0.05
    assert report.noise_sigma == 0.05
    clean = load_or_generate(tiny_options.system_spec("mass_spring"), tiny_options.data_seed,
                             tiny_options.data_root, tiny_options.scale)
    assert clean.noise_sigma == 0.0
    scored = [c for c in pipeline.context.candidates if c.test_constancy is not None]
    assert scored
    gate = tiny_options.gate_config(clean.system)
    for cand in scored:
        rescored = copy.copy(cand)
        apply_gate([rescored], clean.split("test"), gate)
        assert rescored.test_constancy == pytest.approx(cand.test_constancy, rel=1e-12)
