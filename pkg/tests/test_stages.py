import pytest

from conserva.dataset import MANIFEST, add_noise, dataset_path, generate, save
from conserva.extract.candidate import Candidate
from conserva.extract.expression import from_prefix
from conserva.stages import (
    BaseStage,
    DatasetStage,
    DynamicsStage,
    ExtractionStage,
    InvariantStage,
    VerificationStage,
    parametric_params,
)
from conserva.systems import get_system
from conserva.verify import GateConfig

TINY_SPEC = get_system("mass_spring").scaled(n_traj=10, T=30)


def test_base_stage_progress_and_cleanup():
    """Should track progress and reset it on cleanup"""
    stage = BaseStage("demo", {"verbose": True})
    stage.update_progress(2, 5, "halfway")
    with stage.timed():
        pass
    assert stage.progress_tracker == {"current_step": 2, "total_steps": 5, "status": "halfway"}
    assert stage.seconds >= 0.0
    stage.cleanup()
    assert stage.progress_tracker["status"] == ""
    assert stage.seconds == 0.0


def test_base_stage_result_dicts():
    """Should build success and error payloads"""
    stage = BaseStage("demo", None)
    assert stage.config == {}
    ok = stage.success(answer=42)
    assert ok["status"] == "success" and ok["answer"] == 42 and "timestamp" in ok
    err = stage.failure(ValueError("boom"))
    assert err == {"status": "error", "error": "boom", "error_type": "ValueError", "timestamp": err["timestamp"]}


@pytest.mark.asyncio
async def test_dataset_stage_refuses_missing(tmp_path):
    """Should report an error when the dataset is absent and generation is off"""
    result = await DatasetStage({}).execute(TINY_SPEC, 1, root=tmp_path, generate_missing=False)
    assert result["status"] == "error"
    assert result["error_type"] == "FileNotFoundError"


@pytest.mark.asyncio
async def test_dataset_stage_generates_then_loads(tmp_path):
    """Should store a generated dataset and reuse it on the next call"""
    stage = DatasetStage({})
    first = await stage.execute(TINY_SPEC, 1, root=tmp_path)
    assert first["status"] == "success"
    assert (dataset_path(tmp_path, "mass_spring", 1, "desk") / MANIFEST).exists()
    second = await stage.execute(TINY_SPEC, 1, root=tmp_path, generate_missing=False)
    assert second["status"] == "success"
    assert (second["dataset"].states == first["dataset"].states).all()


@pytest.mark.asyncio
async def test_dataset_stage_noise_and_subsample():
    """Should perturb states and shrink the training split"""
    stage = DatasetStage({})
    clean = (await stage.execute(TINY_SPEC, 2))["dataset"]
    result = await stage.execute(TINY_SPEC, 2, noise_sigma=0.1, noise_seed=5, train_size=3)
    assert result["status"] == "success"
    assert result["split_sizes"][0] == 3
    assert result["dataset"].noise_sigma == 0.1
    assert not (result["dataset"].states == clean.states).all()
    assert (result["reference"].states == clean.states).all()
    assert result["reference"].noise_sigma == 0.0


@pytest.mark.asyncio
async def test_dataset_stage_checks_stored_seed(tmp_path):
    """Should not reuse a stored dataset generated from another seed"""
    save(generate(TINY_SPEC, 2), dataset_path(tmp_path, "mass_spring", 1, "desk"))
    stage = DatasetStage({})
    refused = await stage.execute(TINY_SPEC, 1, root=tmp_path, generate_missing=False)
    assert refused["status"] == "error"
    assert refused["error_type"] == "FileNotFoundError"
    regenerated = await stage.execute(TINY_SPEC, 1, root=tmp_path)
    assert regenerated["dataset"].seed == 1


@pytest.mark.asyncio
async def test_dynamics_stage(mass_spring_ds, tiny_train_config):
    """Should train a dynamics model and report its errors"""
    result = await DynamicsStage({}).execute(mass_spring_ds, tiny_train_config, seed=0)
    assert result["status"] == "success"
    assert result["val_mse"] >= 0.0
    assert result["seconds"] > 0.0


@pytest.mark.asyncio
async def test_invariant_stage(mass_spring_ds, tiny_train_config):
    """Should train every restart and pick one"""
    result = await InvariantStage({}).execute(mass_spring_ds, 2, tiny_train_config, seed=0)
    assert result["status"] == "success"
    assert len(result["restart_constancies"]) == 2
    assert result["best"] in result["restarts"]


@pytest.mark.asyncio
async def test_invariant_stage_zero_restarts(mass_spring_ds, tiny_train_config):
    result = await InvariantStage({}).execute(mass_spring_ds, 0, tiny_train_config, seed=0)
    assert result["status"] == "error"


@pytest.mark.asyncio
async def test_extraction_stage_lasso_only(mass_spring_ds):
    """Should number the candidates and skip GP without a phi model"""
    result = await ExtractionStage({}).execute(mass_spring_ds, phi_model=None)
    assert result["status"] == "success"
    assert [c.cid for c in result["candidates"]] == ["mass_spring-000-poly_lasso"]
    assert result["parametric_params"] == ["k", "m"]


@pytest.mark.asyncio
async def test_extraction_stage_bad_parametric_mode(mass_spring_ds):
    result = await ExtractionStage({}).execute(mass_spring_ds, parametric="sometimes")
    assert result["status"] == "error"
    assert result["error_type"] == "ValueError"


def test_parametric_params_modes(mass_spring_ds, lorenz_ds):
    """Should follow the mode and, in auto, the parameters that vary on train"""
    assert parametric_params(mass_spring_ds, "off") == ()
    assert parametric_params(mass_spring_ds, "on") == ("k", "m")
    assert parametric_params(lorenz_ds, "auto") == ()


@pytest.mark.asyncio
async def test_verification_stage(mass_spring_ds):
    """Should gate and adjudicate in one step"""
    cands = [Candidate(expression=from_prefix("add mul k square x1 div square x2 m"), source="gp"),
             Candidate(expression=from_prefix("x1"), source="gp")]
    result = await VerificationStage({}).execute(cands, mass_spring_ds, GateConfig())
    assert result["status"] == "success"
    assert result["accepted"] == [cands[0]]
    assert result["verdicts"] == ["true_discovery"]


@pytest.mark.asyncio
async def test_verification_stage_error():
    result = await VerificationStage({}).execute([], None, GateConfig())
    assert result["status"] == "error"


@pytest.mark.asyncio
async def test_verification_stage_uses_reference(mass_spring_ds):
    """Should gate on the clean reference split when the working data is noisy"""
    energy = "add mul 0.5 mul k square x1 mul 0.5 div square x2 m"
    noisy = add_noise(mass_spring_ds, 0.1, seed=3)
    stage = VerificationStage({})
    on_noisy = await stage.execute([Candidate(expression=from_prefix(energy), source="poly_lasso")],
                                   noisy, GateConfig())
    assert on_noisy["accepted"] == []
    on_clean = await stage.execute([Candidate(expression=from_prefix(energy), source="poly_lasso")],
                                   noisy, GateConfig(), reference=mass_spring_ds)
    assert on_clean["verdicts"] == ["true_discovery"]
