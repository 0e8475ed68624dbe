import numpy as np
import pytest

from conserva.errors import TrainingDivergedError
from conserva.neural import training
from conserva.neural.mlp import Mlp, init_mlp
from conserva.neural.training import (
    DynamicsModel,
    PhiModel,
    RestartResult,
    Standardizer,
    TrainConfig,
    invariance_defect,
    one_step_mse,
    rollout_mse,
    select_best,
    summarize_restarts,
    train_dynamics,
    train_phi_restarts,
)
from conserva.random_streams import derive_rng
from conserva.systems import true_invariant_gradient, vector_field


def test_config_from_dict():
    """Should coerce hidden sizes and floats and ignore unknown keys"""
    cfg = TrainConfig.from_dict({"hidden": [4, 4], "lr": "1e-2", "schedule": "one_cycle", "extra": 1})
    assert cfg.hidden == (4, 4)
    assert cfg.lr == 0.01
    with pytest.raises(ValueError):
        TrainConfig(schedule="step")
    with pytest.raises(ValueError):
        TrainConfig(max_epochs=0)


def test_standardizer_roundtrip():
    """Should z-score with unit std floor for constant columns"""
    states = np.array([[[1.0, 5.0], [3.0, 5.0]]])
    s = Standardizer.fit(states)
    assert s.std[1] == 1.0
    z = s.transform(states.reshape(-1, 2))
    assert np.allclose(z[:, 0], [-1.0, 1.0])
    assert np.allclose(s.inverse(z), states.reshape(-1, 2))


def test_train_dynamics_reports_errors(mass_spring_ds, tiny_train_config):
    """Should return a frozen model with finite validation and rollout errors"""
    result = train_dynamics(mass_spring_ds, tiny_train_config, seed=0)
    assert np.isfinite(result.val_mse)
    assert np.isfinite(result.mse_at_16)
    assert 1 <= result.epochs <= tiny_train_config.max_epochs
    assert len(result.history) == result.epochs
    with pytest.raises(ValueError):
        result.model.net.weights[0][0, 0] = 0.0


def test_train_dynamics_deterministic(mass_spring_ds, tiny_train_config):
    """Should give identical results for the same seed"""
    a = train_dynamics(mass_spring_ds, tiny_train_config, seed=3)
    b = train_dynamics(mass_spring_ds, tiny_train_config, seed=3)
    assert a.val_mse == b.val_mse
    assert np.array_equal(a.model.net.weights[0], b.model.net.weights[0])


def test_rollout_of_identity_model_is_zero_drift():
    """Should score a perfect model at zero and handle the zero horizon"""
    states = np.tile(np.array([1.0, 2.0]), (2, 40, 1))
    identity = DynamicsModel(
        net=_zero_net(2),
        inputs=Standardizer(np.zeros(2), np.ones(2)),
        delta=Standardizer(np.zeros(2), np.ones(2)),
    )
    assert one_step_mse(identity, states) == 0.0
    assert rollout_mse(identity, states, 16) == 0.0
    assert rollout_mse(identity, states, 0) == 0.0
    with pytest.raises(ValueError):
        rollout_mse(identity, states[:, :10], 16)


def _zero_net(dim):
    return Mlp([np.zeros((dim, dim))], [np.zeros(dim)])


def test_phi_restarts_pick_lowest_constancy(mass_spring_ds, tiny_train_config):
    """Should train every restart and select the lowest validation constancy"""
    results, best = train_phi_restarts(mass_spring_ds, 3, tiny_train_config, seed=0)
    assert [r.index for r in results] == [0, 1, 2]
    assert best.val_constancy == min(r.val_constancy for r in results)
    values = best.model.evaluate(mass_spring_ds.split_states("test"))
    assert values.shape == (3, 40)


def test_phi_restarts_independent_of_jobs(mass_spring_ds, tiny_train_config):
    """Should give the same restarts on one or several workers"""
    serial, _ = train_phi_restarts(mass_spring_ds, 2, tiny_train_config, seed=1, jobs=1)
    parallel, _ = train_phi_restarts(mass_spring_ds, 2, tiny_train_config, seed=1, jobs=2)
    assert [r.val_constancy for r in serial] == [r.val_constancy for r in parallel]


def test_phi_restarts_validation(mass_spring_ds, tiny_train_config):
    """Should refuse zero restarts"""
    with pytest.raises(ValueError):
        train_phi_restarts(mass_spring_ds, 0, tiny_train_config)


def test_select_best_ties_and_divergence():
    """Should break ties by index and raise when every restart diverged"""
    a = RestartResult(2, None, 0.1)
    b = RestartResult(1, None, 0.1)
    c = RestartResult(0, None, float("inf"), diverged=True)
    assert select_best([a, b, c]) is b
    with pytest.raises(TrainingDivergedError):
        select_best([c])


def test_select_best_freezes_the_winner():
    """Should hand back a read-only phi network"""
    inputs = Standardizer.fit(np.random.default_rng(0).normal(size=(3, 5, 2)))
    model = PhiModel(init_mlp((2, 3, 1), derive_rng(0, "phi", 0)), inputs)
    best = select_best([RestartResult(0, model, 0.2), RestartResult(1, None, float("inf"), diverged=True)])
    assert best.model is model
    assert not any(p.flags.writeable for p in best.model.net.parameters())


def test_restart_that_diverges_late_is_frozen(mocker, mass_spring_ds):
    """Should keep and freeze the last good network when a later epoch diverges"""
    real = training.grad_phi_loss
    calls = {"n": 0}

    def first_then_nan(net, batch, weight_decay, eps):
        calls["n"] += 1
        loss, grads = real(net, batch, weight_decay, eps)
        return (loss, grads) if calls["n"] == 1 else (float("nan"), grads)

    mocker.patch.object(training, "grad_phi_loss", side_effect=first_then_nan)
    cfg = TrainConfig(hidden=(8,), max_epochs=3, batch_size=64, patience=3)
    results, best = train_phi_restarts(mass_spring_ds, 1, cfg, seed=0)
    assert not best.diverged
    assert best.epochs == 2
    assert not any(p.flags.writeable for p in best.model.net.parameters())


def test_restart_that_diverges_at_once_is_frozen(mocker, mass_spring_ds):
    """Should freeze the network of a restart that never produced a finite loss"""
    mocker.patch.object(training, "grad_phi_loss",
                        side_effect=lambda net, batch, wd, eps: (float("nan"), net.zeros_like()))
    cfg = TrainConfig(hidden=(8,), max_epochs=2, batch_size=64)
    with pytest.raises(TrainingDivergedError):
        train_phi_restarts(mass_spring_ds, 2, cfg, seed=0)
    result = training._train_restart(0, mass_spring_ds.split_states("train"), mass_spring_ds.split_states("val"),
                                     Standardizer.fit(mass_spring_ds.split_states("train")), cfg, 0)
    assert result.diverged
    assert not any(p.flags.writeable for p in result.model.net.parameters())


def test_summarize_restarts():
    """Should count divergences and report the best and worst constancy"""
    results = [RestartResult(0, None, 0.2), RestartResult(1, None, 0.05),
               RestartResult(2, None, float("inf"), diverged=True)]
    summary = summarize_restarts(results)
    assert summary == {"restarts": 3, "diverged": 1, "best": 0.05, "worst": 0.2}


def test_invariance_defect_bound():
    """Should keep the defect of a learned drift below its gradient bound"""
    p = {"k": 1.0, "m": 1.0}
    dt = 0.1
    states = np.array([[0.5, 0.0], [0.0, 0.5], [0.3, -0.4]])
    true_drift = dt * vector_field("mass_spring", states, p)
    # one explicit Euler step, so the drift equals dt * f exactly
    A = np.array([[0.0, -dt], [dt, 0.0]])
    model = DynamicsModel(
        net=_linear_net(A),
        inputs=Standardizer(np.zeros(2), np.ones(2)),
        delta=Standardizer(np.zeros(2), np.ones(2)),
    )
    grads = true_invariant_gradient("mass_spring", states, p)
    defect, bound = invariance_defect(model, states, grads, true_drift)
    assert defect == pytest.approx(0.0, abs=1e-24)
    assert bound == pytest.approx(0.0, abs=1e-24)
    rough = DynamicsModel(
        net=_linear_net(A + 0.01),
        inputs=Standardizer(np.zeros(2), np.ones(2)),
        delta=Standardizer(np.zeros(2), np.ones(2)),
    )
    defect, bound = invariance_defect(rough, states, grads, true_drift)
    assert 0.0 < defect <= bound


def _linear_net(A):
    return Mlp([A], [np.zeros(A.shape[1])])
