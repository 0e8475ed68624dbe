"""Training loops for the dynamics model and the phi restarts."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..dataset import Dataset
from ..errors import TrainingDivergedError
from ..random_streams import derive_rng
from ..verify import constancy
from .mlp import Mlp, forward, grad_dyn_loss, grad_phi_loss, init_mlp
from .optim import adam_init, adam_step, cosine_lr, one_cycle_lr

log = logging.getLogger(__name__)

SCHEDULES = ("one_cycle", "cosine")
ROLLOUT_HORIZON = 16


@dataclass(frozen=True)
class TrainConfig:
    hidden: Tuple[int, ...] = (64, 64, 64)
    max_epochs: int = 300
    batch_size: int = 32
    schedule: str = "cosine"
    lr: float = 1e-3
    min_lr: float = 0.0
    warmup_fraction: float = 0.0
    weight_decay: float = 1e-4
    patience: int = 20
    eps: float = 1e-4

    def __post_init__(self):
        if self.schedule not in SCHEDULES:
            raise ValueError(f"Unknown schedule: {self.schedule}")
        if self.max_epochs < 1 or self.batch_size < 1 or self.patience < 1:
            raise ValueError("max_epochs, batch_size and patience must be positive")

    @classmethod
    def from_dict(cls, config: Mapping[str, Any]) -> "TrainConfig":
        known = {k: v for k, v in dict(config).items() if k in cls.__dataclass_fields__}
        if "hidden" in known:
            known["hidden"] = tuple(int(h) for h in known["hidden"])
        for key in ("lr", "min_lr", "warmup_fraction", "weight_decay", "eps"):
            if key in known:
                known[key] = float(known[key])
        return cls(**known)

    def learning_rate(self, step: int, total: int) -> float:
        if self.schedule == "one_cycle":
            return one_cycle_lr(step, total, self.lr, self.min_lr, self.warmup_fraction)
        return cosine_lr(step, total, self.lr, self.min_lr)


@dataclass(frozen=True)
class Standardizer:
    """Per-dimension z-scoring with train-split statistics"""
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, states: np.ndarray, floor: float = 1e-12) -> "Standardizer":
        flat = np.asarray(states, dtype=np.float64).reshape(-1, np.shape(states)[-1])
        std = flat.std(axis=0)
        return cls(mean=flat.mean(axis=0), std=np.where(std < floor, 1.0, std))

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std

    def inverse(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=np.float64) * self.std + self.mean


@dataclass
class DynamicsModel:
    """x_next = x + delta.mean + delta.std * net(standardized x)"""
    net: Mlp
    inputs: Standardizer
    delta: Standardizer

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        flat = x.reshape(-1, x.shape[-1])
        step = self.delta.inverse(forward(self.net, self.inputs.transform(flat)))
        return (flat + step).reshape(x.shape)

    def rollout(self, x0: np.ndarray, steps: int) -> np.ndarray:
        """(steps + 1, ...) autoregressive predictions starting at x0"""
        path = [np.asarray(x0, dtype=np.float64)]
        for _ in range(steps):
            path.append(self.predict(path[-1]))
        return np.stack(path)


@dataclass
class DynamicsResult:
    model: DynamicsModel
    val_mse: float
    mse_at_16: float
    epochs: int
    history: List[float] = field(default_factory=list)


@dataclass
class PhiModel:
    net: Mlp
    inputs: Standardizer

    def evaluate(self, states: np.ndarray) -> np.ndarray:
        states = np.asarray(states, dtype=np.float64)
        flat = states.reshape(-1, states.shape[-1])
        return forward(self.net, self.inputs.transform(flat)).reshape(states.shape[:-1])


@dataclass
class RestartResult:
    index: int
    model: PhiModel
    val_constancy: float
    epochs: int = 0
    diverged: bool = False


def _pairs(states: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    D = states.shape[-1]
    return states[:, :-1].reshape(-1, D), states[:, 1:].reshape(-1, D)


def one_step_mse(model: DynamicsModel, states: np.ndarray) -> float:
    """Mean squared one-step prediction error over all (pair, dimension) elements"""
    x, y = _pairs(np.asarray(states, dtype=np.float64))
    return float(np.mean((model.predict(x) - y) ** 2))


def rollout_mse(model: DynamicsModel, states: np.ndarray, horizon: int = ROLLOUT_HORIZON) -> float:
    """Autoregressive error over non-overlapping windows of `horizon` steps"""
    if horizon == 0:
        return 0.0
    states = np.asarray(states, dtype=np.float64)
    T = states.shape[1]
    starts = np.arange(0, T - horizon, horizon)
    if len(starts) == 0:
        raise ValueError(f"trajectories of length {T} are too short for a {horizon}-step rollout")
    x0 = states[:, starts].reshape(-1, states.shape[-1])
    truth = np.stack([states[:, starts + k].reshape(-1, states.shape[-1]) for k in range(1, horizon + 1)])
    predicted = model.rollout(x0, horizon)[1:]
    return float(np.mean((predicted - truth) ** 2))


def train_dynamics(ds: Dataset, cfg: TrainConfig, seed: int = 0) -> DynamicsResult:
    """Fit the one-step model on the train split with early stopping on validation MSE"""
    train = ds.split_states("train")
    val = ds.split_states("val")
    test = ds.split_states("test")
    x, y = _pairs(train)
    inputs = Standardizer.fit(train)
    delta = Standardizer.fit(y - x)
    z = inputs.transform(x)
    target = delta.transform(y - x)

    rng = derive_rng(seed, "dynamics")
    dim = train.shape[-1]
    net = init_mlp((dim, *cfg.hidden, dim), rng)
    state = adam_init(net)
    n_batches = max(1, len(z) // cfg.batch_size)
    total = cfg.max_epochs * n_batches

    best_net, best_val, stale, history = net.copy(), float("inf"), 0, []
    epoch = 0
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(len(z))
        for batch in np.array_split(order, n_batches):
            loss, grads = grad_dyn_loss(net, z[batch], target[batch], cfg.weight_decay)
            if not np.isfinite(loss) or not grads.is_finite():
                raise TrainingDivergedError(
                    f"dynamics loss diverged on {ds.system.name}", epoch,
                    {"loss": float(loss), "lr": cfg.learning_rate(state.step, total), "step": state.step})
            net, state = adam_step(net, grads, state, cfg.learning_rate(state.step, total))
        val_mse = one_step_mse(DynamicsModel(net, inputs, delta), val)
        history.append(val_mse)
        if val_mse < best_val:
            best_net, best_val, stale = net.copy(), val_mse, 0
        else:
            stale += 1
            if stale >= cfg.patience:
                log.debug(f"Dynamics early stop at epoch {epoch}")
                break

    model = DynamicsModel(best_net.freeze(), inputs, delta)
    mse16 = rollout_mse(model, test, min(ROLLOUT_HORIZON, test.shape[1] - 1))
    log.info(f"Dynamics for {ds.system.name}: val MSE {best_val:.3e}, MSE@16 {mse16:.3e} after {epoch} epochs")
    return DynamicsResult(model=model, val_mse=best_val, mse_at_16=mse16, epochs=epoch, history=history)


def _train_restart(index: int, train: np.ndarray, val: np.ndarray, inputs: Standardizer,
                   cfg: TrainConfig, seed: int) -> RestartResult:
    rng = derive_rng(seed, "phi", index)
    net = init_mlp((train.shape[-1], *cfg.hidden, 1), rng)
    state = adam_init(net)
    z = inputs.transform(train)
    n_batches = max(1, len(z) // max(2, cfg.batch_size))
    total = cfg.max_epochs * n_batches

    best = RestartResult(index, PhiModel(net.copy(), inputs), float("inf"))
    stale = 0
    for epoch in range(1, cfg.max_epochs + 1):
        for batch in np.array_split(rng.permutation(len(z)), n_batches):
            loss, grads = grad_phi_loss(net, z[batch], cfg.weight_decay, cfg.eps)
            if not np.isfinite(loss) or not grads.is_finite():
                log.warning(f"Restart {index} diverged at epoch {epoch}")
                if np.isfinite(best.val_constancy):
                    best.epochs = epoch
                else:
                    best = RestartResult(index, PhiModel(net, inputs), float("inf"), epoch, diverged=True)
                best.model.net.freeze()
                return best
            net, state = adam_step(net, grads, state, cfg.learning_rate(state.step, total))
        model = PhiModel(net, inputs)
        score = constancy(list(model.evaluate(val)))
        if score < best.val_constancy:
            best = RestartResult(index, PhiModel(net.copy(), inputs), score, epoch)
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break
    best.model.net.freeze()
    return best


def select_best(results: Sequence[RestartResult]) -> RestartResult:
    """Lowest validation constancy; ties go to the lowest restart index"""
    usable = [r for r in results if not r.diverged and np.isfinite(r.val_constancy)]
    if not usable:
        raise TrainingDivergedError("every phi restart diverged", 0, {"restarts": len(results)})
    best = min(usable, key=lambda r: (r.val_constancy, r.index))
    if best.model is not None:
        best.model.net.freeze()
    return best


def train_phi_restarts(ds: Dataset, restarts: int, cfg: TrainConfig, seed: int = 0,
                       jobs: int = 1) -> Tuple[List[RestartResult], RestartResult]:
    """Independent phi trainings; results do not depend on the job count"""
    if restarts < 1:
        raise ValueError("need at least one restart")
    train = ds.split_states("train")
    val = ds.split_states("val")
    if len(train) < 2 or len(val) < 1:
        raise ValueError("phi training needs at least two training and one validation trajectory")
    inputs = Standardizer.fit(train)

    def run(index: int) -> RestartResult:
        return _train_restart(index, train, val, inputs, cfg, seed)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, range(restarts)))
    else:
        results = [run(i) for i in range(restarts)]

    best = select_best(results)
    summary = ", ".join(f"{r.val_constancy:.3g}" for r in results)
    log.info(f"Phi restarts for {ds.system.name}: [{summary}] -> restart {best.index}")
    return results, best


def invariance_defect(model: DynamicsModel, states: np.ndarray, gradients: np.ndarray,
                      true_drift: np.ndarray) -> Tuple[float, float]:
    """Mean (grad C . mu)^2 for the learned drift mu and its bound max|grad C|^2 * eps^2"""
    states = np.asarray(states, dtype=np.float64)
    gradients = np.asarray(gradients, dtype=np.float64)
    drift = model.predict(states) - states
    defect = float(np.mean(np.sum(gradients * drift, axis=-1) ** 2))
    eps = float(np.max(np.linalg.norm(drift - np.asarray(true_drift, dtype=np.float64), axis=-1)))
    grad_sup = float(np.max(np.linalg.norm(gradients, axis=-1)))
    return defect, grad_sup ** 2 * eps ** 2


def summarize_restarts(results: Sequence[RestartResult]) -> Dict[str, Optional[float]]:
    finite = [r.val_constancy for r in results if np.isfinite(r.val_constancy)]
    return {
        "restarts": len(results),
        "diverged": sum(r.diverged for r in results),
        "best": min(finite) if finite else None,
        "worst": max(finite) if finite else None,
    }
