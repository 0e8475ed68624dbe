"""Small tanh networks, Adam, and the two training loops."""

from .mlp import Mlp, backward, forward, grad_dyn_loss, grad_phi_loss, init_mlp
from .optim import AdamState, adam_init, adam_step, cosine_lr, one_cycle_lr
from .training import (
    DynamicsModel,
    DynamicsResult,
    PhiModel,
    RestartResult,
    Standardizer,
    TrainConfig,
    select_best,
    train_dynamics,
    train_phi_restarts,
)

__all__ = [
    "AdamState",
    "DynamicsModel",
    "DynamicsResult",
    "Mlp",
    "PhiModel",
    "RestartResult",
    "Standardizer",
    "TrainConfig",
    "adam_init",
    "adam_step",
    "backward",
    "cosine_lr",
    "forward",
    "grad_dyn_loss",
    "grad_phi_loss",
    "init_mlp",
    "one_cycle_lr",
    "select_best",
    "train_dynamics",
    "train_phi_restarts",
]
