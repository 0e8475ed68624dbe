"""Adam and learning-rate schedules."""

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .mlp import Mlp


@dataclass
class AdamState:
    m: Mlp
    v: Mlp
    step: int = 0


def adam_init(net: Mlp) -> AdamState:
    return AdamState(m=net.zeros_like(), v=net.zeros_like(), step=0)


def adam_step(net: Mlp, grads: Mlp, state: AdamState, lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> Tuple[Mlp, AdamState]:
    """One bias-corrected Adam update; returns new network and state"""
    if grads.sizes != net.sizes or state.m.sizes != net.sizes:
        raise ValueError("gradient and optimizer state shapes must match the network")
    step = state.step + 1
    new_net, new_m, new_v = net.copy(), state.m.copy(), state.v.copy()
    c1 = 1.0 - beta1 ** step
    c2 = 1.0 - beta2 ** step
    for p, g, m, v in zip(new_net.parameters(), grads.parameters(), new_m.parameters(), new_v.parameters()):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return new_net, AdamState(m=new_m, v=new_v, step=step)


def one_cycle_lr(step: int, total: int, peak: float, floor: float, warmup_fraction: float = 0.3) -> float:
    """Linear warmup from floor to peak, then cosine decay back to floor"""
    warmup = max(1, int(round(warmup_fraction * total)))
    if step < warmup:
        return floor + (peak - floor) * step / warmup
    progress = min(1.0, (step - warmup) / max(1, total - warmup))
    return floor + (peak - floor) * 0.5 * (1.0 + math.cos(math.pi * progress))


def cosine_lr(step: int, total: int, base: float, floor: float = 0.0) -> float:
    progress = min(1.0, step / max(1, total))
    return floor + (base - floor) * 0.5 * (1.0 + math.cos(math.pi * progress))
