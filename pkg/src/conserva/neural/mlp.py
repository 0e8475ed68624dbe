"""Fully-connected tanh networks with hand-written reverse mode."""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np


@dataclass
class Mlp:
    """Affine layers with tanh between them and an identity output.

    Weights are stored (fan_in, fan_out) so a batch row-vector x maps to x @ W + b.
    A gradient has the same structure as the network it belongs to.
    """
    weights: List[np.ndarray]
    biases: List[np.ndarray]

    @property
    def sizes(self) -> Tuple[int, ...]:
        return (self.weights[0].shape[0],) + tuple(w.shape[1] for w in self.weights)

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def parameters(self) -> List[np.ndarray]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def copy(self) -> "Mlp":
        return Mlp([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def zeros_like(self) -> "Mlp":
        return Mlp([np.zeros_like(w) for w in self.weights], [np.zeros_like(b) for b in self.biases])

    def norm_sq(self) -> float:
        return float(sum(np.sum(p * p) for p in self.parameters()))

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(p)) for p in self.parameters())

    def freeze(self) -> "Mlp":
        for p in self.parameters():
            p.flags.writeable = False
        return self


def init_mlp(sizes: Sequence[int], rng: np.random.Generator) -> Mlp:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias"""
    if len(sizes) < 2:
        raise ValueError("an MLP needs at least input and output sizes")
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return Mlp(weights, biases)


def forward_with_memory(net: Mlp, x: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray]]:
    """Output plus the input to every layer (what backward needs)"""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.sizes[0]:
        raise ValueError(f"expected input of shape (batch, {net.sizes[0]}), got {x.shape}")
    memory = [x]
    a = x
    for w, b in zip(net.weights[:-1], net.biases[:-1]):
        a = np.tanh(a @ w + b)
        memory.append(a)
    return a @ net.weights[-1] + net.biases[-1], memory


def forward(net: Mlp, x: np.ndarray) -> np.ndarray:
    return forward_with_memory(net, x)[0]


def backward(net: Mlp, memory: List[np.ndarray], grad_out: np.ndarray) -> Mlp:
    """Parameter gradients given dLoss/dOutput"""
    grads = net.zeros_like()
    delta = grad_out
    for layer in range(net.n_layers - 1, -1, -1):
        a_in = memory[layer]
        grads.weights[layer] = a_in.T @ delta
        grads.biases[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ net.weights[layer].T) * (1.0 - a_in * a_in)
    return grads


def add_weight_decay(net: Mlp, grads: Mlp, weight_decay: float) -> Tuple[float, Mlp]:
    """Penalty weight_decay * ||params||^2 and its gradient added in place"""
    if weight_decay == 0:
        return 0.0, grads
    for g, p in zip(grads.parameters(), net.parameters()):
        g += 2.0 * weight_decay * p
    return weight_decay * net.norm_sq(), grads


def grad_dyn_loss(net: Mlp, inputs: np.ndarray, targets: np.ndarray,
                  weight_decay: float = 0.0) -> Tuple[float, Mlp]:
    """Mean over pairs of the squared one-step error norm"""
    out, memory = forward_with_memory(net, inputs)
    targets = np.asarray(targets, dtype=np.float64)
    if targets.shape != out.shape:
        raise ValueError(f"targets shape {targets.shape} does not match outputs {out.shape}")
    residual = out - targets
    n = out.shape[0]
    loss = float(np.sum(residual * residual) / n)
    grads = backward(net, memory, 2.0 * residual / n)
    penalty, grads = add_weight_decay(net, grads, weight_decay)
    return loss + penalty, grads


def grad_phi_loss(net: Mlp, trajectories: np.ndarray, weight_decay: float = 1e-4,
                  eps: float = 1e-4) -> Tuple[float, Mlp]:
    """Within-trajectory variance over between-trajectory variance of means, plus L2.

    trajectories has shape (B, T, D) with B >= 2; the network output is scalar.
    """
    trajectories = np.asarray(trajectories, dtype=np.float64)
    if trajectories.ndim != 3 or trajectories.shape[0] < 2:
        raise ValueError("phi loss needs a batch of at least two whole trajectories")
    B, T, D = trajectories.shape
    out, memory = forward_with_memory(net, trajectories.reshape(B * T, D))
    values = out.reshape(B, T)

    means = values.mean(axis=1)
    centered = values - means[:, None]
    numerator = float(np.mean(centered * centered))
    grand = means.mean()
    inter = float(np.mean((means - grand) ** 2))
    denom = inter + eps

    d_num = 2.0 * centered / (B * T)
    d_inter = np.repeat((2.0 * (means - grand) / (B * T))[:, None], T, axis=1)
    d_values = d_num / denom - numerator * d_inter / denom ** 2

    grads = backward(net, memory, d_values.reshape(B * T, 1))
    penalty, grads = add_weight_decay(net, grads, weight_decay)
    return numerator / denom + penalty, grads
