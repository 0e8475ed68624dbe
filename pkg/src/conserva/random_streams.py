"""Seeded random streams.

Every random draw comes from a Philox counter-based generator keyed by
(master seed, stream tag, *indices), so a trajectory or restart sees the same
numbers no matter which worker computes it or in which order.
"""

from typing import Tuple, Union

import numpy as np

STREAM_TAGS = {
    "params": 1,
    "initial": 2,
    "split": 3,
    "noise": 4,
    "dynamics": 5,
    "phi": 6,
    "gp": 7,
    "pairs": 8,
    "bench": 9,
}


def derive_rng(seed: int, tag: str, *indices: int) -> np.random.Generator:
    """Return an independent generator for (seed, tag, indices)"""
    if tag not in STREAM_TAGS:
        raise ValueError(f"Unknown stream tag: {tag}")
    if seed < 0 or any(i < 0 for i in indices):
        raise ValueError("Seeds and stream indices must be non-negative")
    entropy = [int(seed), STREAM_TAGS[tag], *(int(i) for i in indices)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def gaussian(rng: np.random.Generator, shape: Union[int, Tuple[int, ...]]) -> np.ndarray:
    """Standard normal draws by the Box-Muller transform"""
    shape = (shape,) if isinstance(shape, int) else tuple(shape)
    n = int(np.prod(shape, dtype=np.int64))
    pairs = (n + 1) // 2
    u1 = 1.0 - rng.random(pairs)  # (0, 1]
    u2 = rng.random(pairs)
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    z = np.empty(2 * pairs)
    z[0::2] = radius * np.cos(angle)
    z[1::2] = radius * np.sin(angle)
    return z[:n].reshape(shape)


def fisher_yates(rng: np.random.Generator, n: int) -> np.ndarray:
    """Permutation of range(n) by the Durstenfeld variant of Fisher-Yates"""
    order = np.arange(n, dtype=np.int64)
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        order[i], order[j] = order[j], order[i]
    return order
