"""Training points labelled by the selected phi network, for symbolic regression."""

import logging
from dataclasses import dataclass

import numpy as np

from ..dataset import Dataset
from ..random_streams import derive_rng, fisher_yates

log = logging.getLogger(__name__)

DEFAULT_PAIRS = 4096


@dataclass(frozen=True)
class PhiSamples:
    states: np.ndarray
    values: np.ndarray
    traj_index: np.ndarray
    time_index: np.ndarray

    def __len__(self) -> int:
        return int(self.values.shape[0])


def sample_phi_pairs(phi_model, ds: Dataset, n: int = DEFAULT_PAIRS, seed: int = 0) -> PhiSamples:
    """n distinct (trajectory, time) points of the train split with phi outputs.

    phi_model is anything with evaluate(states) taking raw (n, D) states.
    """
    train = np.asarray(ds.splits["train"])
    T = ds.states.shape[1]
    total = len(train) * T
    if n < 1 or n > total:
        raise ValueError(f"cannot draw {n} points from {total} training points")
    flat = fisher_yates(derive_rng(seed, "pairs"), total)[:n]
    traj_index = train[flat // T]
    time_index = flat % T
    states = ds.states[traj_index, time_index].astype(np.float64)
    values = np.asarray(phi_model.evaluate(states), dtype=np.float64).ravel()
    log.debug(f"Sampled {n} phi pairs from {len(train)} training trajectories")
    return PhiSamples(states=states, values=values, traj_index=traj_index, time_index=time_index)
