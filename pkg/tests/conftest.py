"""Test configuration and fixtures for conserva."""

from typing import List

import numpy as np
import pytest

from conserva.dataset import Dataset, Trajectory, generate
from conserva.integrate import OdeSolveConfig, solve_ode
from conserva.neural.training import TrainConfig
from conserva.pipeline import PipelineOptions, options_for
from conserva.random_streams import derive_rng
from conserva.systems import draw_initial_condition, get_system, make_field

TINY_OVERRIDES = {
    "n_traj": 20,
    "T": 40,
    "restarts": 2,
    "gp_samples": 200,
    "dynamics": {"hidden": [8], "max_epochs": 2, "batch_size": 64},
    "phi": {"hidden": [8], "max_epochs": 2, "batch_size": 4},
    "gp": {"iterations": 1, "population_size": 6, "islands": 2, "cycles_per_iteration": 1},
}


def simulate(system: str, params, n: int, T: int, seed: int = 0) -> List[Trajectory]:
    """Float64 trajectories with fixed parameters, integrated directly"""
    spec = get_system(system)
    cfg = OdeSolveConfig(t_span=(0.0, (T - 1) * spec.dt), n_out=T)
    field = make_field(system, params)
    trajs = []
    for i in range(n):
        x0 = draw_initial_condition(spec, derive_rng(seed, "initial", i))
        trajs.append(Trajectory(states=solve_ode(field, x0, cfg).states, params=dict(params), traj_id=i))
    return trajs


@pytest.fixture(scope="session")
def mass_spring_ds() -> Dataset:
    """Small mass-spring dataset with varying k and m"""
    return generate(get_system("mass_spring").scaled(n_traj=20, T=40), seed=42)


@pytest.fixture(scope="session")
def lotka_volterra_ds() -> Dataset:
    return generate(get_system("lotka_volterra").scaled(n_traj=20, T=120), seed=42)


@pytest.fixture(scope="session")
def lorenz_ds() -> Dataset:
    return generate(get_system("lorenz").scaled(n_traj=20, T=40), seed=42)


@pytest.fixture(scope="session")
def henon_heiles_trajs() -> List[Trajectory]:
    """Float64 Henon-Heiles orbits below the escape energy"""
    return simulate("henon_heiles", {}, n=10, T=200)


@pytest.fixture
def tiny_train_config() -> TrainConfig:
    return TrainConfig(hidden=(8, 8), max_epochs=3, batch_size=16, patience=2, schedule="cosine", lr=1e-3)


@pytest.fixture
def tiny_options(tmp_path) -> PipelineOptions:
    """Desk options shrunk to seconds; datasets go under tmp_path"""
    return options_for("desk", data_root=tmp_path / "datasets", **TINY_OVERRIDES)


@pytest.fixture
def rng() -> np.random.Generator:
    return derive_rng(0, "bench")
