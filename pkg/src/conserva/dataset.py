"""Benchmark datasets: generation, moment reduction, splits, perturbation and storage."""

import dataclasses
import functools
import hashlib
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import yaml

from . import __version__
from .errors import DatasetFormatError, IntegrationError
from .integrate import OdeSolveConfig, SpectralGrid, evolve_field, solve_ode, step_burgers, step_ks
from .random_streams import derive_rng, fisher_yates, gaussian
from .systems import ParamSet, SystemSpec, draw_initial_condition, draw_params, get_system, make_field

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
SPLIT_NAMES = ("train", "val", "test")
MANIFEST = "manifest.yaml"
BLOBS = {
    "states": ("states.f32", "<f4"),
    "times": ("times.f32", "<f4"),
    "params": ("params.f64", "<f8"),
}


@dataclass(frozen=True)
class Trajectory:
    states: np.ndarray
    params: ParamSet
    traj_id: int


@dataclass(frozen=True)
class MomentSeries:
    mean: np.ndarray
    variance: np.ndarray
    skewness: np.ndarray

    def stacked(self) -> np.ndarray:
        return np.stack([self.mean, self.variance, self.skewness], axis=-1)


@dataclass(frozen=True)
class Dataset:
    """Trajectories of one system with fixed splits; arrays are read-only"""
    system: SystemSpec
    states: np.ndarray
    times: np.ndarray
    params: np.ndarray
    splits: Dict[str, np.ndarray]
    seed: int
    noise_sigma: float = 0.0
    provenance: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        for arr in (self.states, self.times, self.params, *self.splits.values()):
            arr.flags.writeable = False

    @property
    def n_traj(self) -> int:
        return int(self.states.shape[0])

    @property
    def param_names(self) -> Tuple[str, ...]:
        return self.system.param_names

    def param_set(self, index: int) -> ParamSet:
        return {name: float(v) for name, v in zip(self.param_names, self.params[index])}

    def trajectory(self, index: int) -> Trajectory:
        return Trajectory(states=self.states[index], params=self.param_set(index), traj_id=int(index))

    @property
    def trajectories(self) -> List[Trajectory]:
        return [self.trajectory(i) for i in range(self.n_traj)]

    def split(self, name: str) -> List[Trajectory]:
        return [self.trajectory(int(i)) for i in self.splits[name]]

    def split_states(self, name: str) -> np.ndarray:
        """(n, T, D) float64 states of one split"""
        return self.states[self.splits[name]].astype(np.float64)

    def split_params(self, name: str) -> np.ndarray:
        return self.params[self.splits[name]]

    def split_sizes(self) -> Tuple[int, int, int]:
        return tuple(len(self.splits[s]) for s in SPLIT_NAMES)


def reduce_moments(field_history: np.ndarray) -> MomentSeries:
    """Population mean, variance and skewness over space at each time step"""
    u = np.asarray(field_history, dtype=np.float64)
    if np.isnan(u).any():
        raise ValueError("field history contains NaN")
    mean = u.mean(axis=-1)
    centered = u - mean[..., None]
    variance = np.mean(centered ** 2, axis=-1)
    third = np.mean(centered ** 3, axis=-1)
    sigma = np.sqrt(variance)
    with np.errstate(divide="ignore", invalid="ignore"):
        skewness = np.where(sigma > 0, third / sigma ** 3, 0.0)
    return MomentSeries(mean=mean, variance=variance, skewness=skewness)


def split_indices(n_traj: int, seed: int) -> Dict[str, np.ndarray]:
    """Shuffle with the master seed, then slice 70/15/15"""
    order = fisher_yates(derive_rng(seed, "split"), n_traj)
    n_train = n_traj * 70 // 100
    n_val = n_traj * 15 // 100
    return {
        "train": order[:n_train],
        "val": order[n_train:n_train + n_val],
        "test": order[n_train + n_val:],
    }


def simulate_trajectory(spec: SystemSpec, seed: int, traj_id: int) -> Tuple[np.ndarray, ParamSet]:
    """States (T, D) in float64 and parameters of one trajectory"""
    params = draw_params(spec, derive_rng(seed, "params", traj_id))
    x0 = draw_initial_condition(spec, derive_rng(seed, "initial", traj_id))
    try:
        if spec.is_pde:
            grid = SpectralGrid(int(spec.extra["grid"]["n_x"]), float(spec.extra["grid"]["length"]))
            if spec.name == "burgers":
                step = functools.partial(step_burgers, dt=spec.dt, nu=params["nu"], grid=grid)
            else:
                step = functools.partial(step_ks, dt=spec.dt, grid=grid)
            states = reduce_moments(evolve_field(step, x0, spec.T)).stacked()
        else:
            cfg = OdeSolveConfig(t_span=(0.0, (spec.T - 1) * spec.dt), n_out=spec.T)
            states = solve_ode(make_field(spec.name, params), x0, cfg, traj_id=traj_id).states
    except IntegrationError as e:
        raise IntegrationError(str(e), traj_id) if e.traj_id is None else e
    if not np.all(np.isfinite(states)):
        raise IntegrationError("non-finite states", traj_id)
    return states, params


def generate(spec: SystemSpec, seed: int, jobs: int = 1) -> Dataset:
    """Simulate spec.n_traj trajectories; identical output for any job count"""
    log.info(f"Generating {spec.n_traj} trajectories for {spec.name} (T={spec.T}, seed={seed}, jobs={jobs})")
    worker = functools.partial(simulate_trajectory, spec, seed)
    ids = range(spec.n_traj)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(worker, ids, chunksize=max(1, spec.n_traj // (4 * jobs))))
    else:
        results = [worker(i) for i in ids]

    states = np.stack([r[0] for r in results]).astype(np.float32)
    params = np.array([[r[1][n] for n in spec.param_names] for r in results], dtype=np.float64)
    params = params.reshape(spec.n_traj, len(spec.param_names))
    return Dataset(
        system=spec,
        states=states,
        times=(np.arange(spec.T) * spec.dt).astype(np.float32),
        params=params,
        splits=split_indices(spec.n_traj, seed),
        seed=int(seed),
        noise_sigma=0.0,
        provenance={"generator": f"conserva {__version__}", "integrator": "pde-spectral" if spec.is_pde else "dopri54"},
    )


def add_noise(ds: Dataset, sigma: float, seed: int) -> Dataset:
    """Add i.i.d. N(0, sigma^2) to every state entry"""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        return dataclasses.replace(ds, noise_sigma=0.0)
    noise = sigma * gaussian(derive_rng(seed, "noise"), ds.states.shape)
    noisy = (ds.states.astype(np.float64) + noise).astype(np.float32)
    return dataclasses.replace(ds, states=noisy, noise_sigma=float(sigma))


def subsample_train(ds: Dataset, n: int) -> Dataset:
    """Keep the first n shuffled training indices"""
    train = ds.splits["train"]
    if n <= 0:
        raise ValueError("training subsample size must be positive")
    if n > len(train):
        raise ValueError(f"cannot keep {n} of {len(train)} training trajectories")
    splits = {**ds.splits, "train": train[:n].copy()}
    return dataclasses.replace(ds, splits=splits)


def datasets_equal(a: Dataset, b: Dataset) -> bool:
    return (
        a.system.name == b.system.name
        and a.seed == b.seed
        and a.noise_sigma == b.noise_sigma
        and np.array_equal(a.states, b.states)
        and np.array_equal(a.times, b.times)
        and np.array_equal(a.params, b.params)
        and all(np.array_equal(a.splits[s], b.splits[s]) for s in SPLIT_NAMES)
    )


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def save(ds: Dataset, path: Union[str, Path]) -> Path:
    """Write the manifest and little-endian blobs into directory path"""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    arrays = {"states": ds.states, "times": ds.times, "params": ds.params}
    blobs = {}
    for key, (filename, dtype) in BLOBS.items():
        data = np.ascontiguousarray(arrays[key], dtype=dtype).tobytes()
        (path / filename).write_bytes(data)
        blobs[key] = {"file": filename, "dtype": dtype, "shape": list(arrays[key].shape), "sha256": _sha256(data)}

    manifest = {
        "format_version": FORMAT_VERSION,
        "system": ds.system.to_record(),
        "seed": ds.seed,
        "noise_sigma": float(ds.noise_sigma),
        "blobs": blobs,
        "splits": {s: [int(i) for i in ds.splits[s]] for s in SPLIT_NAMES},
        "provenance": dict(ds.provenance),
    }
    with open(path / MANIFEST, "w", encoding="utf-8") as f:
        yaml.safe_dump(manifest, f, sort_keys=True)
    log.info(f"Saved {ds.system.name} dataset to {path}")
    return path


def _read_blob(path: Path, entry: Dict[str, Any]) -> np.ndarray:
    blob_path = path / entry["file"]
    if not blob_path.exists():
        raise DatasetFormatError(f"missing blob {blob_path}")
    data = blob_path.read_bytes()
    shape = tuple(entry["shape"])
    expected = int(np.prod(shape, dtype=np.int64)) * np.dtype(entry["dtype"]).itemsize
    if len(data) != expected:
        raise DatasetFormatError(f"truncated blob {blob_path}: {len(data)} of {expected} bytes")
    if _sha256(data) != entry["sha256"]:
        raise DatasetFormatError(f"checksum mismatch for {blob_path}")
    return np.frombuffer(data, dtype=entry["dtype"]).reshape(shape).copy()


def load(path: Union[str, Path]) -> Dataset:
    path = Path(path)
    manifest_path = path / MANIFEST
    if not manifest_path.exists():
        raise DatasetFormatError(f"no dataset manifest in {path}")
    with open(manifest_path, "r", encoding="utf-8") as f:
        manifest = yaml.safe_load(f)
    if manifest.get("format_version") != FORMAT_VERSION:
        raise DatasetFormatError(
            f"unsupported dataset version {manifest.get('format_version')} (expected {FORMAT_VERSION})")

    record = manifest["system"]
    spec = get_system(record["name"]).scaled(n_traj=record["n_traj"], T=record["T"])
    if spec.dt != record["dt"]:
        raise DatasetFormatError(f"dt mismatch for {spec.name}: {record['dt']} != {spec.dt}")

    arrays = {key: _read_blob(path, manifest["blobs"][key]) for key in BLOBS}
    return Dataset(
        system=spec,
        states=arrays["states"].astype(np.float32),
        times=arrays["times"].astype(np.float32),
        params=arrays["params"].astype(np.float64),
        splits={s: np.asarray(manifest["splits"][s], dtype=np.int64) for s in SPLIT_NAMES},
        seed=int(manifest["seed"]),
        noise_sigma=float(manifest["noise_sigma"]),
        provenance=dict(manifest.get("provenance") or {}),
    )


def dataset_path(root: Union[str, Path], system: str, seed: int, scale: str) -> Path:
    return Path(root) / f"{system}-{scale}-seed{seed}"


def load_or_generate(spec: SystemSpec, seed: int, root: Optional[Union[str, Path]] = None,
                     scale: str = "desk", jobs: int = 1, generate_missing: bool = True) -> Dataset:
    """Reuse a stored dataset when it matches, otherwise generate (and store when root is given).

    With generate_missing=False a missing or mismatched stored dataset raises
    FileNotFoundError instead.
    """
    if root is not None:
        path = dataset_path(root, spec.name, seed, scale)
        if (path / MANIFEST).exists():
            ds = load(path)
            if ds.n_traj == spec.n_traj and ds.system.T == spec.T and ds.seed == seed:
                log.info(f"Loaded {spec.name} dataset from {path}")
                return ds
            log.warning(f"Stored dataset at {path} holds {ds.n_traj}x{ds.system.T} trajectories with seed "
                        f"{ds.seed}, expected {spec.n_traj}x{spec.T} with seed {seed}")
        if not generate_missing:
            raise FileNotFoundError(f"no matching {spec.name} dataset at {path}; run `conserva generate` first")
        ds = generate(spec, seed, jobs=jobs)
        save(ds, path)
        return ds
    return generate(spec, seed, jobs=jobs)

