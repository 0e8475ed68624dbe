"""The nine benchmark systems: equations of motion, samplers and true invariants."""

import dataclasses
import functools
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np

from .config import ConfigLoader

log = logging.getLogger(__name__)

ParamSet = Dict[str, float]

SYSTEM_NAMES = (
    "mass_spring",
    "lotka_volterra",
    "coupled_springs",
    "henon_heiles",
    "double_pendulum",
    "lorenz",
    "three_body",
    "burgers",
    "ks",
)
TRUE_LAW_SYSTEMS = ("mass_spring", "lotka_volterra", "coupled_springs", "henon_heiles")
PDE_SYSTEMS = ("burgers", "ks")


@dataclass(frozen=True)
class SystemSpec:
    """Static description of a benchmark system"""
    name: str
    kind: str
    dim: int
    variables: Tuple[str, ...]
    has_true_law: bool
    param_ranges: Tuple[Tuple[str, float, float], ...]
    dt: float
    T: int
    n_traj: int
    initial: Mapping[str, Tuple[float, float]] = field(default_factory=dict)
    extra: Mapping[str, Any] = field(default_factory=dict)

    @property
    def param_names(self) -> Tuple[str, ...]:
        return tuple(name for name, _, _ in self.param_ranges)

    @property
    def varying_params(self) -> Tuple[str, ...]:
        return tuple(name for name, lo, hi in self.param_ranges if hi > lo)

    @property
    def is_pde(self) -> bool:
        return self.kind == "pde"

    def scaled(self, n_traj: Optional[int] = None, T: Optional[int] = None) -> "SystemSpec":
        """Copy with a different trajectory count or horizon"""
        return dataclasses.replace(
            self,
            n_traj=self.n_traj if n_traj is None else int(n_traj),
            T=self.T if T is None else int(T),
        )

    def to_record(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "kind": self.kind,
            "dim": self.dim,
            "variables": list(self.variables),
            "has_true_law": self.has_true_law,
            "param_ranges": [[n, lo, hi] for n, lo, hi in self.param_ranges],
            "dt": self.dt,
            "T": self.T,
            "n_traj": self.n_traj,
        }


def _spec_from_config(name: str, entry: Dict[str, Any]) -> SystemSpec:
    params = entry.get("params") or {}
    extra = {k: v for k, v in entry.items()
             if k not in ("kind", "dim", "variables", "has_true_law", "params", "initial", "dt", "T", "n_traj")}
    return SystemSpec(
        name=name,
        kind=entry["kind"],
        dim=int(entry["dim"]),
        variables=tuple(entry["variables"]),
        has_true_law=bool(entry["has_true_law"]),
        param_ranges=tuple((p, float(lo), float(hi)) for p, (lo, hi) in params.items()),
        dt=float(entry["dt"]),
        T=int(entry["T"]),
        n_traj=int(entry["n_traj"]),
        initial={k: (float(lo), float(hi)) for k, (lo, hi) in (entry.get("initial") or {}).items()},
        extra=extra,
    )


@functools.lru_cache(maxsize=1)
def load_systems() -> Dict[str, SystemSpec]:
    config = ConfigLoader().load_systems()
    specs = {name: _spec_from_config(name, config[name]) for name in SYSTEM_NAMES}
    log.debug(f"Loaded {len(specs)} system specs")
    return specs


def get_system(name: str) -> SystemSpec:
    try:
        return load_systems()[name]
    except KeyError:
        raise ValueError(f"Unknown system: {name}") from None


def _check_state(spec: SystemSpec, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1:] != (spec.dim,):
        raise ValueError(f"{spec.name} expects states of dimension {spec.dim}, got shape {x.shape}")
    return x


def _check_params(spec: SystemSpec, p: Mapping[str, float]) -> None:
    missing = [n for n in spec.param_names if n not in p]
    if missing:
        raise ValueError(f"{spec.name} is missing parameters: {', '.join(missing)}")


# Vector fields. States may carry leading batch axes; the last axis is the state.

def _mass_spring(x: np.ndarray, p: Mapping[str, float]) -> np.ndarray:
    q, mom = x[..., 0], x[..., 1]
    return np.stack([mom / p["m"], -p["k"] * q], axis=-1)


def _lotka_volterra(x: np.ndarray, p: Mapping[str, float]) -> np.ndarray:
    prey, pred = x[..., 0], x[..., 1]
    return np.stack([
        p["alpha"] * prey - p["beta"] * prey * pred,
        p["delta"] * prey * pred - p["gamma"] * pred,
    ], axis=-1)


def _coupled_springs(x: np.ndarray, p: Mapping[str, float]) -> np.ndarray:
    q1, q2, p1, p2 = x[..., 0], x[..., 1], x[..., 2], x[..., 3]
    stretch = q2 - q1
    return np.stack([
        p1,
        p2,
        -p["k1"] * q1 + p["k2"] * stretch,
        -p["k2"] * stretch - p["k3"] * q2,
    ], axis=-1)


def _henon_heiles(x: np.ndarray, p: Mapping[str, float]) -> np.ndarray:
    qx, qy, px, py = x[..., 0], x[..., 1], x[..., 2], x[..., 3]
    return np.stack([
        px,
        py,
        -qx - 2.0 * qx * qy,
        -qy - qx ** 2 + qy ** 2,
    ], axis=-1)


def _double_pendulum(x: np.ndarray, p: Mapping[str, float]) -> np.ndarray:
    # Canonical Hamiltonian form for two point masses on massless rods, d = theta1 - theta2:
    #   s = m1 + m2 sin^2 d
    #   theta1' = (l2 p1 - l1 p2 cos d) / (l1^2 l2 s)
    #   theta2' = ((m1 + m2) l1 p2 - m2 l2 p1 cos d) / (m2 l1 l2^2 s)
    #   h1 = p1 p2 sin d / (l1 l2 s)
    #   h2 = (m2 l2^2 p1^2 + (m1 + m2) l1^2 p2^2 - 2 m2 l1 l2 p1 p2 cos d) sin 2d / (2 l1^2 l2^2 s^2)
    #   p1' = -(m1 + m2) g l1 sin theta1 - h1 + h2
    #   p2' = -m2 g l2 sin theta2 + h1 - h2
    m1, m2, l1, l2, g = p["m1"], p["m2"], p["l1"], p["l2"], p["g"]
    t1, t2, p1, p2 = x[..., 0], x[..., 1], x[..., 2], x[..., 3]
    d = t1 - t2
    cos_d, sin_d = np.cos(d), np.sin(d)
    s = m1 + m2 * sin_d ** 2
    dt1 = (l2 * p1 - l1 * p2 * cos_d) / (l1 ** 2 * l2 * s)
    dt2 = ((m1 + m2) * l1 * p2 - m2 * l2 * p1 * cos_d) / (m2 * l1 * l2 ** 2 * s)
    h1 = p1 * p2 * sin_d / (l1 * l2 * s)
    h2 = ((m2 * l2 ** 2 * p1 ** 2 + (m1 + m2) * l1 ** 2 * p2 ** 2 - 2.0 * m2 * l1 * l2 * p1 * p2 * cos_d)
          * np.sin(2.0 * d) / (2.0 * l1 ** 2 * l2 ** 2 * s ** 2))
    return np.stack([
        dt1,
        dt2,
        -(m1 + m2) * g * l1 * np.sin(t1) - h1 + h2,
        -m2 * g * l2 * np.sin(t2) + h1 - h2,
    ], axis=-1)


def _lorenz(x: np.ndarray, p: Mapping[str, float]) -> np.ndarray:
    a, b, c = x[..., 0], x[..., 1], x[..., 2]
    return np.stack([
        p["sigma"] * (b - a),
        a * (p["rho"] - c) - b,
        a * b - p["beta"] * c,
    ], axis=-1)


def _three_body(x: np.ndarray, p: Mapping[str, float]) -> np.ndarray:
    # Planar circular restricted problem in the co-rotating frame.
    mu = p["mu"]
    px, py, vx, vy = x[..., 0], x[..., 1], x[..., 2], x[..., 3]
    r1 = np.sqrt((px + mu) ** 2 + py ** 2)
    r2 = np.sqrt((px - 1.0 + mu) ** 2 + py ** 2)
    ax = 2.0 * vy + px - (1.0 - mu) * (px + mu) / r1 ** 3 - mu * (px - 1.0 + mu) / r2 ** 3
    ay = -2.0 * vx + py - (1.0 - mu) * py / r1 ** 3 - mu * py / r2 ** 3
    return np.stack([vx, vy, ax, ay], axis=-1)


VECTOR_FIELDS: Dict[str, Callable[[np.ndarray, Mapping[str, float]], np.ndarray]] = {
    "mass_spring": _mass_spring,
    "lotka_volterra": _lotka_volterra,
    "coupled_springs": _coupled_springs,
    "henon_heiles": _henon_heiles,
    "double_pendulum": _double_pendulum,
    "lorenz": _lorenz,
    "three_body": _three_body,
}


def vector_field(name: str, x: np.ndarray, p: Mapping[str, float]) -> np.ndarray:
    """Time derivative of state x under the parameters p"""
    spec = get_system(name)
    if spec.is_pde:
        raise ValueError(f"{name} is a PDE system and has no vector field")
    x = _check_state(spec, x)
    _check_params(spec, p)
    return VECTOR_FIELDS[name](x, p)


def make_field(name: str, p: Mapping[str, float]) -> Callable[[np.ndarray], np.ndarray]:
    """Closure over fixed parameters, suitable for solve_ode"""
    spec = get_system(name)
    if spec.is_pde:
        raise ValueError(f"{name} is a PDE system and has no vector field")
    _check_params(spec, p)
    func = VECTOR_FIELDS[name]
    params = dict(p)
    return lambda x: func(x, params)


# True invariants

def _require_law(name: str) -> SystemSpec:
    spec = get_system(name)
    if not spec.has_true_law:
        raise ValueError(f"{name} has no known conservation law")
    return spec


def _check_positive(x: np.ndarray) -> None:
    if np.any(x <= 0):
        raise ValueError("Lotka-Volterra invariant needs strictly positive states")


def true_invariant(name: str, x: np.ndarray, p: Mapping[str, float]):
    """Closed-form conserved quantity; scalar for one state, array for a batch"""
    spec = _require_law(name)
    x = _check_state(spec, x)
    _check_params(spec, p)
    if name == "mass_spring":
        value = x[..., 1] ** 2 / (2.0 * p["m"]) + 0.5 * p["k"] * x[..., 0] ** 2
    elif name == "lotka_volterra":
        _check_positive(x)
        prey, pred = x[..., 0], x[..., 1]
        value = (p["delta"] * prey - p["gamma"] * np.log(prey)
                 + p["beta"] * pred - p["alpha"] * np.log(pred))
    elif name == "coupled_springs":
        q1, q2, p1, p2 = x[..., 0], x[..., 1], x[..., 2], x[..., 3]
        value = (0.5 * (p1 ** 2 + p2 ** 2) + 0.5 * p["k1"] * q1 ** 2
                 + 0.5 * p["k2"] * (q2 - q1) ** 2 + 0.5 * p["k3"] * q2 ** 2)
    else:
        qx, qy, px, py = x[..., 0], x[..., 1], x[..., 2], x[..., 3]
        value = 0.5 * (px ** 2 + py ** 2) + 0.5 * (qx ** 2 + qy ** 2) + qx ** 2 * qy - qy ** 3 / 3.0
    return float(value) if np.ndim(value) == 0 else value


def true_invariant_gradient(name: str, x: np.ndarray, p: Mapping[str, float]) -> np.ndarray:
    """Analytic state gradient of the true invariant"""
    spec = _require_law(name)
    x = _check_state(spec, x)
    _check_params(spec, p)
    if name == "mass_spring":
        return np.stack([p["k"] * x[..., 0], x[..., 1] / p["m"]], axis=-1)
    if name == "lotka_volterra":
        _check_positive(x)
        return np.stack([p["delta"] - p["gamma"] / x[..., 0],
                         p["beta"] - p["alpha"] / x[..., 1]], axis=-1)
    if name == "coupled_springs":
        q1, q2 = x[..., 0], x[..., 1]
        return np.stack([
            p["k1"] * q1 - p["k2"] * (q2 - q1),
            p["k2"] * (q2 - q1) + p["k3"] * q2,
            x[..., 2],
            x[..., 3],
        ], axis=-1)
    qx, qy = x[..., 0], x[..., 1]
    return np.stack([qx + 2.0 * qx * qy, qy + qx ** 2 - qy ** 2, x[..., 2], x[..., 3]], axis=-1)


# Samplers

def draw_params(spec: SystemSpec, rng: np.random.Generator) -> ParamSet:
    """Independent uniform draw per varying parameter; fixed parameters returned as-is"""
    values: ParamSet = {}
    for pname, lo, hi in spec.param_ranges:
        values[pname] = lo if hi == lo else float(rng.uniform(lo, hi))
    return values


def sample_params(name: str, rng: np.random.Generator) -> ParamSet:
    return draw_params(get_system(name), rng)


def grid_points(spec: SystemSpec) -> np.ndarray:
    n_x = int(spec.extra["grid"]["n_x"])
    length = float(spec.extra["grid"]["length"])
    return length * np.arange(n_x) / n_x


def burgers_initial_field(amplitudes, phases, x: np.ndarray) -> np.ndarray:
    """Sum of a_m sin(m x + phi_m) for m = 1..M"""
    u = np.zeros_like(x, dtype=np.float64)
    for m, (a, phi) in enumerate(zip(amplitudes, phases), start=1):
        u += a * np.sin(m * x + phi)
    return u


def ks_initial_field(amplitudes, phases, x: np.ndarray, length: float = 32.0) -> np.ndarray:
    """Sum of a_m cos(2 pi m x / L + phi_m) for m = 1..M"""
    u = np.zeros_like(x, dtype=np.float64)
    for m, (a, phi) in enumerate(zip(amplitudes, phases), start=1):
        u += a * np.cos(2.0 * np.pi * m * x / length + phi)
    return u


def _sample_box(spec: SystemSpec, rng: np.random.Generator) -> np.ndarray:
    state = np.empty(spec.dim)
    for i, var in enumerate(spec.variables):
        lo, hi = spec.initial[var]
        state[i] = lo if hi == lo else rng.uniform(lo, hi)
    return state


def _sample_henon_heiles(spec: SystemSpec, rng: np.random.Generator) -> np.ndarray:
    max_energy = float(spec.extra["max_energy"])
    while True:
        state = _sample_box(spec, rng)
        if true_invariant("henon_heiles", state, {}) <= max_energy:
            return state


def _sample_three_body(spec: SystemSpec, rng: np.random.Generator) -> np.ndarray:
    mu = spec.param_ranges[0][1]
    radius = float(spec.extra["lagrange_radius"]) * np.sqrt(rng.uniform())
    angle = rng.uniform(0.0, 2.0 * np.pi)
    pos = np.array([0.5 - mu, np.sqrt(3.0) / 2.0]) + radius * np.array([np.cos(angle), np.sin(angle)])
    speed = rng.uniform(-1.0, 1.0) * float(spec.extra["tangential_speed"])
    tangent = np.array([-pos[1], pos[0]]) / np.linalg.norm(pos)
    return np.concatenate([pos, speed * tangent])


def _sample_modes(spec: SystemSpec, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    modes = spec.extra["modes"]
    count = int(rng.integers(int(modes["min_count"]), int(modes["max_count"]) + 1))
    amp = float(modes["amplitude"])
    amplitudes = rng.uniform(-amp, amp, size=count)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=count)
    return amplitudes, phases


def draw_initial_condition(spec: SystemSpec, rng: np.random.Generator) -> np.ndarray:
    """Initial state (ODE) or initial 64-point field (PDE)"""
    name = spec.name
    if name == "burgers":
        amplitudes, phases = _sample_modes(spec, rng)
        return burgers_initial_field(amplitudes, phases, grid_points(spec))
    if name == "ks":
        amplitudes, phases = _sample_modes(spec, rng)
        return ks_initial_field(amplitudes, phases, grid_points(spec), float(spec.extra["grid"]["length"]))
    if name == "henon_heiles":
        return _sample_henon_heiles(spec, rng)
    if name == "three_body":
        return _sample_three_body(spec, rng)
    return _sample_box(spec, rng)


def sample_initial_condition(name: str, rng: np.random.Generator) -> np.ndarray:
    return draw_initial_condition(get_system(name), rng)


def list_systems(kind: Optional[str] = None) -> List[str]:
    specs = load_systems()
    return [n for n in SYSTEM_NAMES if kind is None or specs[n].kind == kind]
