"""Numerical integrators.

Adaptive Dormand-Prince 5(4) for the ODE systems, resampled onto a uniform
grid through the solver's quartic dense output; pseudo-spectral steppers for
viscous Burgers (Strang splitting) and Kuramoto-Sivashinsky (ETD-RK4).
"""

import functools
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .errors import IntegrationError

log = logging.getLogger(__name__)

Field = Callable[[np.ndarray], np.ndarray]


def fft(values: np.ndarray, inverse: bool = False) -> np.ndarray:
    """Discrete Fourier transform along the last axis; the inverse carries the 1/N factor"""
    values = np.asarray(values)
    n = values.shape[-1]
    if n < 1 or n & (n - 1):
        raise ValueError(f"FFT length must be a power of two, got {n}")
    return np.fft.ifft(values, axis=-1) if inverse else np.fft.fft(values, axis=-1)


@dataclass(frozen=True)
class SpectralGrid:
    """Periodic grid of n_x points on [0, length)"""
    n_x: int = 64
    length: float = 2.0 * np.pi

    def __post_init__(self):
        if self.n_x < 2 or self.n_x & (self.n_x - 1):
            raise ValueError(f"n_x must be a power of two, got {self.n_x}")
        if self.length <= 0:
            raise ValueError("domain length must be positive")

    @functools.cached_property
    def x(self) -> np.ndarray:
        return self.length * np.arange(self.n_x) / self.n_x

    @functools.cached_property
    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi / self.length * np.fft.fftfreq(self.n_x, d=1.0 / self.n_x)

    @functools.cached_property
    def derivative_wavenumbers(self) -> np.ndarray:
        # Nyquist mode has no odd-derivative partner
        k = self.wavenumbers.copy()
        k[self.n_x // 2] = 0.0
        return k

    @functools.cached_property
    def dealias_mask(self) -> np.ndarray:
        modes = np.abs(np.fft.fftfreq(self.n_x, d=1.0 / self.n_x))
        return modes <= self.n_x // 3


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# Quartic continuous extension; y(t + theta h) = y + h K^T P [theta, theta^2, theta^3, theta^4]
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_SAFETY = 0.9
_BETA = 0.04
_EXPO = 0.2 - 0.75 * _BETA
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0


@dataclass(frozen=True)
class OdeSolveConfig:
    t_span: Tuple[float, float]
    n_out: int = 500
    abs_tol: float = 1e-9
    rel_tol: float = 1e-9
    max_steps: int = 1_000_000

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.n_out < 2:
            raise ValueError("n_out must be at least 2")
        if not self.t_span[1] > self.t_span[0]:
            raise ValueError("t_span must be increasing")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_span[0], self.t_span[1], self.n_out)


@dataclass
class OdeSolution:
    times: np.ndarray
    states: np.ndarray
    n_accepted: int
    n_rejected: int


def _rms(values: np.ndarray) -> float:
    return float(np.sqrt(np.mean(values * values)))


def _initial_step(field: Field, t0: float, y0: np.ndarray, f0: np.ndarray, cfg: OdeSolveConfig) -> float:
    scale = cfg.abs_tol + cfg.rel_tol * np.abs(y0)
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    f1 = field(y0 + h0 * f0)
    d2 = _rms((f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1, cfg.t_span[1] - t0)


def solve_ode(field: Field, x0: np.ndarray, cfg: OdeSolveConfig, traj_id: Optional[int] = None) -> OdeSolution:
    """Integrate dx/dt = field(x) and sample the solution at cfg.n_out uniform times"""
    y = np.array(x0, dtype=np.float64)
    if y.ndim != 1 or not np.all(np.isfinite(y)):
        raise ValueError("x0 must be a finite state vector")

    t0, t1 = float(cfg.t_span[0]), float(cfg.t_span[1])
    out_times = cfg.times
    out = np.empty((cfg.n_out, y.size))
    out[0] = y
    next_out = 1

    K = np.empty((7, y.size))
    K[0] = field(y)
    if not np.all(np.isfinite(K[0])):
        raise IntegrationError("non-finite derivative at initial state", traj_id)
    h = _initial_step(field, t0, y, K[0], cfg)

    t = t0
    err_old = 1e-4
    rejected_last = False
    n_accepted = n_rejected = 0

    while next_out < cfg.n_out:
        if n_accepted + n_rejected >= cfg.max_steps:
            raise IntegrationError(f"exceeded {cfg.max_steps} steps at t={t:.6g}", traj_id)
        last = t + h >= t1
        if last:
            h = t1 - t

        for s in range(1, 6):
            K[s] = field(y + h * (_A[s] @ K[:s]))
        y_new = y + h * (_B @ K[:6])
        K[6] = field(y_new)

        finite = np.all(np.isfinite(y_new)) and np.all(np.isfinite(K[6]))
        if finite:
            scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            err = _rms(h * (_E @ K) / scale)
        else:
            err = np.inf

        if err <= 1.0:
            t_new = t1 if last else t + h
            Q = K.T @ _P
            while next_out < cfg.n_out and out_times[next_out] <= t_new:
                if next_out == cfg.n_out - 1 and last:
                    out[next_out] = y_new
                else:
                    theta = (out_times[next_out] - t) / h
                    out[next_out] = y + h * (Q @ (theta ** np.arange(1, 5)))
                next_out += 1

            factor = _SAFETY * err ** -_EXPO * err_old ** _BETA if err > 0 else _MAX_FACTOR
            factor = min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
            if rejected_last:
                factor = min(factor, 1.0)
            err_old = max(err, 1e-4)
            rejected_last = False
            t, y = t_new, y_new
            K[0] = K[6]
            n_accepted += 1
        else:
            factor = _MIN_FACTOR if not finite else max(_MIN_FACTOR, _SAFETY * err ** -0.2)
            rejected_last = True
            n_rejected += 1

        h *= factor
        if next_out < cfg.n_out and h < 10.0 * np.finfo(float).eps * max(abs(t), 1.0):
            reason = "non-finite state" if not finite else "step size underflow"
            raise IntegrationError(f"{reason} at t={t:.6g}", traj_id)

    log.debug(f"solve_ode: {n_accepted} accepted, {n_rejected} rejected steps")
    return OdeSolution(times=out_times, states=out, n_accepted=n_accepted, n_rejected=n_rejected)


def _check_field(u: np.ndarray, name: str) -> np.ndarray:
    if not np.all(np.isfinite(u)):
        raise IntegrationError(f"{name} stepper produced a non-finite field")
    return u


def _advection(v_hat: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    u = fft(v_hat, inverse=True).real
    u_x = fft(1j * grid.derivative_wavenumbers * v_hat, inverse=True).real
    return -fft(u * u_x) * grid.dealias_mask


def step_burgers(u: np.ndarray, dt: float, nu: float, grid: SpectralGrid) -> np.ndarray:
    """One Strang step: exact half diffusion, RK4 advection, exact half diffusion"""
    if nu <= 0:
        raise ValueError("viscosity must be positive")
    half = np.exp(-nu * grid.wavenumbers ** 2 * dt / 2.0)
    v = fft(u) * half

    k1 = _advection(v, grid)
    k2 = _advection(v + 0.5 * dt * k1, grid)
    k3 = _advection(v + 0.5 * dt * k2, grid)
    k4 = _advection(v + dt * k3, grid)
    v = v + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    return _check_field(fft(v * half, inverse=True).real, "burgers")


@functools.lru_cache(maxsize=16)
def _etdrk4_coefficients(n_x: int, length: float, dt: float, contour_points: int = 32):
    grid = SpectralGrid(n_x, length)
    k = grid.wavenumbers
    lin = k ** 2 - k ** 4
    E = np.exp(dt * lin)
    E2 = np.exp(dt * lin / 2.0)
    roots = np.exp(1j * np.pi * (np.arange(1, contour_points + 1) - 0.5) / contour_points)
    LR = dt * lin[:, None] + roots[None, :]
    Q = dt * np.real(np.mean((np.exp(LR / 2.0) - 1.0) / LR, axis=1))
    f1 = dt * np.real(np.mean((-4.0 - LR + np.exp(LR) * (4.0 - 3.0 * LR + LR ** 2)) / LR ** 3, axis=1))
    f2 = dt * np.real(np.mean((2.0 + LR + np.exp(LR) * (-2.0 + LR)) / LR ** 3, axis=1))
    f3 = dt * np.real(np.mean((-4.0 - 3.0 * LR - LR ** 2 + np.exp(LR) * (4.0 - LR)) / LR ** 3, axis=1))
    g = -0.5j * grid.derivative_wavenumbers * grid.dealias_mask
    return E, E2, Q, f1, f2, f3, g


def step_ks(u: np.ndarray, dt: float, grid: SpectralGrid) -> np.ndarray:
    """One ETD-RK4 step of u_t = -u u_x - u_xx - u_xxxx"""
    E, E2, Q, f1, f2, f3, g = _etdrk4_coefficients(grid.n_x, grid.length, dt)

    def nonlinear(v_hat: np.ndarray) -> np.ndarray:
        return g * fft(fft(v_hat, inverse=True).real ** 2)

    v = fft(u)
    Nv = nonlinear(v)
    a = E2 * v + Q * Nv
    Na = nonlinear(a)
    b = E2 * v + Q * Na
    Nb = nonlinear(b)
    c = E2 * a + Q * (2.0 * Nb - Nv)
    Nc = nonlinear(c)
    v = E * v + Nv * f1 + 2.0 * (Na + Nb) * f2 + Nc * f3

    return _check_field(fft(v, inverse=True).real, "ks")


def evolve_field(step: Callable[[np.ndarray], np.ndarray], u0: np.ndarray, n_out: int) -> np.ndarray:
    """Field history of n_out snapshots starting at u0"""
    history = np.empty((n_out, np.size(u0)))
    history[0] = u0
    for i in range(1, n_out):
        history[i] = step(history[i - 1])
    return history
