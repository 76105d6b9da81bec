"""Fixed-step RK4 and adaptive RKF45 with per-sample monitors."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from .errors import ConfigError, ConvergenceError, NumericalError

Monitor = Callable[[float, np.ndarray, np.ndarray], float]


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk4-fixed"
    h: float = 1e-3
    t_start: float = 0.0
    t_end: float = 1.0
    rtol: float = 1e-9
    atol: float = 1e-12
    stride: int = 1
    h_min: float = 1e-8

    def __post_init__(self):
        if self.method not in ("rk4-fixed", "rkf45-adaptive"):
            raise ConfigError(f"unknown integration method {self.method!r}")
        if not self.h > 0:
            raise ConfigError("step h must be positive")
        if not self.t_end > self.t_start:
            raise ConfigError("t_end must exceed t_start")
        if self.stride < 1:
            raise ConfigError("stride must be >= 1")

    @property
    def h_max(self):
        return (self.t_end - self.t_start) / 10.0


@dataclass
class Trajectory:
    t: np.ndarray
    states: np.ndarray
    derivs: np.ndarray
    monitors: Dict[str, np.ndarray]
    accepted: int = 0
    rejected: int = 0
    error: Optional[str] = None

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def ok(self) -> bool:
        return self.error is None

    def monitor_extrema(self) -> dict:
        return {k: (float(np.min(v)), float(np.max(v))) for k, v in self.monitors.items() if len(v)}


class _Recorder:
    def __init__(self, field_fn, monitors):
        self.field_fn = field_fn
        self.monitors = monitors or {}
        self.t, self.s, self.d = [], [], []
        self.m = {k: [] for k in self.monitors}

    def add(self, t, s):
        # derivative is a fresh evaluation, never an integrator stage
        d = np.asarray(self.field_fn(t, s), float)
        self.t.append(t)
        self.s.append(np.array(s))
        self.d.append(d)
        for k, mon in self.monitors.items():
            self.m[k].append(float(mon(t, s, d)))

    def build(self, acc, rej, err):
        return Trajectory(np.array(self.t), np.array(self.s), np.array(self.d),
                          {k: np.array(v) for k, v in self.m.items()}, acc, rej, err)


def _wrap(field_fn):
    """Accept fields written as f(state) or f(t, state)."""
    try:
        import inspect

        if len(inspect.signature(field_fn).parameters) == 1:
            return lambda t, s: field_fn(s)
    except (TypeError, ValueError):
        pass
    return field_fn


def rk4_step(f, t, s, h):
    k1 = f(t, s)
    k2 = f(t + h / 2, s + h / 2 * k1)
    k3 = f(t + h / 2, s + h / 2 * k2)
    k4 = f(t + h, s + h * k3)
    return s + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


# Fehlberg 4(5) tableau
_C = np.array([0, 1 / 4, 3 / 8, 12 / 13, 1, 1 / 2])
_A = [
    [],
    [1 / 4],
    [3 / 32, 9 / 32],
    [1932 / 2197, -7200 / 2197, 7296 / 2197],
    [439 / 216, -8, 3680 / 513, -845 / 4104],
    [-8 / 27, 2, -3544 / 2565, 1859 / 4104, -11 / 40],
]
_B5 = np.array([16 / 135, 0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55])
_B4 = np.array([25 / 216, 0, 1408 / 2565, 2197 / 4104, -1 / 5, 0])


def rkf45_step(f, t, s, h):
    ks = []
    for i in range(6):
        si = s + h * sum(a * k for a, k in zip(_A[i], ks)) if i else s
        ks.append(np.asarray(f(t + _C[i] * h, si), float))
    K = np.array(ks)
    hi = s + h * (_B5 @ K)
    lo = s + h * (_B4 @ K)
    return hi, hi - lo


def integrate(field_fn, state0, config: IntegratorConfig, monitors: Optional[Dict[str, Monitor]] = None) -> Trajectory:
    """Integrate ``field_fn`` from ``state0``; numerical failures truncate the trajectory."""
    f = _wrap(field_fn)
    f_arr = lambda t, s: np.asarray(f(t, s), float)
    rec = _Recorder(f_arr, monitors)
    s = np.array(state0, dtype=float)
    t = config.t_start
    acc = rej = 0
    err = None
    try:
        rec.add(t, s)
        if config.method == "rk4-fixed":
            nsteps = int(round((config.t_end - config.t_start) / config.h))
            h = (config.t_end - config.t_start) / nsteps
            for i in range(1, nsteps + 1):
                s = rk4_step(f_arr, t, s, h)
                t = config.t_start + i * h
                acc += 1
                if i % config.stride == 0 or i == nsteps:
                    rec.add(t, s)
        else:
            h = min(config.h, config.h_max)
            order = 4
            prev_err = 1.0
            since = 0
            while t < config.t_end - 1e-15 * max(1.0, abs(config.t_end)):
                h = min(h, config.t_end - t)
                new, e = rkf45_step(f_arr, t, s, h)
                scale = config.atol + config.rtol * np.maximum(np.abs(s), np.abs(new))
                en = float(np.sqrt(np.mean((e / scale) ** 2))) if len(s) else 0.0
                if en > 1.0 and h <= config.h_min:
                    raise ConvergenceError(f"step underflow (h = {h:.3e})")
                if en <= 1.0:
                    t, s = t + h, new
                    acc += 1
                    since += 1
                    if since % config.stride == 0 or t >= config.t_end - 1e-15:
                        rec.add(t, s)
                    # PI controller on the accepted error history
                    en = max(en, 1e-10)
                    fac = 0.9 * en ** (-0.7 / (order + 1)) * prev_err ** (0.4 / (order + 1))
                    prev_err = en
                    h = h * min(5.0, max(0.2, fac))
                else:
                    rej += 1
                    h = h * max(0.2, 0.9 * en ** (-1.0 / (order + 1)))
                h = min(max(h, config.h_min), config.h_max)
                if not np.all(np.isfinite(s)):
                    raise ConvergenceError("state left the finite range")
            if rec.t[-1] != t:
                rec.add(t, s)
    except (NumericalError, ArithmeticError, np.linalg.LinAlgError) as exc:
        err = f"{type(exc).__name__} at t={t:.6g}: {exc}"
    return rec.build(acc, rej, err)


# -- monitors ----------------------------------------------------------------


def monitor_energy(sys) -> Monitor:
    """Class-scaled energy of a mechanical system (TM or T*M)."""
    from .mech import energy_value

    return lambda t, s, d: energy_value(sys, s)


def monitor_energy_residual(sys) -> Monitor:
    """Per-sample |dE/dt - F.xdot| with the stored (fresh) derivative."""
    from .mech import energy_variation_residual

    return lambda t, s, d: energy_variation_residual(sys, s, d)


def monitor_speed(n: int) -> Monitor:
    return lambda t, s, d: float(np.linalg.norm(s[n:2 * n]))


def monitor_residual(fn) -> Monitor:
    """Wrap ``fn(state, deriv) -> array`` as a max-abs residual monitor."""
    return lambda t, s, d: float(np.max(np.abs(fn(s, d))))
