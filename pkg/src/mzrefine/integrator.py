"""Time stepping: classical RK4 and integrating-factor RK4, with optional
step-doubling error control.

The memory term of a t-model carries an explicit factor of its clock
``tau``, so stages are evaluated at their own ``tau + c_i dt``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Callable, Iterable

import numpy as np

from .dynamics import Closure, Equation, ModelSpec, evaluate
from .spectral import SpectralField


class Scheme(str, enum.Enum):
    RK4 = "rk4"
    IFRK4 = "ifrk4"


class IntegrationFailure(RuntimeError):
    """Raised when a trajectory can no longer be advanced.

    Near a singularity this is an expected outcome: ``last_state`` holds the
    most recent accepted state.
    """

    def __init__(self, message: str, t: float, last_state: "SimState"):
        super().__init__(f"{message} (t={t:.17g})")
        self.t = t
        self.last_state = last_state


@dataclass(frozen=True)
class StepperConfig:
    scheme: Scheme = Scheme.RK4
    dt: float | None = None
    adapt: bool = False
    tol: float = 1e-10
    dt_min: float = 1e-10
    dt_max: float = 1e-2
    cfl_coeff: float = 0.5
    filter_level: float = 1e-13

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 0 < self.dt_min <= self.dt_max:
            raise ValueError("need 0 < dt_min <= dt_max")
        if self.dt is not None and not self.dt_min <= self.dt <= self.dt_max:
            raise ValueError(f"dt={self.dt} outside [{self.dt_min}, {self.dt_max}]")
        if not self.cfl_coeff > 0:
            raise ValueError("cfl_coeff must be positive")
        if self.filter_level < 0:
            raise ValueError("filter_level must be >= 0")


@dataclass(frozen=True)
class SimState:
    field: SpectralField
    t: float
    tau: float
    spec: ModelSpec

    def __post_init__(self):
        if not 0 <= self.tau <= self.t + 1e-12 * max(1.0, abs(self.t)):
            raise ValueError(f"need 0 <= tau <= t, got tau={self.tau}, t={self.t}")
        if self.spec.closure is Closure.TMODEL:
            p = self.spec.partition
            if p.band.M != self.field.band.M or not self.field.support_in(p.F_mask):
                raise ValueError("t-model state must be supported on F")


def default_scheme(equation: Equation) -> Scheme:
    return Scheme.IFRK4 if Equation(equation) is Equation.NLS else Scheme.RK4


def cfl_dt(state: SimState, cfg: StepperConfig) -> float:
    """CFL-like step: advective for Burgers, dispersive/nonlinear for NLS."""
    M = state.field.band.M
    umax = float(np.max(np.abs(state.field.to_physical(2 * M))))
    if state.spec.equation is Equation.BURGERS:
        dt = cfg.cfl_coeff / (M * max(umax, 1e-300))
    else:
        dt = cfg.cfl_coeff * min((2 * np.pi / M) ** 2, 1.0 / max(umax**4, 1e-300))
    return float(np.clip(dt, cfg.dt_min, cfg.dt_max))


def krasny_filter(field: SpectralField, level: float) -> SpectralField:
    """Zero coefficients below ``level * max|c|`` so roundoff cannot seed instabilities."""
    if level <= 0:
        return field
    c = field.coeffs
    a = np.abs(c)
    small = a < level * a.max()
    if not small.any() or not np.any(c[small]):
        return field
    return field.with_coeffs(np.where(small, 0.0, c))


def _rk4(state: SimState, h: float, scheme: Scheme) -> np.ndarray:
    spec, u, tau = state.spec, state.field, state.tau

    def f(c: np.ndarray, dtau: float, linear: bool) -> np.ndarray:
        return evaluate(spec, u.with_coeffs(c), tau + dtau, linear=linear).rhs.coeffs

    c0 = u.coeffs
    if scheme is Scheme.RK4 or spec.equation is Equation.BURGERS:
        k1 = f(c0, 0.0, True)
        k2 = f(c0 + 0.5 * h * k1, 0.5 * h, True)
        k3 = f(c0 + 0.5 * h * k2, 0.5 * h, True)
        k4 = f(c0 + h * k3, h, True)
        return c0 + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    L = spec.linear_symbol(u.band)
    E2 = np.exp(0.5 * h * L)
    E = E2 * E2
    a = h * f(c0, 0.0, False)
    b = h * f(E2 * (c0 + 0.5 * a), 0.5 * h, False)
    c = h * f(E2 * c0 + 0.5 * b, 0.5 * h, False)
    d = h * f(E * c0 + E2 * c, h, False)
    return E * c0 + (E * a + 2 * E2 * (b + c) + d) / 6.0


def _advance(state: SimState, h: float, cfg: StepperConfig) -> SimState:
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            c = _rk4(state, h, cfg.scheme)
    except FloatingPointError:
        # a stage overflowed
        c = np.array([np.nan])
    if not np.all(np.isfinite(c)):
        raise IntegrationFailure("non-finite coefficients", state.t + h, state)
    return replace(state, field=state.field.with_coeffs(c), t=state.t + h, tau=state.tau + h)


def step(state: SimState, cfg: StepperConfig, dt: float | None = None) -> SimState:
    """One fixed step of size ``dt`` (default ``cfg.dt``), then the noise filter."""
    h = cfg.dt if dt is None else dt
    if h is None:
        h = cfl_dt(state, cfg)
    if h == 0:
        return state
    new = _advance(state, h, cfg)
    return replace(new, field=krasny_filter(new.field, cfg.filter_level))


def doubling_error(full: np.ndarray, halves: np.ndarray) -> float:
    """Richardson estimate of the local error of the two-half-step result,
    relative to the largest coefficient."""
    scale = max(float(np.max(np.abs(halves))), 1e-300)
    return float(np.max(np.abs(halves - full))) / (15.0 * scale)


def adaptive_step(state: SimState, cfg: StepperConfig, dt: float) -> tuple[SimState, float, float]:
    """Step-doubling: returns (new state, step taken, suggested next step).

    A rejected attempt halves the step; an error far below ``tol`` lets the
    next step double.
    """
    h = dt
    while True:
        # a short final step onto a stop time is not an underflow
        if h < cfg.dt_min and h < dt:
            raise IntegrationFailure(f"step size underflow below dt_min={cfg.dt_min:g}",
                                     state.t, state)
        full = _advance(state, h, cfg)
        half = _advance(_advance(state, 0.5 * h, cfg), 0.5 * h, cfg)
        err = doubling_error(full.field.coeffs, half.field.coeffs)
        if err <= cfg.tol:
            break
        h *= 0.5
    nxt = h * 2.0 if err < cfg.tol / 32.0 else h
    nxt = min(nxt, cfg.dt_max)
    new = replace(half, field=krasny_filter(half.field, cfg.filter_level))
    return new, h, nxt


Observer = Callable[[SimState], None]


def advance_to(state: SimState, t_end: float, cfg: StepperConfig,
               observers: Iterable[Observer] = ()) -> SimState:
    """Step until ``t_end`` exactly, calling each observer after every accepted step."""
    if t_end < state.t:
        raise ValueError(f"t_end={t_end} is before the current time {state.t}")
    observers = tuple(observers)
    dt = cfg.dt if cfg.dt is not None else cfl_dt(state, cfg)
    while state.t < t_end:
        remaining = t_end - state.t
        last = remaining <= dt * (1 + 1e-12)
        h = remaining if last else dt
        if cfg.adapt:
            new, taken, nxt = adaptive_step(state, cfg, h)
            if not (last and taken == h):
                dt = nxt
        else:
            new = step(state, cfg, h)
        if last and new.t != t_end and abs(new.t - t_end) <= 1e-12 * max(1.0, abs(t_end)):
            new = replace(new, t=t_end, tau=new.tau + (t_end - new.t))
        state = new
        for obs in observers:
            obs(state)
    return state
