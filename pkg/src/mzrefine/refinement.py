"""Flux-triggered spectral refinement.

The full Galerkin system is advanced on F u G. A watchdog quantity, the
rate at which the t-model closure for F would drain ``0.5 ||.||^2`` into G,
is sampled after every accepted step; when it crosses the policy threshold
the band is multiplied by ``growth`` and the memory clock restarts.

Two watchdogs are available:

* ``reduced``: co-integrate the t-model from ``Pu`` and read ``tau ||gamma(v)||^2``;
* ``projected``: evaluate the same functional directly on ``Pu`` (NLS
  weighted by ``nls_weight``, default 1664).
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import __version__
from .config import RunConfig, build_initial_field
from .diagnostics import TimeSeriesRecord, tail_fraction
from .dynamics import (
    Closure,
    Equation,
    ModelSpec,
    gamma_of,
)
from .integrator import (
    IntegrationFailure,
    SimState,
    StepperConfig,
    adaptive_step,
    cfl_dt,
    step,
)
from .spectral import ModeBand, Partition, SpectralField, l2_norm_sq, project, prolong

log = logging.getLogger(__name__)

DEFAULT_NLS_WEIGHT = 1664.0


class Strategy(str, enum.Enum):
    REDUCED = "reduced"
    PROJECTED = "projected"


class Decision(enum.Enum):
    CONTINUE = "continue"
    REFINE = "refine"
    AT_LIMIT = "at_limit"


@dataclass(frozen=True)
class MonitorSample:
    t: float
    tau: float
    strategy: Strategy
    flux: float
    rel_flux: float
    M: int


@dataclass(frozen=True)
class RefinementPolicy:
    threshold: float = 1e-3
    mode: str = "relative"
    growth: int = 2
    M_max: int = 512
    cooldown: float | None = None

    def __post_init__(self):
        if not self.threshold > 0:
            raise ValueError("threshold must be > 0")
        if self.mode not in ("relative", "absolute"):
            raise ValueError(f"unknown threshold mode {self.mode!r}")
        if self.growth < 2:
            raise ValueError("growth must be >= 2")


@dataclass(frozen=True)
class RefinementEvent:
    t: float
    M_before: int
    M_after: int
    trigger: MonitorSample


def _rel(flux: float, resolved: SpectralField) -> float:
    half = 0.5 * l2_norm_sq(resolved)
    return flux / half if half > 0 else 0.0


def monitor_reduced(v_state: SimState) -> MonitorSample:
    spec = v_state.spec
    if spec.closure is not Closure.TMODEL:
        raise ValueError("reduced-model monitor needs a t-model state")
    g = gamma_of(v_state.field, spec)
    flux = v_state.tau * l2_norm_sq(g) if v_state.tau else 0.0
    return MonitorSample(v_state.t, v_state.tau, Strategy.REDUCED, flux,
                         _rel(flux, v_state.field), v_state.field.band.M)


def projected_gamma(Pu: SpectralField, p: Partition, equation: Equation,
                    extended: bool = False) -> SpectralField:
    """The unresolved-flux field evaluated on the projected full solution."""
    spec = ModelSpec(equation, Closure.TMODEL, p, extended_gamma=extended)
    return gamma_of(Pu, spec)


def monitor_projected(u_state: SimState, p: Partition, *, weight: float | None = None,
                      extended: bool = False) -> MonitorSample:
    """``tau ||(I-P) B[Pu, Pu]||^2`` (Burgers) or ``weight tau ||(I-P) B[Pu x5]||^2`` (NLS),
    with ``tau`` the memory clock carried on ``u_state``."""
    spec = u_state.spec
    if spec.closure is not Closure.FULL:
        raise ValueError("projected monitor needs a full-system state")
    Pu = project(u_state.field, p, "F")
    tau = u_state.tau
    if tau:
        g = projected_gamma(Pu, p, spec.equation, extended)
        w = 1.0 if spec.equation is Equation.BURGERS else (
            DEFAULT_NLS_WEIGHT if weight is None else weight)
        flux = w * tau * l2_norm_sq(g)
    else:
        flux = 0.0
    return MonitorSample(u_state.t, tau, Strategy.PROJECTED, flux, _rel(flux, Pu),
                         u_state.field.band.M)


def check(sample: MonitorSample, policy: RefinementPolicy,
          since_last_event: float = math.inf, cooldown: float = 0.0) -> Decision:
    value = sample.rel_flux if policy.mode == "relative" else sample.flux
    if not value > policy.threshold:
        return Decision.CONTINUE
    if sample.M * policy.growth > policy.M_max:
        return Decision.AT_LIMIT
    if since_last_event < cooldown:
        return Decision.CONTINUE
    return Decision.REFINE


@dataclass
class Refined:
    state: SimState
    partition: Partition
    event: RefinementEvent
    watchdog: SimState


def refine(u_state: SimState, p: Partition, policy: RefinementPolicy,
           trigger: MonitorSample | None = None, *, extended: bool = False) -> Refined:
    """Grow the band, zero-pad the solution, reset the memory clock and
    reinitialise the watchdog to ``Pu`` on the new F."""
    M = u_state.field.band.M
    M_new = M * policy.growth
    if M_new > policy.M_max:
        raise ValueError(f"refinement to M={M_new} exceeds M_max={policy.M_max}")
    band = ModeBand(M_new)
    new_p = Partition(band, p.edge)
    u_new = replace(u_state, field=prolong(u_state.field, band), tau=0.0)
    spec_v = ModelSpec(u_state.spec.equation, Closure.TMODEL, new_p, extended_gamma=extended)
    watchdog = SimState(project(u_new.field, new_p, "F"), u_state.t, 0.0, spec_v)
    if trigger is None:
        trigger = MonitorSample(u_state.t, u_state.tau, Strategy.PROJECTED, 0.0, 0.0, M)
    return Refined(u_new, new_p, RefinementEvent(u_state.t, M, M_new, trigger), watchdog)


@dataclass
class RunResult:
    outcome: str
    final_state: SimState
    events: list[RefinementEvent]
    series: list[TimeSeriesRecord]
    samples: list[MonitorSample]
    provenance: dict
    watchdog: SimState | None = None
    message: str = ""
    snapshots: dict[float, SpectralField] = field(default_factory=dict)


Observer = Callable[[SimState, MonitorSample], None]


def run_adaptive(config: RunConfig, observers: tuple[Observer, ...] = ()) -> RunResult:
    """Advance the full system with flux-triggered refinement.

    ``config.scenario == "full"`` runs the same loop with refinement disabled.
    """
    eq = Equation(config.equation)
    stepper = config.stepper_config()
    strategy = Strategy(config.strategy)
    pol = config.policy
    refine_on = config.scenario == "adaptive"
    policy = RefinementPolicy(threshold=pol.threshold if refine_on else math.inf,
                              mode=pol.mode, growth=pol.growth, M_max=config.M_max,
                              cooldown=pol.cooldown)

    u0 = build_initial_field(config.initial_condition, config.M0, config.equation)
    p = Partition(ModeBand(config.M0), config.edge)
    u = SimState(u0, 0.0, 0.0, ModelSpec(eq, Closure.FULL))
    v = None
    if strategy is Strategy.REDUCED:
        v = SimState(project(u0, p, "F"), 0.0, 0.0,
                     ModelSpec(eq, Closure.TMODEL, p, extended_gamma=config.extended_gamma))

    def sample(u: SimState, v: SimState | None):
        proj = monitor_projected(u, p, weight=pol.nls_weight, extended=config.extended_gamma)
        red = monitor_reduced(v) if v is not None else None
        return (red if strategy is Strategy.REDUCED else proj), red, proj

    series: list[TimeSeriesRecord] = []
    samples: list[MonitorSample] = []
    events: list[RefinementEvent] = []
    snapshots: dict[float, SpectralField] = {}

    def record(u, v, red, proj, force=False):
        if not force and n_steps % config.sample_stride:
            return
        err = None
        if v is not None:
            err = l2_norm_sq(v.field - project(u.field, p, "F"))
        series.append(TimeSeriesRecord(
            u.t, 0.5 * l2_norm_sq(u.field), red.flux if red else None,
            proj.flux, err, tail_fraction(u.field), u.field.band.M))

    n_steps = 0
    mon, red, proj = sample(u, v)
    samples.append(mon)
    record(u, v, red, proj, force=True)
    stops = sorted({t for t in config.spectrum_times if 0 <= t <= config.t_end} | {config.t_end})
    if stops and stops[0] == 0.0:
        snapshots[0.0] = u.field
        stops.pop(0)

    dt = _initial_dt(u, stepper)
    last_event_t = -math.inf
    limit_t = None
    outcome, message = "completed", ""
    while u.t < config.t_end:
        target = stops[0]
        remaining = target - u.t
        short = remaining <= dt * (1 + 1e-12)
        h = remaining if short else dt
        try:
            if stepper.adapt:
                u_new, h, nxt = adaptive_step(u, stepper, h)
                if not short:
                    dt = nxt
            else:
                u_new = step(u, stepper, h)
            v_new = step(v, stepper, h) if v is not None else None
            if short and abs(u_new.t - target) <= 1e-12 * max(1.0, target):
                u_new = _pin_time(u_new, target)
                v_new = _pin_time(v_new, target) if v_new is not None else None
            with np.errstate(over="ignore", invalid="ignore"):
                mon, red, proj = sample(u_new, v_new)
        except (IntegrationFailure, FloatingPointError) as exc:
            # a finite state whose monitor overflows is past saving too
            outcome, message = "blow_up", str(exc) or "monitor overflow"
            log.info("integration failure: %s", exc)
            break
        u, v = u_new, v_new
        n_steps += 1
        if u.t >= stops[0]:
            t_stop = stops.pop(0)
            if t_stop in config.spectrum_times:
                snapshots[t_stop] = u.field

        samples.append(mon)
        record(u, v, red, proj, force=not stops)
        for obs in observers:
            obs(u, mon)

        cooldown = pol.cooldown if pol.cooldown is not None else 10 * dt
        decision = check(mon, policy, u.t - last_event_t, cooldown)
        if decision is Decision.REFINE:
            r = refine(u, p, policy, mon, extended=config.extended_gamma)
            log.info("refine at t=%.6g: M %d -> %d", u.t, r.event.M_before, r.event.M_after)
            events.append(r.event)
            u, p = r.state, r.partition
            v = r.watchdog if strategy is Strategy.REDUCED else None
            last_event_t = u.t
            if stepper.dt is None:
                dt = _initial_dt(u, stepper)
        elif decision is Decision.AT_LIMIT and limit_t is None:
            limit_t = u.t
            log.info("band limit M_max=%d reached at t=%.6g", policy.M_max, u.t)
        if limit_t is not None and u.t >= limit_t + pol.grace:
            break
        if not stops:
            break

    if outcome != "blow_up" and limit_t is not None:
        outcome = "at_limit"
    if series and series[-1].t != u.t:
        mon, red, proj = sample(u, v)
        record(u, v, red, proj, force=True)
    provenance = {"config_hash": config.digest(), "code_version": __version__}
    return RunResult(outcome, u, events, series, samples, provenance, v, message, snapshots)


def _initial_dt(u: SimState, cfg: StepperConfig) -> float:
    return cfg.dt if cfg.dt is not None else cfl_dt(u, cfg)


def _pin_time(s: SimState, t: float) -> SimState:
    return replace(s, t=t, tau=max(0.0, s.tau + (t - s.t)))
