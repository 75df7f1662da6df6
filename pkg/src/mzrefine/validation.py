"""Acceptance checks at desk scale, shared by ``mzrefine validate`` and the test suite.

Each check returns measured value, tolerance and verdict; a check also fails
when it overruns its runtime budget.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .config import build_initial_field, parse_config
from .diagnostics import (
    decay_identity_residual,
    error_identity_residual,
    error_vs_reference,
    laplacian_term,
)
from .dynamics import Closure, Equation, ModelSpec, evaluate
from .integrator import Scheme, SimState, StepperConfig, advance_to
from .oracle import direct_conv2, direct_conv5
from .refinement import monitor_projected, monitor_reduced, run_adaptive
from .spectral import (
    ModeBand,
    Partition,
    SpectralField,
    conv2,
    conv5,
    inner,
    l2_norm_sq,
    project,
    restrict,
)

SEED = 20240607


@dataclass(frozen=True)
class Check:
    criterion: int
    name: str
    measured: float
    tolerance: float
    passed: bool
    detail: str = ""
    runtime: float = 0.0
    budget: float = math.inf

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("measured", "tolerance", "budget"):
            if not math.isfinite(d[key]):
                d[key] = str(d[key])
        return d


def random_field(rng: np.random.Generator, band: ModeBand, mask: np.ndarray | None = None,
                 *, real: bool = False, scale: float = 1.0) -> SpectralField:
    """Random coefficients with ``1/(1+|k|)`` decay, Nyquist mode zero.

    ``real`` enforces ``c_{-k} = conj(c_k)``; a mask entry without its mirror
    is then left empty.
    """
    M = band.M
    k = band.k
    c = (rng.standard_normal(M) + 1j * rng.standard_normal(M)) * scale / (1.0 + np.abs(k))
    c[0] = 0.0
    if real:
        c[1:] = 0.5 * (c[1:] + np.conj(c[1:][::-1]))
    if mask is not None:
        keep = mask.copy()
        if real:
            keep[1:] &= keep[1:][::-1]
        c = np.where(keep, c, 0.0)
    return SpectralField(band, c)


def _timed(fn: Callable[[], tuple[float, float, bool, str]], criterion: int, name: str,
           budget: float) -> Check:
    t0 = time.perf_counter()
    measured, tol, ok, detail = fn()
    dt = time.perf_counter() - t0
    if dt > budget:
        detail = f"{detail}; runtime {dt:.1f}s over budget {budget:g}s".lstrip("; ")
        ok = False
    return Check(criterion, name, float(measured), float(tol), bool(ok), detail, dt, budget)


def _rel_err(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def _edge(eq: Equation) -> str:
    return "symmetric" if eq is Equation.BURGERS else "literal"


# 1 ---------------------------------------------------------------------------


def check_oracle(n: int = 100, seed: int = SEED) -> Check:
    def body():
        rng = np.random.default_rng(seed)
        worst2 = worst5 = 0.0
        for i in range(n):
            band = ModeBand((8, 16, 32)[i % 3])
            a, b = random_field(rng, band), random_field(rng, band)
            worst2 = max(worst2, _rel_err(conv2(a, b).coeffs, direct_conv2(a, b)))
        for i in range(n):
            band = ModeBand((8, 16)[i % 2])
            zs = [random_field(rng, band) for _ in range(5)]
            worst5 = max(worst5, _rel_err(conv5(*zs).coeffs, direct_conv5(*zs)))
        worst = max(worst2, worst5)
        return worst, 1e-12, worst <= 1e-12, f"conv2 {worst2:.2e}, conv5 {worst5:.2e}"

    return _timed(body, 1, "convolution oracle equivalence", 10.0)


# 2 ---------------------------------------------------------------------------


def _conservation(eq: str, ic: dict, M: int, t_end: float, dt: float) -> float:
    equation = Equation(eq)
    u0 = build_initial_field(ic, M, eq)
    n0 = l2_norm_sq(u0)
    worst = [0.0]

    def obs(s: SimState):
        worst[0] = max(worst[0], abs(l2_norm_sq(s.field) - n0) / n0)

    scheme = Scheme.RK4 if equation is Equation.BURGERS else Scheme.IFRK4
    state = SimState(u0, 0.0, 0.0, ModelSpec(equation, Closure.FULL))
    advance_to(state, t_end, StepperConfig(scheme=scheme, dt=dt), observers=(obs,))
    return worst[0]


def check_conservation() -> list[Check]:
    out = []
    for eq, ic, M, t_end in (("burgers", {"preset": "sine"}, 256, 0.9),
                             ("nls", {"preset": "modulated"}, 128, 0.5)):
        def body(eq=eq, ic=ic, M=M, t_end=t_end):
            drift = _conservation(eq, ic, M, t_end, 1e-3)
            return drift, 1e-8, drift <= 1e-8, f"M={M}, t in [0, {t_end}]"

        out.append(_timed(body, 2, f"full-system conservation ({eq})", 30.0))
    return out


# 3 ---------------------------------------------------------------------------


def closed_form_decay() -> float:
    """``Re (v, dv/dt)`` for the Burgers t-model at ``v = sin x``, N = 4, tau = 1."""
    p = Partition(ModeBand(8), "literal")
    v = SpectralField.from_modes(p.band, {1: -0.5j, -1: 0.5j})
    rhs = evaluate(ModelSpec(Equation.BURGERS, Closure.TMODEL, p), v, 1.0).rhs
    return inner(v, rhs).real


def check_decay(n: int = 1000, M: int = 32, seed: int = SEED) -> list[Check]:
    def body():
        rng = np.random.default_rng(seed)
        parts = []
        for eq in Equation:
            p = Partition(ModeBand(M), _edge(eq))
            spec = ModelSpec(eq, Closure.TMODEL, p)
            worst = 0.0
            for _ in range(n):
                v = random_field(rng, p.band, p.F_mask, real=eq is Equation.BURGERS)
                tau = float(rng.uniform(0.01, 1.0))
                worst = max(worst, decay_identity_residual(SimState(v, tau, tau, spec)))
            parts.append(worst)
        worst = max(parts)
        return worst, 1e-10, worst <= 1e-10, f"burgers {parts[0]:.2e}, nls {parts[1]:.2e}"

    def closed():
        err = abs(closed_form_decay() + math.pi / 8)
        return err, 1e-12, err <= 1e-12, "v = sin x, N=4, tau=1 against -pi/8"

    return [_timed(body, 3, "decay identity, random states", 20.0),
            _timed(closed, 3, "decay identity, closed form", 20.0)]


# 4 ---------------------------------------------------------------------------


def check_error_identity(n: int = 200, M: int = 32, seed: int = SEED) -> list[Check]:
    def body():
        rng = np.random.default_rng(seed)
        parts = []
        for eq in Equation:
            real = eq is Equation.BURGERS
            p = Partition(ModeBand(M), _edge(eq))
            spec_v = ModelSpec(eq, Closure.TMODEL, p)
            spec_u = ModelSpec(eq, Closure.FULL)
            worst = 0.0
            for _ in range(n):
                tau = float(rng.uniform(0.01, 1.0))
                u = SimState(random_field(rng, p.band, real=real), tau, tau, spec_u)
                v = SimState(random_field(rng, p.band, p.F_mask, real=real), tau, tau, spec_v)
                worst = max(worst, error_identity_residual(v, u))
            parts.append(worst)
        worst = max(parts)
        return worst, 1e-10, worst <= 1e-10, f"burgers {parts[0]:.2e}, nls {parts[1]:.2e}"

    def lap():
        rng = np.random.default_rng(seed + 1)
        worst = 0.0
        for _ in range(n):
            val, scale = laplacian_term(random_field(rng, ModeBand(M), scale=10.0))
            worst = max(worst, abs(val) / scale)
        return worst, 1e-12, worst <= 1e-12, "|Re (w, i w_xx)| / H1 scale"

    return [_timed(body, 4, "error-evolution identity", 20.0),
            _timed(lap, 4, "Laplacian term vanishes", 20.0)]


# 5 ---------------------------------------------------------------------------


def plane_wave_error(M: int = 64, dt: float = 1e-3, t_end: float = 1.0,
                     scheme: Scheme = Scheme.IFRK4) -> float:
    """Max coefficient error against ``2 exp(i (x + 15 t))``."""
    band = ModeBand(M)
    u0 = SpectralField.from_modes(band, {1: 2.0})
    state = SimState(u0, 0.0, 0.0, ModelSpec(Equation.NLS, Closure.FULL))
    final = advance_to(state, t_end, StepperConfig(scheme=scheme, dt=dt))
    exact = SpectralField.from_modes(band, {1: 2.0 * np.exp(15j * t_end)})
    return float(np.max(np.abs(final.field.coeffs - exact.coeffs)))


def check_plane_wave() -> Check:
    def body():
        err = plane_wave_error()
        return err, 1e-7, err <= 1e-7, "IFRK4, fixed dt=1e-3, M=64, t=1"

    return _timed(body, 5, "plane-wave NLS exactness", 10.0)


# 6 ---------------------------------------------------------------------------


def convergence_errors(Ns=(16, 32, 64), M_ref: int = 512, t_end: float = 0.5,
                       dt: float = 1e-3) -> dict[int, float]:
    ic = {"preset": "sine"}
    cfg = StepperConfig(scheme=Scheme.RK4, dt=dt)
    ref = advance_to(SimState(build_initial_field(ic, M_ref, "burgers"), 0.0, 0.0,
                              ModelSpec(Equation.BURGERS, Closure.FULL)), t_end, cfg)
    errs = {}
    for N in Ns:
        p = Partition(ModeBand(2 * N), "symmetric")
        u0 = build_initial_field(ic, 2 * N, "burgers")
        v = SimState(project(u0, p, "F"), 0.0, 0.0, ModelSpec(Equation.BURGERS, Closure.TMODEL, p))
        errs[N] = error_vs_reference(advance_to(v, t_end, cfg), ref)
    return errs


def check_convergence() -> Check:
    def body():
        e = convergence_errors()
        vals = [e[N] for N in sorted(e)]
        monotone = all(a > b for a, b in zip(vals, vals[1:]))
        ratio = e[64] / e[16]
        detail = ", ".join(f"err(N={N})={e[N]:.3e}" for N in sorted(e))
        if not monotone:
            detail += "; not strictly decreasing"
        return ratio, 0.5, monotone and ratio <= 0.5, detail

    return _timed(body, 6, "t-model convergence in N", 60.0)


# 7 ---------------------------------------------------------------------------


def monitor_comparison(M: int = 64, t_end: float = 0.2, dt: float = 1e-3):
    """Both watchdog readings along a Burgers sine trajectory.

    Returns ``(rate_A, rate_B, rows)``: the t = 0+ slopes ``||gamma||^2`` of
    the two monitors and ``(t, flux_A, flux_B)`` after every step.
    """
    p = Partition(ModeBand(M), "symmetric")
    u0 = build_initial_field({"preset": "sine"}, M, "burgers")
    u = SimState(u0, 0.0, 0.0, ModelSpec(Equation.BURGERS, Closure.FULL))
    v = SimState(project(u0, p, "F"), 0.0, 0.0, ModelSpec(Equation.BURGERS, Closure.TMODEL, p))
    spec_v = v.spec
    rate_a = l2_norm_sq(evaluate(spec_v, v.field, 0.0).gamma)
    rate_b = l2_norm_sq(evaluate(spec_v, project(u.field, p, "F"), 0.0).gamma)
    cfg = StepperConfig(scheme=Scheme.RK4, dt=dt)
    rows = []
    while u.t < t_end - 1e-12:
        u = advance_to(u, min(u.t + dt, t_end), cfg)
        v = advance_to(v, u.t, cfg)
        rows.append((u.t, monitor_reduced(v).flux, monitor_projected(u, p).flux))
    return rate_a, rate_b, rows


def _roundoff_floor(tau: float, M: int) -> float:
    # flux carried by coefficient noise of size eps * M in gamma
    return tau * 2 * math.pi * M * (np.finfo(float).eps * M) ** 2


def check_monitors() -> list[Check]:
    cache: dict = {}

    def data():
        if not cache:
            cache["v"] = monitor_comparison()
        return cache["v"]

    def start():
        a, b = data()[:2]
        rel = 0.0 if a == b else abs(a - b) / max(abs(a), abs(b))
        return rel, 1e-12, rel <= 1e-12, f"slopes {a:.3e} and {b:.3e}"

    def window():
        rows = data()[2]
        worst, t_worst, used = 0.0, 0.0, 0
        for t, fa, fb in rows:
            if max(fa, fb) <= _roundoff_floor(t, 64):
                continue
            used += 1
            rel = abs(fa - fb) / max(fa, fb)
            if rel > worst:
                worst, t_worst = rel, t
        return worst, 0.05, worst <= 0.05, f"worst at t={t_worst:.3f} over {used} samples"

    return [_timed(start, 7, "monitor agreement at t=0+", 20.0),
            _timed(window, 7, "monitor agreement on [0, 0.2]", 20.0)]


# 8 ---------------------------------------------------------------------------


def _burgers_cfg(**kw) -> dict:
    base = {"equation": "burgers", "initial_condition": {"preset": "sine"},
            "stepper": {"dt": 1e-3, "adapt": False}, "t_end": 0.9}
    base.update(kw)
    return base


def refinement_study(t_end: float = 0.9):
    adaptive = run_adaptive(parse_config(_burgers_cfg(M0=32, M_max=512, t_end=t_end,
                                                      policy={"threshold": 1e-3})))
    fixed = run_adaptive(parse_config(_burgers_cfg(M0=32, M_max=32, scenario="full", t_end=t_end)))
    ref = run_adaptive(parse_config(_burgers_cfg(M0=512, M_max=512, scenario="full", t_end=t_end)))
    common = ModeBand(32)

    def err(res):
        a = restrict(res.final_state.field, common)
        b = restrict(ref.final_state.field, common)
        return math.sqrt(l2_norm_sq(a - b))

    return adaptive, err(adaptive), err(fixed)


def check_refinement() -> list[Check]:
    cache: dict = {}

    def data():
        if not cache:
            cache["v"] = refinement_study()
        return cache["v"]

    def events():
        adaptive = data()[0]
        early = [e for e in adaptive.events if e.t < 1.0]
        first = f"first at t={early[0].t:.3f}" if early else "none"
        return len(early), 1, len(early) >= 1, f"{len(adaptive.events)} events, {first}"

    def accuracy():
        _, ea, ef = data()
        ratio = ea / ef
        return ratio, 0.1, ratio <= 0.1, f"adaptive {ea:.3e} vs fixed {ef:.3e} at t=0.9"

    return [_timed(events, 8, "refinement occurs before t=1", 120.0),
            _timed(accuracy, 8, "adaptive error vs fixed M=32", 120.0)]


# 9 ---------------------------------------------------------------------------


def check_null() -> list[Check]:
    out = []
    for strategy in ("projected", "reduced"):
        def body(strategy=strategy):
            cfg = parse_config({"equation": "nls", "initial_condition": {"preset": "plane_wave"},
                                "M0": 32, "M_max": 512, "t_end": 1.0, "strategy": strategy})
            res = run_adaptive(cfg)
            fmax = max(s.flux for s in res.samples)
            ok = not res.events and fmax <= 1e-20
            return fmax, 1e-20, ok, f"{len(res.events)} events, outcome {res.outcome}"

        out.append(_timed(body, 9, f"zero-transfer null test ({strategy})", 10.0))
    return out


SUITES: dict[str, Callable[[], Check | list[Check]]] = {
    "oracle": check_oracle,
    "conservation": check_conservation,
    "decay": check_decay,
    "error_identity": check_error_identity,
    "plane_wave": check_plane_wave,
    "convergence": check_convergence,
    "monitors": check_monitors,
    "refinement": check_refinement,
    "null": check_null,
}


def run_suites(names=None) -> list[Check]:
    out: list[Check] = []
    for name in names or SUITES:
        res = SUITES[name]()
        out.extend(res if isinstance(res, list) else [res])
    return out


def format_line(c: Check) -> str:
    verdict = "PASS" if c.passed else "FAIL"
    return (f"[{verdict}] criterion {c.criterion}: {c.name}: measured {c.measured:.3e} "
            f"(limit {c.tolerance:.3e}) [{c.runtime:.1f}s] {c.detail}")


def format_table(checks: list[Check]) -> str:
    lines = [format_line(c) for c in checks]
    n_ok = sum(c.passed for c in checks)
    lines.append(f"{n_ok}/{len(checks)} checks passed")
    return "\n".join(lines)
