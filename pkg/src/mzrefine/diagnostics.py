"""Identity residuals, errors against a reference, driver terms and spectra.

The identity checks compare inner products of computed derivatives, not
finite-differenced trajectories, so a failure points at algebra rather than
at time-step error. The right-hand sides of the error identities are rebuilt
term by term through :func:`_wide_product`, which forms products on a grid
wide enough to hold every harmonic; it shares no code with the dealiased
convolutions used by the dynamics.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import Closure, Equation, ModelSpec, evaluate, gamma_of
from .integrator import SimState
from .spectral import (
    BandMismatchError,
    Partition,
    SpectralField,
    inner,
    l2_norm_sq,
    project,
    restrict,
)

RESIDUAL_FLOOR = 1e-30


@dataclass(frozen=True)
class TimeSeriesRecord:
    t: float
    energy: float
    flux_reduced: float | None
    flux_projected: float | None
    err_sq: float | None
    tail_fraction: float
    M: int


def tail_fraction(f: SpectralField) -> float:
    """Share of ``||f||^2`` carried by the top third of the band, ``|k| >= M/3``."""
    e = np.abs(f.coeffs) ** 2
    tot = e.sum()
    if tot == 0:
        return 0.0
    return float(e[np.abs(f.k) >= f.band.M / 3].sum() / tot)


def spectrum(f: SpectralField) -> list[tuple[int, float]]:
    return [(int(k), float(e)) for k, e in zip(f.k, np.abs(f.coeffs) ** 2)]


# decay identity ------------------------------------------------------------


def decay_identity_residual(v: SimState, floor: float = RESIDUAL_FLOOR) -> float:
    """``|Re (v, dv/dt) + tau ||gamma||^2|`` relative to ``tau ||gamma||^2``.

    With zero flux the identity says the inner product vanishes; it is then
    measured against its Cauchy-Schwarz bound ``||v|| ||dv/dt||``.
    """
    if v.spec.closure is not Closure.TMODEL:
        raise ValueError("decay identity applies to t-model states")
    ev = evaluate(v.spec, v.field, v.tau)
    lhs = inner(v.field, ev.rhs).real
    if ev.flux > 0:
        return abs(lhs + ev.flux) / ev.flux
    bound = np.sqrt(l2_norm_sq(v.field) * l2_norm_sq(ev.rhs))
    return abs(lhs) / max(bound, floor)


# error identity -------------------------------------------------------------


def _wide_product(factors: list[np.ndarray], conj: list[bool], M: int) -> np.ndarray:
    """Coefficients (on a band of 8M modes) of the pointwise product of band-M fields."""
    Mw = 8 * M
    L = Mw
    off = (Mw - M) // 2
    vals = np.ones(L, dtype=complex)
    for c, cj in zip(factors, conj):
        buf = np.zeros(Mw, dtype=complex)
        buf[off:off + M] = c
        x = np.fft.ifft(np.fft.ifftshift(buf)) * L
        vals = vals * (np.conj(x) if cj else x)
    return np.fft.fftshift(np.fft.fft(vals)) / L


def _P(wide: np.ndarray, p: Partition) -> np.ndarray:
    M = p.band.M
    off = (wide.size - M) // 2
    return np.where(p.F_mask, wide[off:off + M], 0.0)


def _wide_k(M: int) -> np.ndarray:
    return np.arange(-4 * M, 4 * M)


def _ip(a: np.ndarray, b: np.ndarray) -> complex:
    return complex(2 * np.pi * np.vdot(a, b))


def error_identity_terms(v: SimState, u: SimState) -> dict[str, float]:
    """Both sides of ``d/dt 0.5||v - Pu||^2`` for a t-model state ``v`` and a full state ``u``.

    ``lhs`` uses the dynamics' right-hand sides; the remaining entries are
    the separate inner-product terms, recomputed independently.
    """
    spec = v.spec
    if spec.closure is not Closure.TMODEL or u.spec.closure is not Closure.FULL:
        raise ValueError("need a t-model state and a full-system state")
    p = spec.partition
    if u.field.band.M != p.band.M:
        raise BandMismatchError("full state and t-model partition are on different bands")
    tau = v.tau
    Pu = project(u.field, p, "F")
    w = v.field - Pu
    full = evaluate(u.spec, u.field)
    tm = evaluate(spec, v.field, tau)
    lhs = inner(w, tm.rhs - project(full.rhs, p, "F")).real

    M = p.band.M
    k = _wide_k(M)
    vc, uc, wc = v.field.coeffs, u.field.coeffs, w.coeffs
    gamma = gamma_of(v.field, spec)
    if gamma.band.M != M:
        raise ValueError("error identity is defined for the band-truncated gamma")
    gc = gamma.coeffs
    terms: dict[str, float] = {}
    if spec.equation is Equation.BURGERS:
        PBvv = _P(0.5j * k * _wide_product([vc, vc], [False, False], M), p)
        PBuu = _P(0.5j * k * _wide_product([uc, uc], [False, False], M), p)
        PdvG = _P(1j * k * _wide_product([vc, gc], [False, False], M), p)
        terms["markov"] = -_ip(wc, PBvv - PBuu).real
        terms["memory"] = -tau * _ip(wc, PdvG).real
    else:
        kk = v.field.k.astype(float)
        terms["laplacian"] = _ip(wc, -1j * kk**2 * wc).real
        P5v = _P(_wide_product([vc] * 5, [False, True, False, True, False], M), p)
        P5u = _P(_wide_product([uc] * 5, [False, True, False, True, False], M), p)
        PGv = _P(_wide_product([gc, vc, vc, vc, vc], [False, True, False, True, False], M), p)
        PvG = _P(_wide_product([vc, gc, vc, vc, vc], [False, True, False, True, False], M), p)
        terms["markov"] = (1j * _ip(wc, P5v - P5u)).real
        terms["memory_3"] = _ip(wc, 3j * tau * PGv).real
        terms["memory_2"] = _ip(wc, 2j * tau * PvG).real
    terms["lhs"] = lhs
    return terms


def error_identity_residual(v: SimState, u: SimState, floor: float = RESIDUAL_FLOOR) -> float:
    terms = error_identity_terms(v, u)
    lhs = terms.pop("lhs")
    rhs = sum(terms.values())
    scale = max(abs(lhs), sum(abs(x) for x in terms.values()), floor)
    return abs(lhs - rhs) / scale


def burgers_memory_split_residual(v: SimState, u: SimState,
                                  floor: float = RESIDUAL_FLOOR) -> float:
    """Integration by parts of the Burgers memory term, valid for real fields:

    ``-tau (w, d(v G)/dx) = tau (d(v^2/2)/dx, G) - tau (w dPu/dx, G) - tau (d((Pu)^2/2)/dx, G)``
    with ``w = v - Pu``.
    """
    p = v.spec.partition
    M = p.band.M
    k = _wide_k(M)
    tau = v.tau
    Pu = project(u.field, p, "F")
    wc = (v.field - Pu).coeffs
    vc, pc = v.field.coeffs, Pu.coeffs
    gc = gamma_of(v.field, v.spec).coeffs
    off = 7 * M // 2
    gw = np.zeros(8 * M, dtype=complex)
    gw[off:off + M] = gc
    dpu = 1j * v.field.k * pc
    lhs = -tau * _ip(wc, _P(1j * k * _wide_product([vc, gc], [False, False], M), p))
    t1 = tau * _ip(0.5j * k * _wide_product([vc, vc], [False, False], M), gw)
    t2 = -tau * _ip(_wide_product([wc, dpu], [False, False], M), gw)
    t3 = -tau * _ip(0.5j * k * _wide_product([pc, pc], [False, False], M), gw)
    scale = max(abs(lhs), abs(t1) + abs(t2) + abs(t3), floor)
    return abs(lhs.real - (t1 + t2 + t3).real) / scale


def laplacian_term(w: SpectralField) -> tuple[float, float]:
    """``Re (w, i w_xx)`` and the H1-type scale ``2 pi sum (1 + k^2) |w_k|^2`` it is judged against."""
    k = w.k.astype(float)
    val = inner(w, w.with_coeffs(-1j * k**2 * w.coeffs)).real
    scale = float(2 * np.pi * np.sum((1 + k**2) * np.abs(w.coeffs) ** 2))
    return val, scale


# errors and drivers ----------------------------------------------------------


def error_vs_reference(v: SimState, u_ref: SimState) -> float:
    """``||v - P u_ref||_2`` with P the projection onto v's resolved set."""
    Mv, Mr = v.field.band.M, u_ref.field.band.M
    if Mr < Mv:
        raise BandMismatchError(f"reference band M={Mr} is smaller than M={Mv}")
    ref = restrict(u_ref.field, v.field.band)
    if v.spec.closure is Closure.TMODEL:
        ref = project(ref, v.spec.partition, "F")
    return float(np.sqrt(l2_norm_sq(v.field - ref)))


def driver_terms(u: SimState, p: Partition, tau: float | None = None,
                 nls_weight: float = 1664.0) -> dict[str, float]:
    """``||Qu||^2`` and the tau-weighted projected flux of the full solution."""
    if u.spec.closure is not Closure.FULL:
        raise ValueError("driver terms are evaluated on the full solution")
    tau = u.tau if tau is None else tau
    Qu = project(u.field, p, "G")
    Pu = project(u.field, p, "F")
    spec = ModelSpec(u.spec.equation, Closure.TMODEL, p)
    g = gamma_of(Pu, spec)
    w = 1.0 if u.spec.equation is Equation.BURGERS else nls_weight
    return {"Qu_sq": l2_norm_sq(Qu), "projected_flux": w * tau * l2_norm_sq(g)}


def energy(f: SpectralField) -> float:
    return 0.5 * l2_norm_sq(f)

