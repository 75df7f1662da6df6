"""Right-hand sides for the full Galerkin systems and their t-model closures.

Burgers ``u_t + u u_x = 0`` and critical focusing NLS ``i u_t + u_xx + |u|^4 u = 0``
on the 2 pi periodic interval. The reduced models evolve the resolved set F
of a :class:`~mzrefine.spectral.Partition`; ``gamma`` is the part of the
resolved nonlinearity that lands in G, and ``tau * ||gamma||^2`` is the rate
at which the closure drains ``0.5 ||v||^2``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .spectral import (
    ModeBand,
    Partition,
    SpectralField,
    SupportError,
    conv2,
    conv5,
    l2_norm_sq,
    next_pow2,
    project,
    prolong,
    quintic,
    restrict,
    zero_nyquist,
)


class Equation(str, enum.Enum):
    BURGERS = "burgers"
    NLS = "nls"


class Closure(str, enum.Enum):
    FULL = "full"
    TMODEL = "tmodel"


@dataclass(frozen=True)
class ModelSpec:
    equation: Equation
    closure: Closure
    partition: Partition | None = None
    extended_gamma: bool = False

    def __post_init__(self):
        object.__setattr__(self, "equation", Equation(self.equation))
        object.__setattr__(self, "closure", Closure(self.closure))
        if self.closure is Closure.TMODEL and self.partition is None:
            raise ValueError("a t-model needs a partition")
        if self.extended_gamma and self.equation is not Equation.NLS:
            raise ValueError("extended gamma is only defined for NLS")

    def linear_symbol(self, band: ModeBand) -> np.ndarray:
        """Diagonal linear operator in Fourier space (zero for Burgers)."""
        if self.equation is Equation.NLS:
            return -1j * band.k.astype(float) ** 2
        return np.zeros(band.M, dtype=complex)


@dataclass(frozen=True)
class RhsEval:
    rhs: SpectralField
    gamma: SpectralField
    flux: float


def _require_F(v: SpectralField, p: Partition) -> None:
    if v.band.M != p.band.M:
        raise SupportError(f"field band M={v.band.M} does not match partition M={p.band.M}")
    if not v.support_in(p.F_mask):
        raise SupportError("reduced-model state has content outside F")


def _check_tau(tau: float) -> None:
    if not tau >= 0:
        raise ValueError(f"memory clock must be >= 0, got {tau}")


# Burgers -----------------------------------------------------------------


def burgers_B(a: SpectralField, b: SpectralField) -> SpectralField:
    """``d/dx (a b) / 2``."""
    c = conv2(a, b)
    return c.with_coeffs(0.5j * c.k * c.coeffs)


def burgers_full_rhs(u: SpectralField) -> RhsEval:
    rhs = zero_nyquist(-burgers_B(u, u))
    return RhsEval(rhs, SpectralField.zeros(u.band), 0.0)


def burgers_gamma(v: SpectralField, p: Partition) -> SpectralField:
    _require_F(v, p)
    return -project(burgers_B(v, v), p, "G")


def burgers_tmodel_rhs(v: SpectralField, p: Partition, tau: float) -> RhsEval:
    _check_tau(tau)
    _require_F(v, p)
    Bvv = burgers_B(v, v)
    gamma = -project(Bvv, p, "G")
    rhs = -Bvv
    if tau:
        # B[v, G] + B[G, v] = d/dx (v G)
        rhs = rhs - tau * 2.0 * burgers_B(v, gamma)
    return RhsEval(project(rhs, p, "F"), gamma, tau * l2_norm_sq(gamma))


# NLS ---------------------------------------------------------------------


def nls_full_rhs(u: SpectralField, *, linear: bool = True) -> RhsEval:
    nl = quintic(u)
    c = 1j * nl.coeffs
    if linear:
        c = c - 1j * u.k**2 * u.coeffs
    return RhsEval(zero_nyquist(u.with_coeffs(c)), SpectralField.zeros(u.band), 0.0)


def _extended(v: SpectralField, p: Partition) -> tuple[SpectralField, np.ndarray]:
    """``v`` zero-padded onto a band holding all of ``|v|^4 v`` (|k| <= 5N/2),
    plus the F mask on that band."""
    band = ModeBand(next_pow2(5 * p.N))
    off = (band.M - p.M) // 2
    mask = np.zeros(band.M, bool)
    mask[off:off + p.M] = p.F_mask
    return prolong(v, band), mask


def nls_gamma(v: SpectralField, p: Partition, *, extended: bool = False) -> SpectralField:
    """``i (I - P) |v|^4 v``; truncated to the full band unless ``extended``,
    in which case the result lives on a band wide enough to hold all of it."""
    _require_F(v, p)
    if extended:
        ve, F = _extended(v, p)
    else:
        ve, F = v, p.F_mask
    W = quintic(ve)
    return W.with_coeffs(np.where(F, 0.0, 1j * W.coeffs))


def nls_tmodel_rhs(v: SpectralField, p: Partition, tau: float, *,
                   extended: bool = False, linear: bool = True) -> RhsEval:
    _check_tau(tau)
    _require_F(v, p)
    if extended:
        ve, F = _extended(v, p)
    else:
        ve, F = v, p.F_mask
    W = quintic(ve)
    gamma = W.with_coeffs(np.where(F, 0.0, 1j * W.coeffs))
    c = 1j * W.coeffs
    if tau:
        m1 = conv5(gamma, ve, ve, ve, ve)
        m2 = conv5(ve, gamma, ve, ve, ve)
        c = c + tau * (3j * m1.coeffs + 2j * m2.coeffs)
    nl = ve.with_coeffs(np.where(F, c, 0.0))
    if extended:
        nl = restrict(nl, p.band)
    if linear:
        nl = nl + v.with_coeffs(np.where(p.F_mask, -1j * v.k**2 * v.coeffs, 0.0))
    return RhsEval(nl, gamma, tau * l2_norm_sq(gamma))


# dispatch ----------------------------------------------------------------


def gamma_of(v: SpectralField, spec: ModelSpec) -> SpectralField:
    if spec.closure is not Closure.TMODEL:
        return SpectralField.zeros(v.band)
    if spec.equation is Equation.BURGERS:
        return burgers_gamma(v, spec.partition)
    return nls_gamma(v, spec.partition, extended=spec.extended_gamma)


def flux_of(v: SpectralField, tau: float, spec: ModelSpec) -> float:
    """``tau ||gamma(v)||^2``: minus the rate of change of ``0.5 ||v||^2`` under the closure."""
    _check_tau(tau)
    if spec.closure is not Closure.TMODEL or tau == 0:
        return 0.0
    return tau * l2_norm_sq(gamma_of(v, spec))


def evaluate(spec: ModelSpec, w: SpectralField, tau: float = 0.0, *,
             linear: bool = True) -> RhsEval:
    """Right-hand side for ``spec``; ``linear=False`` drops the dispersive term
    (the part an integrating factor handles exactly)."""
    if spec.equation is Equation.BURGERS:
        if spec.closure is Closure.FULL:
            return burgers_full_rhs(w)
        return burgers_tmodel_rhs(w, spec.partition, tau)
    if spec.closure is Closure.FULL:
        return nls_full_rhs(w, linear=linear)
    return nls_tmodel_rhs(w, spec.partition, tau, extended=spec.extended_gamma, linear=linear)
