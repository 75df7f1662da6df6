"""Literal index-tuple summations, kept apart from the FFT code paths they check.

Nothing here touches a transform. The reduced-model right-hand sides are
written in their mode-by-mode form, with every sum restricted to the
index sets named in the closure, so they provide a second route to the
values computed by :mod:`mzrefine.dynamics`.
"""
from __future__ import annotations

import numpy as np

from .spectral import ModeBand, Partition, SpectralField

MAX_ORACLE_M = 64


class OracleTooLargeError(ValueError):
    pass


def _guard(M: int, max_M: int) -> None:
    if M > max_M:
        raise OracleTooLargeError(f"direct summation refused for M={M} > {max_M}")


def _scatter(values: np.ndarray, ksum: np.ndarray, band: ModeBand,
             out: np.ndarray | None = None) -> np.ndarray:
    """Accumulate ``values`` at wavenumbers ``ksum`` that fall inside ``band``."""
    if out is None:
        out = np.zeros(band.M, dtype=complex)
    keep = (ksum >= band.kmin) & (ksum <= band.kmax)
    idx = (ksum[keep] - band.kmin).ravel()
    v = values[keep].ravel()
    out += np.bincount(idx, weights=v.real, minlength=band.M)
    out += 1j * np.bincount(idx, weights=v.imag, minlength=band.M)
    return out


def direct_conv2(a: SpectralField, b: SpectralField, *, max_M: int = MAX_ORACLE_M,
                 a_mask=None, b_mask=None, out_band: ModeBand | None = None) -> np.ndarray:
    """``sum_{p+q=k} a_p b_q`` by enumerating every pair (p, q).

    Optional masks restrict p and q to subsets of the band; ``out_band``
    selects which k are kept (default: the input band).
    """
    band = a.band
    _guard(band.M, max_M)
    k = band.k
    pa = np.ones(band.M, bool) if a_mask is None else a_mask
    pb = np.ones(band.M, bool) if b_mask is None else b_mask
    P, Q = np.meshgrid(k[pa], k[pb], indexing="ij")
    vals = np.outer(a.coeffs[pa], b.coeffs[pb])
    return _scatter(vals, P + Q, out_band or band)


def direct_conv5(z1, z2, z3, z4, z5, *, max_M: int = MAX_ORACLE_M,
                 masks=(None,) * 5, out_band: ModeBand | None = None) -> np.ndarray:
    """``sum_{k1-k2+k3-k4+k5=k} z1 z2* z3 z4* z5`` over every 5-tuple.

    The outermost index is looped in Python; the remaining four are an
    explicit outer product, so memory stays at O(M^4).
    """
    band = z1.band
    _guard(band.M, max_M)
    k = band.k
    sel = [np.ones(band.M, bool) if m is None else m for m in masks]
    cs = [z1.coeffs, np.conj(z2.coeffs), z3.coeffs, np.conj(z4.coeffs), z5.coeffs]
    signs = [1, -1, 1, -1, 1]
    ks = [s * k[m] for s, m in zip(signs, sel)]
    cs = [c[m] for c, m in zip(cs, sel)]
    tail_vals = np.einsum("b,c,d,e->bcde", *cs[1:])
    tail_k = (ks[1][:, None, None, None] + ks[2][None, :, None, None]
              + ks[3][None, None, :, None] + ks[4][None, None, None, :])
    ob = out_band or band
    out = np.zeros(ob.M, dtype=complex)
    for k1, c1 in zip(ks[0], cs[0]):
        if c1 == 0:
            continue
        _scatter(c1 * tail_vals, k1 + tail_k, ob, out)
    return out


def direct_conv_oracle(kind: str, *fields: SpectralField,
                       max_M: int = MAX_ORACLE_M) -> SpectralField:
    if kind == "quadratic":
        if len(fields) != 2:
            raise ValueError("quadratic oracle takes two fields")
        return SpectralField(fields[0].band, direct_conv2(*fields, max_M=max_M))
    if kind == "quintic":
        if len(fields) != 5:
            raise ValueError("quintic oracle takes five fields")
        return SpectralField(fields[0].band, direct_conv5(*fields, max_M=max_M))
    raise ValueError(f"unknown oracle kind {kind!r}")


# reduced models in mode-by-mode form -------------------------------------


def burgers_tmodel_fourier(v: SpectralField, p: Partition, tau: float) -> SpectralField:
    """Burgers t-model, every sum written out over its own index set.

    The second memory sum is read with its inner constraint ``r + s = p``
    (p in G), mirroring the first.
    """
    band = p.band
    k = band.k
    F, G = p.F_mask, p.G_mask
    markov = -0.5j * k * direct_conv2(v, v, a_mask=F, b_mask=F)
    # (-iq/2) sum_{r+s=q, r,s in F} v_r v_s for q in G
    inner_q = np.where(G, -0.5j * k * direct_conv2(v, v, a_mask=F, b_mask=F), 0.0)
    w = SpectralField(band, inner_q)
    first = direct_conv2(v, w, a_mask=F, b_mask=G)
    second = direct_conv2(w, v, a_mask=G, b_mask=F)
    memory = tau * (-0.5j * k) * (first + second)
    return SpectralField(band, np.where(F, markov + memory, 0.0))


def nls_tmodel_fourier(v: SpectralField, p: Partition, tau: float) -> SpectralField:
    """Quintic t-model with ``R_k(v) = i sum_F v v* v v* v`` and the 3i / 2i memory sums."""
    band = p.band
    k = band.k
    F, G = p.F_mask, p.G_mask
    R = 1j * direct_conv5(v, v, v, v, v, masks=(F,) * 5)
    Rf = SpectralField(band, np.where(G, R, 0.0))
    first = direct_conv5(Rf, v, v, v, v, masks=(G, F, F, F, F))
    second = direct_conv5(v, Rf, v, v, v, masks=(F, G, F, F, F))
    rhs = -1j * k**2 * v.coeffs + R + tau * (3j * first + 2j * second)
    return SpectralField(band, np.where(F, rhs, 0.0))
