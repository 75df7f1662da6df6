"""Fourier bands, spectral fields, projections, norms and dealiased convolutions.

Coefficients are stored centered: index ``i`` holds wavenumber ``k = i - M//2``
so the band ``[-M/2, M/2-1]`` maps onto ``0..M-1``. The only place that knows
about FFT ordering is :func:`_fft_index`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal

import numpy as np

TWO_PI = 2.0 * np.pi


class BandMismatchError(ValueError):
    """Operands live on different mode bands."""


class SupportError(ValueError):
    """A field has content outside the set it is required to live on."""


def next_pow2(n: int) -> int:
    return 1 << max(int(np.ceil(n)) - 1, 0).bit_length()


@dataclass(frozen=True)
class ModeBand:
    """Wavenumbers ``-M/2 .. M/2-1``; the ``-M/2`` mode is held at zero when
    ``nyquist_zero`` is set."""

    M: int
    nyquist_zero: bool = True

    def __post_init__(self):
        if not isinstance(self.M, (int, np.integer)) or self.M % 2:
            raise ValueError(f"M must be even, got {self.M!r}")
        if self.M < 4:
            raise ValueError(f"M must be at least 4, got {self.M}")

    @property
    def k(self) -> np.ndarray:
        return _wavenumbers(self.M)

    @property
    def kmin(self) -> int:
        return -self.M // 2

    @property
    def kmax(self) -> int:
        return self.M // 2 - 1

    def index(self, k: int) -> int:
        if not self.kmin <= k <= self.kmax:
            raise IndexError(f"wavenumber {k} outside band M={self.M}")
        return k + self.M // 2


@lru_cache(maxsize=None)
def _wavenumbers(M: int) -> np.ndarray:
    k = np.arange(-M // 2, M // 2)
    k.setflags(write=False)
    return k


@dataclass(frozen=True)
class Partition:
    """Resolved set F = [-N/2, N/2-1] inside the full band, N = M/2; G is the rest.

    ``edge="symmetric"`` moves the lone ``-N/2`` mode from F to G so that both
    sets are closed under ``k -> -k`` (real Burgers fields then stay real
    under the reduced dynamics). The default keeps the literal index sets.
    """

    band: ModeBand
    edge: Literal["literal", "symmetric"] = "literal"

    def __post_init__(self):
        if self.band.M % 4:
            raise ValueError(f"M={self.band.M} must be a multiple of 4 so that N=M/2 is even")
        if self.edge not in ("literal", "symmetric"):
            raise ValueError(f"unknown edge convention {self.edge!r}")

    @classmethod
    def of(cls, M: int, edge: str = "literal") -> "Partition":
        return cls(ModeBand(M), edge)

    @property
    def M(self) -> int:
        return self.band.M

    @property
    def N(self) -> int:
        return self.band.M // 2

    @property
    def F_mask(self) -> np.ndarray:
        return _f_mask(self.band.M, self.edge)

    @property
    def G_mask(self) -> np.ndarray:
        return ~self.F_mask

    @property
    def F(self) -> np.ndarray:
        return self.band.k[self.F_mask]

    @property
    def G(self) -> np.ndarray:
        return self.band.k[self.G_mask]


@lru_cache(maxsize=None)
def _f_mask(M: int, edge: str) -> np.ndarray:
    k = _wavenumbers(M)
    N = M // 2
    lo = -N // 2 + (1 if edge == "symmetric" else 0)
    mask = (k >= lo) & (k <= N // 2 - 1)
    mask.setflags(write=False)
    return mask


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Complex Fourier coefficients on a band. Treated as an immutable value."""

    band: ModeBand
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.band.M,):
            raise ValueError(f"expected {self.band.M} coefficients, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise FloatingPointError("non-finite spectral coefficient")
        if c is self.coeffs and c.flags.writeable:
            c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    # construction -----------------------------------------------------

    @classmethod
    def zeros(cls, band: ModeBand | int) -> "SpectralField":
        band = band if isinstance(band, ModeBand) else ModeBand(band)
        return cls(band, np.zeros(band.M, dtype=complex))

    @classmethod
    def from_modes(cls, band: ModeBand | int, modes: dict[int, complex]) -> "SpectralField":
        band = band if isinstance(band, ModeBand) else ModeBand(band)
        c = np.zeros(band.M, dtype=complex)
        for k, val in modes.items():
            c[band.index(int(k))] = val
        return cls(band, c)

    @classmethod
    def from_physical(cls, band: ModeBand | int, values: np.ndarray) -> "SpectralField":
        """Interpolating coefficients of samples on ``x_j = 2 pi j / L`` with L >= M."""
        band = band if isinstance(band, ModeBand) else ModeBand(band)
        return cls(band, _to_spectral(np.asarray(values, dtype=complex), band.M))

    # access -----------------------------------------------------------

    @property
    def k(self) -> np.ndarray:
        return self.band.k

    def __getitem__(self, k: int) -> complex:
        return complex(self.coeffs[self.band.index(k)])

    def to_physical(self, L: int | None = None) -> np.ndarray:
        """Values of ``sum_k c_k exp(i k x)`` on ``L`` uniform points (default L = M)."""
        return _to_physical(self.coeffs, L or self.band.M)

    def is_hermitian(self, atol: float = 0.0) -> bool:
        """``c_{-k} == conj(c_k)`` on the symmetric part of the band, Nyquist mode zero."""
        c = self.coeffs
        inner = c[1:]
        ok = np.allclose(inner, np.conj(inner[::-1]), rtol=0.0, atol=atol)
        return bool(ok and abs(c[0]) <= atol)

    def support_in(self, mask: np.ndarray) -> bool:
        return not np.any(self.coeffs[~mask])

    # arithmetic -------------------------------------------------------

    def _check(self, other: "SpectralField") -> None:
        if other.band.M != self.band.M:
            raise BandMismatchError(f"band M={self.band.M} vs M={other.band.M}")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.band, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.band, self.coeffs - other.coeffs)

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.band, -self.coeffs)

    def __mul__(self, scalar: complex) -> "SpectralField":
        if isinstance(scalar, SpectralField):
            raise TypeError("use conv2/conv5 for products of fields")
        return SpectralField(self.band, self.coeffs * scalar)

    __rmul__ = __mul__

    def conj_field(self) -> "SpectralField":
        """Coefficients of the complex conjugate function, ``c_k -> conj(c_{-k})``."""
        if self.coeffs[0] != 0:
            raise SupportError("conjugate of a field with a Nyquist mode leaves the band")
        c = np.zeros_like(self.coeffs)
        c[1:] = np.conj(self.coeffs[1:][::-1])
        return SpectralField(self.band, c)

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(self.band, coeffs)

    def __repr__(self) -> str:
        nz = int(np.count_nonzero(self.coeffs))
        return f"SpectralField(M={self.band.M}, nonzero={nz})"


# layout -----------------------------------------------------------------


@lru_cache(maxsize=None)
def _fft_index(M: int, L: int) -> np.ndarray:
    """Positions of the centered band ``[-M/2, M/2-1]`` inside an FFT-ordered array of length L."""
    if L < M:
        raise ValueError(f"transform length {L} smaller than band {M}")
    idx = _wavenumbers(M) % L
    idx.setflags(write=False)
    return idx


def _to_physical(coeffs: np.ndarray, L: int) -> np.ndarray:
    M = coeffs.shape[-1]
    buf = np.zeros(coeffs.shape[:-1] + (L,), dtype=complex)
    buf[..., _fft_index(M, L)] = coeffs
    return np.fft.ifft(buf, axis=-1) * L


def _to_spectral(values: np.ndarray, M: int) -> np.ndarray:
    L = values.shape[-1]
    return np.fft.fft(values, axis=-1)[..., _fft_index(M, L)] / L


def padded_length(M: int, degree: int) -> int:
    """Alias-free transform length for a product of ``degree`` band-M factors."""
    return next_pow2((degree + 1) * M // 2)


# operations -------------------------------------------------------------


def _same_band(*fields: SpectralField) -> ModeBand:
    band = fields[0].band
    for f in fields[1:]:
        if f.band.M != band.M:
            raise BandMismatchError(f"band M={band.M} vs M={f.band.M}")
    return band


def project(f: SpectralField, p: Partition, part: Literal["F", "G"]) -> SpectralField:
    if f.band.M != p.band.M:
        raise BandMismatchError(f"field band M={f.band.M} vs partition band M={p.band.M}")
    if part == "F":
        mask = p.F_mask
    elif part == "G":
        mask = p.G_mask
    else:
        raise ValueError(f"part must be 'F' or 'G', got {part!r}")
    return SpectralField(f.band, np.where(mask, f.coeffs, 0.0))


def conv2(a: SpectralField, b: SpectralField) -> SpectralField:
    """Truncated convolution ``sum_{p+q=k} a_p b_q`` for k in the band."""
    band = _same_band(a, b)
    L = padded_length(band.M, 2)
    prod = _to_physical(a.coeffs, L) * _to_physical(b.coeffs, L)
    return SpectralField(band, _to_spectral(prod, band.M))


def conv5(z1: SpectralField, z2: SpectralField, z3: SpectralField,
          z4: SpectralField, z5: SpectralField) -> SpectralField:
    """Truncated ``sum_{k1-k2+k3-k4+k5=k} z1 z2* z3 z4* z5``, i.e. the
    coefficients of the pointwise product ``z1 conj(z2) z3 conj(z4) z5``."""
    band = _same_band(z1, z2, z3, z4, z5)
    L = padded_length(band.M, 5)
    phys = _to_physical(np.stack([z.coeffs for z in (z1, z2, z3, z4, z5)]), L)
    prod = phys[0] * np.conj(phys[1]) * phys[2] * np.conj(phys[3]) * phys[4]
    return SpectralField(band, _to_spectral(prod, band.M))


def quintic(v: SpectralField) -> SpectralField:
    """``|v|^4 v`` truncated to the band; one transform instead of five."""
    L = padded_length(v.band.M, 5)
    x = _to_physical(v.coeffs, L)
    m = (x * np.conj(x)).real
    return SpectralField(v.band, _to_spectral(m * m * x, v.band.M))


def l2_norm_sq(f: SpectralField) -> float:
    """``int_0^{2 pi} |f|^2 dx`` via Parseval."""
    c = f.coeffs
    return float(TWO_PI * np.sum(c.real**2 + c.imag**2))


def inner(f: SpectralField, g: SpectralField) -> complex:
    """``int_0^{2 pi} conj(f) g dx``."""
    _same_band(f, g)
    return complex(TWO_PI * np.vdot(f.coeffs, g.coeffs))


def prolong(f: SpectralField, new_band: ModeBand | int) -> SpectralField:
    """Zero-pad onto a larger band (exact interpolation)."""
    new_band = new_band if isinstance(new_band, ModeBand) else ModeBand(new_band)
    M, Mn = f.band.M, new_band.M
    if Mn < M:
        raise ValueError(f"cannot prolong M={M} onto smaller band M={Mn}; use restrict")
    c = np.zeros(Mn, dtype=complex)
    off = (Mn - M) // 2
    c[off:off + M] = f.coeffs
    return SpectralField(new_band, c)


def restrict(f: SpectralField, new_band: ModeBand | int) -> SpectralField:
    """Keep the coefficients of ``f`` that fall in a smaller band."""
    new_band = new_band if isinstance(new_band, ModeBand) else ModeBand(new_band)
    M, Mn = f.band.M, new_band.M
    if Mn > M:
        raise ValueError(f"cannot restrict M={M} onto larger band M={Mn}; use prolong")
    off = (M - Mn) // 2
    return SpectralField(new_band, f.coeffs[off:off + Mn])


def zero_nyquist(f: SpectralField) -> SpectralField:
    if not f.band.nyquist_zero or f.coeffs[0] == 0:
        return f
    c = f.coeffs.copy()
    c[0] = 0.0
    return SpectralField(f.band, c)


def derivative(f: SpectralField) -> SpectralField:
    return SpectralField(f.band, 1j * f.k * f.coeffs)
