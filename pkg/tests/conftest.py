import numpy as np
import pytest

from mzrefine.spectral import ModeBand, SpectralField


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def sine(M: int, A: float = 1.0) -> SpectralField:
    return SpectralField.from_modes(ModeBand(M), {1: -0.5j * A, -1: 0.5j * A})


def unit(M: int, k: int, amp: complex = 1.0) -> SpectralField:
    return SpectralField.from_modes(ModeBand(M), {k: amp})
