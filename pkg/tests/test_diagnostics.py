import math

import pytest

from conftest import sine, unit
from mzrefine.diagnostics import (
    burgers_memory_split_residual,
    decay_identity_residual,
    driver_terms,
    energy,
    error_identity_residual,
    error_identity_terms,
    error_vs_reference,
    laplacian_term,
    spectrum,
    tail_fraction,
)
from mzrefine.dynamics import Closure, ModelSpec
from mzrefine.integrator import SimState
from mzrefine.spectral import BandMismatchError, ModeBand, Partition, SpectralField, project, prolong
from mzrefine.validation import random_field

P4 = Partition(ModeBand(8))


def tm(f, p, tau=0.0, eq="burgers"):
    return SimState(f, tau, tau, ModelSpec(eq, Closure.TMODEL, p))


def fs(f, t=0.0, eq="burgers"):
    return SimState(f, t, 0.0, ModelSpec(eq, Closure.FULL))


class TestDecayIdentity:
    def test_sine_closed_form(self):
        assert decay_identity_residual(tm(sine(8), P4, 1.0)) <= 1e-12

    def test_tau_zero(self, rng):
        p = Partition(ModeBand(16))
        v = random_field(rng, p.band, p.F_mask)
        assert decay_identity_residual(tm(v, p, 0.0, "nls")) <= 1e-12
        assert decay_identity_residual(tm(SpectralField.zeros(16), p, 0.0, "nls")) == 0.0

    @pytest.mark.parametrize("eq", ["burgers", "nls"])
    def test_random(self, rng, eq):
        p = Partition(ModeBand(32), "symmetric" if eq == "burgers" else "literal")
        for _ in range(50):
            v = random_field(rng, p.band, p.F_mask, real=eq == "burgers")
            assert decay_identity_residual(tm(v, p, float(rng.uniform(0, 2)), eq)) <= 1e-10

    def test_rejects_full_state(self):
        with pytest.raises(ValueError):
            decay_identity_residual(fs(sine(8)))


class TestErrorIdentity:
    @pytest.mark.parametrize("eq", ["burgers", "nls"])
    def test_v_equals_Pu(self, rng, eq):
        p = Partition(ModeBand(16), "symmetric" if eq == "burgers" else "literal")
        u = random_field(rng, p.band, real=eq == "burgers")
        terms = error_identity_terms(tm(project(u, p, "F"), p, 0.5, eq), fs(u, 0.5, eq))
        assert all(abs(x) < 1e-14 for x in terms.values())

    @pytest.mark.parametrize("eq", ["burgers", "nls"])
    @pytest.mark.parametrize("edge", ["literal", "symmetric"])
    def test_random_pairs(self, rng, eq, edge):
        p = Partition(ModeBand(32), edge)
        real = eq == "burgers"
        for _ in range(20):
            tau = float(rng.uniform(0.01, 1))
            v = random_field(rng, p.band, p.F_mask, real=real)
            u = random_field(rng, p.band, real=real)
            assert error_identity_residual(tm(v, p, tau, eq), fs(u, tau, eq)) <= 1e-10

    def test_nls_term_names(self, rng):
        p = Partition(ModeBand(16))
        v = random_field(rng, p.band, p.F_mask)
        terms = error_identity_terms(tm(v, p, 0.3, "nls"), fs(random_field(rng, p.band), 0.3, "nls"))
        assert set(terms) == {"laplacian", "markov", "memory_3", "memory_2", "lhs"}
        assert abs(terms["laplacian"]) < 1e-13

    def test_burgers_memory_split(self, rng):
        p = Partition(ModeBand(32), "symmetric")
        for _ in range(20):
            v = random_field(rng, p.band, p.F_mask, real=True)
            u = random_field(rng, p.band, real=True)
            assert burgers_memory_split_residual(tm(v, p, 0.7), fs(u, 0.7)) <= 1e-12

    def test_mismatched_bands(self):
        with pytest.raises(BandMismatchError):
            error_identity_terms(tm(sine(8), P4, 0.1), fs(sine(16), 0.1))

    def test_laplacian_term(self, rng):
        for _ in range(20):
            val, scale = laplacian_term(random_field(rng, ModeBand(64), scale=5.0))
            assert abs(val) <= 1e-12 * scale


class TestErrorsAndDrivers:
    def test_error_vs_reference(self, rng):
        p = Partition(ModeBand(16))
        ref = fs(random_field(rng, ModeBand(64)))
        from mzrefine.spectral import restrict
        Pu = project(restrict(ref.field, p.band), p, "F")
        assert error_vs_reference(tm(Pu, p), ref) == 0.0
        shifted = tm(Pu + unit(16, 1), p)
        assert error_vs_reference(shifted, ref) == pytest.approx(math.sqrt(2 * math.pi))

    def test_error_vs_reference_direction(self):
        with pytest.raises(BandMismatchError):
            error_vs_reference(fs(sine(32)), fs(sine(16)))

    def test_driver_terms(self):
        d = driver_terms(fs(sine(8), 1.0), P4, tau=1.0)
        assert d["projected_flux"] == pytest.approx(math.pi / 8, rel=1e-14)
        assert d["Qu_sq"] == 0.0
        d0 = driver_terms(fs(unit(8, 2), 1.0), P4, tau=0.0)
        assert d0["projected_flux"] == 0.0 and d0["Qu_sq"] == pytest.approx(2 * math.pi)

    def test_spectrum(self):
        s = dict(spectrum(sine(8)))
        assert s[1] == pytest.approx(0.25) and s[-1] == pytest.approx(0.25)
        assert sum(1 for e in s.values() if e) == 2
        assert all(e == 0 for _, e in spectrum(SpectralField.zeros(8)))

    def test_spectrum_parseval(self, rng):
        f = random_field(rng, ModeBand(32))
        assert 2 * math.pi * sum(e for _, e in spectrum(f)) == pytest.approx(2 * energy(f))

    def test_tail_fraction(self):
        assert tail_fraction(sine(32)) == 0.0
        assert tail_fraction(unit(32, 15)) == 1.0
        assert tail_fraction(SpectralField.zeros(8)) == 0.0
        assert tail_fraction(prolong(unit(8, 3), ModeBand(32))) == 0.0
