import math

import numpy as np
import pytest

from conftest import sine
from mzrefine.config import parse_config
from mzrefine.dynamics import Closure, ModelSpec
from mzrefine.integrator import SimState
from mzrefine.refinement import (
    Decision,
    MonitorSample,
    RefinementPolicy,
    Strategy,
    check,
    monitor_projected,
    monitor_reduced,
    refine,
    run_adaptive,
)
from mzrefine.spectral import ModeBand, Partition, l2_norm_sq, project
from mzrefine.validation import random_field

P4 = Partition(ModeBand(8))


def full(f, t=0.0, tau=0.0, eq="burgers"):
    return SimState(f, t, tau, ModelSpec(eq, Closure.FULL))


def tmodel(f, p, t=0.0, tau=0.0, eq="burgers"):
    return SimState(f, t, tau, ModelSpec(eq, Closure.TMODEL, p))


def burgers(**kw):
    base = {"equation": "burgers", "initial_condition": {"preset": "sine"},
            "stepper": {"dt": 1e-3, "adapt": False}}
    base.update(kw)
    return parse_config(base)


class TestMonitors:
    def test_reduced_sine(self):
        m = monitor_reduced(tmodel(sine(8), P4, 1.0, 1.0))
        assert m.flux == pytest.approx(math.pi / 8, rel=1e-14)
        assert m.strategy is Strategy.REDUCED
        assert monitor_reduced(tmodel(sine(8), P4)).flux == 0.0

    def test_reduced_no_leakage(self):
        p = Partition(ModeBand(16))
        assert monitor_reduced(tmodel(sine(16), p, 1.0, 1.0)).flux < 1e-30

    def test_projected_sine(self):
        m = monitor_projected(full(sine(8), 1.0, 1.0), P4)
        assert m.flux == pytest.approx(math.pi / 8, rel=1e-14)
        assert monitor_projected(full(sine(8)), P4).flux == 0.0

    def test_projected_no_leakage(self):
        p = Partition(ModeBand(16))
        assert monitor_projected(full(sine(16), 1.0, 1.0), p).flux < 1e-30

    def test_wrong_state_kind(self):
        with pytest.raises(ValueError):
            monitor_reduced(full(sine(8)))
        with pytest.raises(ValueError):
            monitor_projected(tmodel(sine(8), P4), P4)

    @pytest.mark.parametrize("eq", ["burgers", "nls"])
    def test_equal_when_watchdog_is_Pu(self, rng, eq):
        p = Partition(ModeBand(32), "symmetric" if eq == "burgers" else "literal")
        for _ in range(10):
            u = random_field(rng, p.band, real=eq == "burgers")
            tau = float(rng.uniform(0.1, 1))
            a = monitor_reduced(tmodel(project(u, p, "F"), p, tau, tau, eq)).flux
            b = monitor_projected(full(u, tau, tau, eq), p, weight=1.0).flux
            assert abs(a - b) <= 1e-12 * max(a, b)

    def test_nls_weight(self, rng):
        p = Partition(ModeBand(16))
        u = full(random_field(rng, p.band), 1.0, 1.0, "nls")
        assert monitor_projected(u, p).flux == pytest.approx(
            1664 * monitor_projected(u, p, weight=1.0).flux)

    def test_relative_flux(self):
        m = monitor_reduced(tmodel(sine(8), P4, 1.0, 1.0))
        assert m.rel_flux == pytest.approx(m.flux / (0.5 * math.pi))


class TestCheck:
    def sample(self, rel, M):
        return MonitorSample(0.1, 0.1, Strategy.PROJECTED, rel, rel, M)

    def test_rules(self):
        pol = RefinementPolicy(threshold=1e-3, M_max=512)
        assert check(self.sample(5e-4, 64), pol) is Decision.CONTINUE
        assert check(self.sample(2e-3, 64), pol) is Decision.REFINE
        assert check(self.sample(2e-3, 512), pol) is Decision.AT_LIMIT

    def test_cooldown(self):
        pol = RefinementPolicy(threshold=1e-3)
        assert check(self.sample(2e-3, 64), pol, 0.01, 0.05) is Decision.CONTINUE

    def test_absolute_mode(self):
        pol = RefinementPolicy(threshold=1.0, mode="absolute")
        s = MonitorSample(0, 0, Strategy.REDUCED, 0.5, 10.0, 32)
        assert check(s, pol) is Decision.CONTINUE

    def test_infinite_threshold(self):
        pol = RefinementPolicy(threshold=math.inf)
        assert check(self.sample(1e300, 32), pol) is Decision.CONTINUE

    def test_policy_validation(self):
        with pytest.raises(ValueError):
            RefinementPolicy(threshold=0)


class TestRefine:
    def test_prolongation_and_reset(self, rng):
        p = Partition(ModeBand(32), "symmetric")
        u = full(random_field(rng, p.band, real=True), 0.4, 0.3)
        r = refine(u, p, RefinementPolicy())
        assert r.state.field.band.M == 64 and r.partition.M == 64
        assert l2_norm_sq(r.state.field) == l2_norm_sq(u.field)
        assert r.state.tau == 0.0 and r.watchdog.tau == 0.0 and r.state.t == 0.4
        np.testing.assert_array_equal(r.watchdog.field.coeffs,
                                      project(r.state.field, r.partition, "F").coeffs)
        assert (r.event.M_before, r.event.M_after) == (32, 64)

    def test_twice(self):
        p = Partition(ModeBand(32))
        u = full(sine(32))
        events = []
        for _ in range(2):
            r = refine(u, p, RefinementPolicy())
            u, p = r.state, r.partition
            events.append(r.event)
        assert u.field.band.M == 128 and len(events) == 2

    def test_beyond_limit(self):
        with pytest.raises(ValueError):
            refine(full(sine(32)), Partition(ModeBand(32)), RefinementPolicy(M_max=32))


class TestRunAdaptive:
    def test_burgers_cascade(self):
        res = run_adaptive(burgers(M0=32, M_max=512, t_end=1.0))
        ts = [e.t for e in res.events]
        assert res.events and ts[0] < 1.0
        assert all(a < b for a, b in zip(ts, ts[1:]))
        assert all(e.M_after == 2 * e.M_before for e in res.events)
        assert all(b - a >= 10 * 1e-3 for a, b in zip(ts, ts[1:]))
        Ms = [r.M for r in res.series]
        assert Ms == sorted(Ms)
        t = [r.t for r in res.series]
        assert all(a < b for a, b in zip(t, t[1:])) and t[-1] == res.final_state.t

    def test_infinite_threshold_is_fixed_band(self):
        a = run_adaptive(burgers(M0=32, t_end=0.3, policy={"threshold": "inf"}))
        b = run_adaptive(burgers(M0=32, M_max=32, scenario="full", t_end=0.3))
        assert not a.events
        np.testing.assert_array_equal(a.final_state.field.coeffs, b.final_state.field.coeffs)

    def test_small_amplitude_no_events(self):
        res = run_adaptive(burgers(initial_condition={"preset": "sine", "A": 1e-6}, t_end=2.0))
        assert not res.events and res.outcome == "completed"

    def test_at_limit(self):
        res = run_adaptive(burgers(M0=32, M_max=64, t_end=1.0))
        assert res.outcome == "at_limit"
        assert res.final_state.field.band.M == 64

    def test_blow_up_is_an_outcome(self):
        cfg = parse_config({"equation": "nls",
                            "initial_condition": {"preset": "modulated", "A": 10.0},
                            "stepper": {"scheme": "rk4", "dt": 1e-2, "adapt": False},
                            "t_end": 1.0})
        res = run_adaptive(cfg)
        assert res.outcome == "blow_up" and res.message
        assert res.final_state.t < 1.0

    def test_reduced_strategy_runs_watchdog(self):
        res = run_adaptive(burgers(M0=32, M_max=512, t_end=0.8, strategy="reduced"))
        assert res.events and res.watchdog is not None
        assert all(r.flux_reduced is not None and r.err_sq is not None for r in res.series)

    def test_deterministic(self):
        a = run_adaptive(burgers(t_end=0.6))
        b = run_adaptive(burgers(t_end=0.6))
        assert np.array_equal(a.final_state.field.coeffs, b.final_state.field.coeffs)
        assert [e.t for e in a.events] == [e.t for e in b.events]

    def test_spectrum_snapshots(self):
        res = run_adaptive(burgers(t_end=0.5, spectrum_times=[0.0, 0.25, 0.5]))
        assert sorted(res.snapshots) == [0.0, 0.25, 0.5]
