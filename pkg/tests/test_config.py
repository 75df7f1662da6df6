import json
import math

import numpy as np
import pytest

from mzrefine.config import ConfigError, build_initial_field, parse_config
from mzrefine.integrator import Scheme
from mzrefine.spectral import l2_norm_sq

MINIMAL = {"equation": "burgers", "initial_condition": {"preset": "sine"}}


def with_(**kw):
    d = json.loads(json.dumps(MINIMAL))
    d.update(kw)
    return d


class TestDefaults:
    def test_minimal_burgers(self):
        cfg = parse_config(json.dumps(MINIMAL))
        assert cfg.policy.threshold == 1e-3
        assert cfg.policy.growth == 2
        assert cfg.strategy == "projected"
        assert cfg.scenario == "adaptive"
        assert cfg.edge == "symmetric"
        assert cfg.stepper_config().scheme is Scheme.RK4

    def test_nls_defaults(self):
        cfg = parse_config({"equation": "nls", "initial_condition": {"preset": "plane_wave"}})
        assert cfg.stepper_config().scheme is Scheme.IFRK4
        assert cfg.edge == "literal"

    def test_infinite_threshold(self):
        cfg = parse_config(with_(policy={"threshold": "inf"}))
        assert math.isinf(cfg.policy.threshold)

    def test_digest_stable(self):
        a = parse_config(with_(seed=3)).digest()
        assert a == parse_config(with_(seed=3)).digest()
        assert a != parse_config(with_(seed=4)).digest()


class TestRejections:
    def test_odd_M(self):
        with pytest.raises(ConfigError, match="M must be even"):
            parse_config(with_(M0=33))

    @pytest.mark.parametrize("thr", [0, -1e-3])
    def test_nonpositive_threshold(self, thr):
        with pytest.raises(ConfigError, match="threshold"):
            parse_config(with_(policy={"threshold": thr}))

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="colour"):
            parse_config(with_(colour="red"))
        with pytest.raises(ConfigError, match="policy"):
            parse_config(with_(policy={"treshold": 1}))

    def test_missing_key(self):
        with pytest.raises(ConfigError, match="initial_condition"):
            parse_config({"equation": "burgers"})

    def test_malformed(self):
        with pytest.raises(ConfigError, match="malformed"):
            parse_config("{not json")

    @pytest.mark.parametrize("bad", [
        {"M0": 24}, {"M_max": 16}, {"M0": 64, "M_max": 192}, {"t_end": 0},
        {"scenario": "magic"}, {"policy": {"growth": 3}}, {"stepper": {"dt": 1.0}},
        {"initial_condition": {"preset": "plane_wave"}},
        {"initial_condition": {"coefficients": [[1, 0.0, 1.0]]}},
        {"initial_condition": {"coefficients": [[-16, 1.0]]}},
        {"extended_gamma": True},
    ])
    def test_constraints(self, bad):
        with pytest.raises(ConfigError):
            parse_config(with_(**bad))


class TestInitialConditions:
    def test_sine_energy(self):
        f = build_initial_field({"preset": "sine"}, 32, "burgers")
        assert l2_norm_sq(f) == pytest.approx(math.pi, abs=1e-12)
        assert f.is_hermitian()

    def test_plane_wave(self):
        f = build_initial_field({"preset": "plane_wave", "A": 2.0, "k": 1}, 32, "nls")
        assert f[1] == 2.0 and np.count_nonzero(f.coeffs) == 1

    def test_modulated(self):
        f = build_initial_field({"preset": "modulated", "A": 1.0, "eps": 0.1}, 16, "nls")
        x = 2 * np.pi * np.arange(32) / 32
        np.testing.assert_allclose(f.to_physical(32), 1 + 0.1 * np.cos(x), atol=1e-15)

    def test_coefficients(self):
        cfg = parse_config(with_(initial_condition={"coefficients": [[1, 0, -0.5], [-1, 0, 0.5]]}))
        f = build_initial_field(cfg.initial_condition, 16, "burgers")
        g = build_initial_field({"preset": "sine"}, 16, "burgers")
        np.testing.assert_array_equal(f.coeffs, g.coeffs)
