"""Run configuration: a JSON document, strictly validated, defaults filled in."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Any

from .dynamics import Equation
from .integrator import Scheme, StepperConfig, default_scheme
from .spectral import ModeBand, SpectralField


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending key."""


SCENARIOS = ("adaptive", "full", "tmodel")
STRATEGIES = ("projected", "reduced")
PRESETS = ("sine", "plane_wave", "modulated")


@dataclass(frozen=True)
class PolicyConfig:
    threshold: float = 1e-3
    mode: str = "relative"
    growth: int = 2
    cooldown: float | None = None
    grace: float = 0.0
    nls_weight: float = 1664.0


@dataclass(frozen=True)
class StepperFields:
    scheme: str | None = None
    dt: float | None = None
    adapt: bool = True
    tol: float = 1e-10
    dt_min: float = 1e-10
    dt_max: float = 1e-2
    cfl_coeff: float = 0.5
    filter_level: float = 1e-13


@dataclass(frozen=True)
class RunConfig:
    equation: str
    initial_condition: dict
    M0: int = 32
    M_max: int = 512
    scenario: str = "adaptive"
    strategy: str = "projected"
    partition_edge: str = "auto"
    extended_gamma: bool = False
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    stepper: StepperFields = field(default_factory=StepperFields)
    t_end: float = 1.0
    output_dir: str = "out"
    sample_stride: int = 1
    spectrum_times: tuple[float, ...] = ()
    seed: int = 0

    @property
    def edge(self) -> str:
        if self.partition_edge != "auto":
            return self.partition_edge
        return "symmetric" if self.equation == "burgers" else "literal"

    def stepper_config(self) -> StepperConfig:
        s = self.stepper
        scheme = Scheme(s.scheme) if s.scheme else default_scheme(Equation(self.equation))
        return StepperConfig(scheme=scheme, dt=s.dt, adapt=s.adapt, tol=s.tol,
                             dt_min=s.dt_min, dt_max=s.dt_max, cfl_coeff=s.cfl_coeff,
                             filter_level=s.filter_level)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["spectrum_times"] = list(self.spectrum_times)
        return d

    def digest(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, default=_json_default)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def _json_default(x):
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    raise TypeError(type(x))


# parsing -----------------------------------------------------------------


def _number(val: Any, key: str) -> float:
    if isinstance(val, str) and val.strip().lower() in ("inf", "+inf", "infinity"):
        return math.inf
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {val!r}")
    return float(val)


def _integer(val: Any, key: str) -> int:
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"{key}: expected an integer, got {val!r}")
    return val


def _strict(section: dict, allowed, where: str) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")


def _section(cls, raw: dict, where: str):
    names = {f.name for f in fields(cls)}
    _strict(raw, names, where)
    out = {}
    for f in fields(cls):
        if f.name not in raw:
            continue
        v = raw[f.name]
        key = f"{where}.{f.name}"
        if v is None:
            out[f.name] = None
        elif f.type in ("float", "float | None"):
            out[f.name] = _number(v, key)
        elif f.type == "int":
            out[f.name] = _integer(v, key)
        elif f.type == "bool":
            if not isinstance(v, bool):
                raise ConfigError(f"{key}: expected true/false")
            out[f.name] = v
        else:
            out[f.name] = v
    return cls(**out)


def parse_config(text: str | bytes | dict) -> RunConfig:
    """Parse and validate a JSON run configuration."""
    if isinstance(text, dict):
        raw = text
    else:
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON: {exc}") from None
    top = {f.name for f in fields(RunConfig)}
    _strict(raw, top, "config")
    for key in ("equation", "initial_condition"):
        if key not in raw:
            raise ConfigError(f"{key}: required key missing")

    kw: dict[str, Any] = {}
    eq = raw["equation"]
    if eq not in ("burgers", "nls"):
        raise ConfigError(f"equation: must be 'burgers' or 'nls', got {eq!r}")
    kw["equation"] = eq
    kw["initial_condition"] = _check_ic(raw["initial_condition"])
    for key in ("M0", "M_max", "sample_stride", "seed"):
        if key in raw:
            kw[key] = _integer(raw[key], key)
    if "t_end" in raw:
        kw["t_end"] = _number(raw["t_end"], "t_end")
    for key, choices in (("scenario", SCENARIOS), ("strategy", STRATEGIES),
                         ("partition_edge", ("auto", "literal", "symmetric"))):
        if key in raw:
            if raw[key] not in choices:
                raise ConfigError(f"{key}: must be one of {', '.join(choices)}")
            kw[key] = raw[key]
    if "extended_gamma" in raw:
        if not isinstance(raw["extended_gamma"], bool):
            raise ConfigError("extended_gamma: expected true/false")
        kw["extended_gamma"] = raw["extended_gamma"]
    if "output_dir" in raw:
        if not isinstance(raw["output_dir"], str):
            raise ConfigError("output_dir: expected a string")
        kw["output_dir"] = raw["output_dir"]
    if "spectrum_times" in raw:
        st = raw["spectrum_times"]
        if not isinstance(st, list):
            raise ConfigError("spectrum_times: expected a list")
        kw["spectrum_times"] = tuple(sorted(_number(x, "spectrum_times") for x in st))
    if "policy" in raw:
        kw["policy"] = _section(PolicyConfig, raw["policy"], "policy")
    if "stepper" in raw:
        kw["stepper"] = _section(StepperFields, raw["stepper"], "stepper")

    cfg = RunConfig(**kw)
    _validate(cfg)
    return cfg


def _check_ic(ic: Any) -> dict:
    if not isinstance(ic, dict):
        raise ConfigError("initial_condition: expected an object")
    if "coefficients" in ic:
        _strict(ic, {"coefficients"}, "initial_condition")
        coeffs = ic["coefficients"]
        if not isinstance(coeffs, list) or not coeffs:
            raise ConfigError("initial_condition.coefficients: expected a non-empty list")
        for row in coeffs:
            if (not isinstance(row, list) or len(row) not in (2, 3)
                    or isinstance(row[0], bool) or not isinstance(row[0], int)):
                raise ConfigError("initial_condition.coefficients: rows are [k, re] or [k, re, im]")
            for x in row[1:]:
                _number(x, "initial_condition.coefficients")
        return {"coefficients": [list(r) for r in coeffs]}
    preset = ic.get("preset")
    params = {"sine": {"A"}, "plane_wave": {"A", "k"}, "modulated": {"A", "eps"}}
    if preset not in params:
        raise ConfigError(f"initial_condition.preset: must be one of {', '.join(PRESETS)}")
    _strict(ic, params[preset] | {"preset"}, "initial_condition")
    out = {"preset": preset}
    for key in params[preset]:
        if key in ic:
            key_name = f"initial_condition.{key}"
            out[key] = _integer(ic[key], key_name) if key == "k" else _number(ic[key], key_name)
    return out


def _validate(cfg: RunConfig) -> None:
    for key in ("M0", "M_max"):
        M = getattr(cfg, key)
        if M % 2:
            raise ConfigError(f"{key}: M must be even, got {M}")
        if M < 8 or M & (M - 1):
            raise ConfigError(f"{key}: must be a power of two >= 8, got {M}")
    if cfg.M_max < cfg.M0:
        raise ConfigError("M_max: must be >= M0")
    if not cfg.t_end > 0 or math.isinf(cfg.t_end):
        raise ConfigError("t_end: must be positive and finite")
    if cfg.sample_stride < 1:
        raise ConfigError("sample_stride: must be >= 1")
    pol = cfg.policy
    if not pol.threshold > 0:
        raise ConfigError("policy.threshold: must be > 0")
    if pol.mode not in ("relative", "absolute"):
        raise ConfigError("policy.mode: must be 'relative' or 'absolute'")
    if pol.growth < 2 or pol.growth & (pol.growth - 1):
        raise ConfigError("policy.growth: must be a power of two >= 2")
    ratio = cfg.M_max // cfg.M0
    if cfg.M_max % cfg.M0 or ratio & (ratio - 1):
        raise ConfigError("M_max: must be a power-of-two multiple of M0")
    if pol.cooldown is not None and pol.cooldown < 0:
        raise ConfigError("policy.cooldown: must be >= 0")
    if pol.grace < 0:
        raise ConfigError("policy.grace: must be >= 0")
    if not pol.nls_weight > 0:
        raise ConfigError("policy.nls_weight: must be > 0")
    if cfg.extended_gamma and cfg.equation != "nls":
        raise ConfigError("extended_gamma: only meaningful for equation 'nls'")
    try:
        cfg.stepper_config()
    except ValueError as exc:
        raise ConfigError(f"stepper: {exc}") from None
    try:
        build_initial_field(cfg.initial_condition, cfg.M0, cfg.equation)
    except ValueError as exc:
        raise ConfigError(f"initial_condition: {exc}") from None


# initial conditions --------------------------------------------------------


def build_initial_field(ic: dict, M: int, equation: str) -> SpectralField:
    """Resolve an initial-condition spec to a field on band M (Nyquist mode zero)."""
    band = ModeBand(M)
    if "coefficients" in ic:
        modes: dict[int, complex] = {}
        for row in ic["coefficients"]:
            k = int(row[0])
            if k == band.kmin:
                raise ValueError(f"mode {k} is the Nyquist mode of M={M}")
            val = complex(float(row[1]), float(row[2]) if len(row) > 2 else 0.0)
            modes[k] = modes.get(k, 0) + val
        f = SpectralField.from_modes(band, modes)
        if equation == "burgers" and not f.is_hermitian(atol=1e-14):
            raise ValueError("Burgers coefficients must satisfy c_{-k} = conj(c_k)")
        return f
    preset = ic["preset"]
    A = float(ic.get("A", {"sine": 1.0, "plane_wave": 2.0, "modulated": 1.0}[preset]))
    if preset == "sine":
        return SpectralField.from_modes(band, {1: -0.5j * A, -1: 0.5j * A})
    if preset == "plane_wave":
        if equation == "burgers":
            raise ValueError("plane_wave is complex-valued; use it with nls")
        k = int(ic.get("k", 1))
        if k == band.kmin:
            raise ValueError(f"k={k} is the Nyquist mode of M={M}")
        return SpectralField.from_modes(band, {k: A})
    if preset == "modulated":
        eps = float(ic.get("eps", 0.1))
        # A (1 + eps cos x)
        return SpectralField.from_modes(band, {0: A, 1: 0.5 * A * eps, -1: 0.5 * A * eps})
    raise ValueError(f"unknown preset {preset!r}")

