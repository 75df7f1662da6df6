"""Scenario execution and result files.

Files written into the run's output directory:

``series.csv``      ``t,energy,flux_reduced,flux_projected,err_sq,tail_fraction,M``
``events.jsonl``    one object per refinement event
``spectrum_<t>.csv`` ``k,esq`` snapshots at ``spectrum_times``
``result.json``     outcome and summary
"""
from __future__ import annotations

import csv
import json
import math
import os
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, build_initial_field
from .diagnostics import TimeSeriesRecord, spectrum, tail_fraction
from .dynamics import Closure, Equation, ModelSpec
from .integrator import IntegrationFailure, SimState, advance_to
from .refinement import RunResult, monitor_reduced, run_adaptive
from .spectral import ModeBand, Partition, l2_norm_sq, project

OUTPUT_ROOT_ENV = "MZREFINE_OUTPUT_ROOT"
EXIT_CODES = {"completed": 0, "at_limit": 2, "blow_up": 3}
SERIES_HEADER = ["t", "energy", "flux_reduced", "flux_projected", "err_sq", "tail_fraction", "M"]


def output_dir(config: RunConfig) -> Path:
    out = Path(config.output_dir)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not out.is_absolute():
        out = Path(root) / out
    return out


def run_tmodel(config: RunConfig) -> RunResult:
    """Fixed-band t-model trajectory started from ``P u0``."""
    eq = Equation(config.equation)
    stepper = config.stepper_config()
    p = Partition(ModeBand(config.M0), config.edge)
    u0 = build_initial_field(config.initial_condition, config.M0, config.equation)
    spec = ModelSpec(eq, Closure.TMODEL, p, extended_gamma=config.extended_gamma)
    v = SimState(project(u0, p, "F"), 0.0, 0.0, spec)
    series: list[TimeSeriesRecord] = []
    samples = []
    snapshots = {}
    count = [0]

    def observe(s: SimState, force: bool = False):
        mon = monitor_reduced(s)
        samples.append(mon)
        if force or count[0] % config.sample_stride == 0:
            series.append(TimeSeriesRecord(s.t, 0.5 * l2_norm_sq(s.field), mon.flux, None,
                                           None, tail_fraction(s.field), s.field.band.M))
        count[0] += 1

    observe(v, force=True)
    outcome, message = "completed", ""
    stops = sorted({t for t in config.spectrum_times if 0 < t < config.t_end} | {config.t_end})
    if 0.0 in config.spectrum_times:
        snapshots[0.0] = v.field
    last = [v]

    def keep(s: SimState):
        last[0] = s

    try:
        for t_stop in stops:
            with np.errstate(over="ignore", invalid="ignore"):
                v = advance_to(v, t_stop, stepper, observers=(observe, keep))
            if t_stop in config.spectrum_times:
                snapshots[t_stop] = v.field
    except IntegrationFailure as exc:
        outcome, message = "blow_up", str(exc)
        v = exc.last_state
    except FloatingPointError:
        outcome, message = "blow_up", f"monitor overflow (t={last[0].t:.17g})"
        v = last[0]
    if series[-1].t != v.t:
        observe(v, force=True)
    provenance = {"config_hash": config.digest(), "code_version": __version__}
    return RunResult(outcome, v, [], series, samples, provenance, None, message, snapshots)


def execute(config: RunConfig) -> RunResult:
    if config.scenario == "tmodel":
        return run_tmodel(config)
    return run_adaptive(config)


# writing ------------------------------------------------------------------


def _num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".17g")


def _jnum(x: float):
    x = float(x)
    return x if math.isfinite(x) else str(x)


def write_outputs(result: RunResult, config: RunConfig, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "series.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SERIES_HEADER)
        for r in result.series:
            w.writerow([_num(r.t), _num(r.energy), _num(r.flux_reduced), _num(r.flux_projected),
                        _num(r.err_sq), _num(r.tail_fraction), str(r.M)])
    with open(out / "events.jsonl", "w", encoding="utf-8") as fh:
        for ev in result.events:
            fh.write(json.dumps({
                "t": _jnum(ev.t), "M_before": ev.M_before, "M_after": ev.M_after,
                "flux": _jnum(ev.trigger.flux), "rel_flux": _jnum(ev.trigger.rel_flux),
                "strategy": ev.trigger.strategy.value,
            }) + "\n")
    for t, f in sorted(result.snapshots.items()):
        with open(out / f"spectrum_{t:.6g}.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "esq"])
            for k, e in spectrum(f):
                w.writerow([k, _num(e)])
    u0 = build_initial_field(config.initial_condition, config.M0, config.equation)
    fin = result.final_state
    summary = {
        "outcome": result.outcome,
        "exit_code": EXIT_CODES[result.outcome],
        "message": result.message,
        "t_final": _jnum(fin.t),
        "M_final": fin.field.band.M,
        "n_events": len(result.events),
        "energy_initial": _jnum(0.5 * l2_norm_sq(u0)),
        "l2_norm_sq_initial": _jnum(l2_norm_sq(u0)),
        "energy_final": _jnum(0.5 * l2_norm_sq(fin.field)),
        "max_flux": _jnum(max((s.flux for s in result.samples), default=0.0)),
        "provenance": result.provenance,
        "config": json.loads(json.dumps(config.to_dict(), default=str)),
    }
    with open(out / "result.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")


def run(config: RunConfig, out: Path | None = None) -> tuple[RunResult, int]:
    """Execute a configured scenario, write its files, return the result and exit code."""
    result = execute(config)
    write_outputs(result, config, out or output_dir(config))
    return result, EXIT_CODES[result.outcome]

