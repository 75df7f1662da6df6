import csv
import json
import math

import pytest

from mzrefine.cli import EXIT_USAGE, main
from mzrefine.runner import OUTPUT_ROOT_ENV, SERIES_HEADER


def write_cfg(path, **kw):
    cfg = {"equation": "burgers", "initial_condition": {"preset": "sine"},
           "stepper": {"dt": 1e-3, "adapt": False}, "t_end": 0.3, "output_dir": str(path.parent / "out")}
    cfg.update(kw)
    path.write_text(json.dumps(cfg))
    return path


def read_series(d):
    with open(d / "series.csv", newline="") as fh:
        return list(csv.reader(fh))


class TestRun:
    def test_burgers_files(self, tmp_path):
        out = tmp_path / "run"
        cfg = write_cfg(tmp_path / "c.json", M0=32, M_max=512, t_end=0.9, output_dir=str(out),
                        spectrum_times=[0.0, 0.5])
        assert main(["run", str(cfg)]) == 0
        rows = read_series(out)
        assert rows[0] == SERIES_HEADER
        t = [float(r[0]) for r in rows[1:]]
        M = [int(r[6]) for r in rows[1:]]
        assert all(a < b for a, b in zip(t, t[1:])) and M == sorted(M)
        assert all(r[2] == "" and r[4] == "" for r in rows[1:])  # no watchdog in projected mode
        events = [json.loads(line) for line in (out / "events.jsonl").read_text().splitlines()]
        assert events and events[0]["t"] < 1.0
        assert set(events[0]) == {"t", "M_before", "M_after", "flux", "rel_flux", "strategy"}
        assert all(e["M_after"] == 2 * e["M_before"] for e in events)
        assert all(a["t"] < b["t"] for a, b in zip(events, events[1:]))
        result = json.loads((out / "result.json").read_text())
        assert result["outcome"] == "completed" and result["exit_code"] == 0
        assert result["l2_norm_sq_initial"] == pytest.approx(math.pi, abs=1e-12)
        assert result["energy_initial"] == pytest.approx(math.pi / 2, abs=1e-12)
        spec0 = list(csv.reader(open(out / "spectrum_0.csv")))
        assert spec0[0] == ["k", "esq"] and len(spec0) == 33
        assert (out / "spectrum_0.5.csv").exists()

    def test_plane_wave_flat_energy(self, tmp_path):
        out = tmp_path / "pw"
        cfg = write_cfg(tmp_path / "pw.json", equation="nls",
                        initial_condition={"preset": "plane_wave"}, stepper={},
                        t_end=0.5, output_dir=str(out))
        assert main(["run", str(cfg)]) == 0
        assert (out / "events.jsonl").read_text() == ""
        e = [float(r[1]) for r in read_series(out)[1:]]
        assert max(e) - min(e) <= 1e-8 * e[0]

    def test_infinite_threshold(self, tmp_path):
        out = tmp_path / "inf"
        cfg = write_cfg(tmp_path / "inf.json", policy={"threshold": "inf"}, t_end=0.9,
                        output_dir=str(out))
        assert main(["run", str(cfg)]) == 0
        assert (out / "events.jsonl").read_text() == ""

    def test_at_limit_exit_code(self, tmp_path):
        cfg = write_cfg(tmp_path / "lim.json", M0=32, M_max=64, t_end=1.0)
        assert main(["run", str(cfg)]) == 2

    def test_blow_up_exit_code(self, tmp_path):
        cfg = write_cfg(tmp_path / "bu.json", equation="nls",
                        initial_condition={"preset": "modulated", "A": 10.0},
                        stepper={"scheme": "rk4", "dt": 1e-2, "adapt": False}, t_end=1.0)
        assert main(["run", str(cfg)]) == 3
        result = json.loads((tmp_path / "out" / "result.json").read_text())
        assert result["outcome"] == "blow_up"

    def test_tmodel_scenario(self, tmp_path):
        out = tmp_path / "tm"
        cfg = write_cfg(tmp_path / "tm.json", scenario="tmodel", output_dir=str(out))
        assert main(["run", str(cfg)]) == 0
        rows = read_series(out)[1:]
        assert all(r[2] != "" and r[3] == "" for r in rows)
        e = [float(r[1]) for r in rows]
        assert all(b <= a * (1 + 1e-9) for a, b in zip(e, e[1:]))

    def test_output_root_env(self, tmp_path, monkeypatch):
        cfg = write_cfg(tmp_path / "c.json", output_dir="rel")
        monkeypatch.setenv(OUTPUT_ROOT_ENV, str(tmp_path / "root"))
        assert main(["run", str(cfg)]) == 0
        assert (tmp_path / "root" / "rel" / "result.json").exists()

    def test_deterministic_outputs(self, tmp_path):
        texts = []
        for name in ("a", "b"):
            out = tmp_path / name
            cfg = write_cfg(tmp_path / f"{name}.json", output_dir=str(out), t_end=0.6)
            main(["run", str(cfg)])
            texts.append(((out / "series.csv").read_text(), (out / "events.jsonl").read_text()))
        assert texts[0] == texts[1]

    def test_full_precision_numbers(self, tmp_path):
        out = tmp_path / "p"
        main(["run", str(write_cfg(tmp_path / "p.json", output_dir=str(out)))])
        row = read_series(out)[2]
        assert float(row[0]) == pytest.approx(1e-3)
        assert len(row[1].replace("-", "").replace(".", "").split("e")[0]) >= 16

    def test_bad_config_and_io(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"equation": "burgers", "initial_condition": {"preset": "sine"}, "M0": 33}')
        assert main(["run", str(bad)]) == 1
        assert "M must be even" in capsys.readouterr().err
        assert main(["run", str(tmp_path / "missing.json")]) == 1
        blocker = tmp_path / "file"
        blocker.write_text("")
        cfg = write_cfg(tmp_path / "io.json", output_dir=str(blocker / "sub"))
        assert main(["run", str(cfg)]) == 1

    def test_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == EXIT_USAGE


class TestSweep:
    @pytest.mark.parametrize("jobs", [1, 2])
    def test_sweep(self, tmp_path, jobs):
        a = write_cfg(tmp_path / "a.json", output_dir=str(tmp_path / "ra"))
        b = write_cfg(tmp_path / "b.json", M0=32, M_max=64, t_end=1.0,
                      output_dir=str(tmp_path / "rb"))
        assert main(["sweep", str(a), str(b), "--jobs", str(jobs)]) == 2
        assert (tmp_path / "ra" / "result.json").exists()
        assert (tmp_path / "rb" / "result.json").exists()

    def test_sweep_rejects_shared_output(self, tmp_path):
        a = write_cfg(tmp_path / "a.json")
        b = write_cfg(tmp_path / "b.json")
        assert main(["sweep", str(a), str(b)]) == 1


class TestValidate:
    def test_single_suite(self, tmp_path, capsys):
        path = tmp_path / "v.json"
        assert main(["validate", "decay", "--json", str(path)]) == 0
        out = capsys.readouterr().out
        assert "[PASS] criterion 3" in out
        data = json.loads(path.read_text())
        assert {d["criterion"] for d in data} == {3}
        assert all(d["passed"] for d in data)

    def test_unknown_suite(self):
        assert main(["validate", "nope"]) == EXIT_USAGE

    def test_failure_exit(self, capsys):
        # this suite does not meet its tolerance; see README
        assert main(["validate", "plane_wave"]) == 1
        assert "[FAIL]" in capsys.readouterr().out
