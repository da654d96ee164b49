import json
import math
from pathlib import Path

import numpy as np
import pytest

from gaugemap.errors import ConfigError
from gaugemap.harness import cli
from gaugemap.harness.config import SCHEMA, load_config
from gaugemap.harness.report import Check, csv_text, format_float
from gaugemap.harness.runner import run_experiment, run_trajectory
from gaugemap.harness.suites import (SCENARIOS, SUITES, WORKERS_ENV, default_workers, scenario_names,
                                     verify_suite)

DEMO_CONFIGS = sorted((Path(__file__).parents[1] / "demos" / "configs").glob("*.json"))


def minimal(**over):
    doc = {"schemaVersion": 1, "name": "mini",
           "model": {"family": "heisenberg", "L": 2, "couplings": 1.0},
           "protocol": {"kind": "constant", "value": [0.0, 0.3, 1.0]},
           "horizon": 1.0, "grid": 5,
           "initialState": {"kind": "product", "factors": [0, 1]},
           "observables": ["sz", "sxsx", "energy", "purity", "stot2"]}
    doc.update(over)
    return doc


def write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


class TestConfig:
    def test_defaults(self):
        cfg = load_config(minimal())
        assert cfg.tolerances["comparison"] == 1e-6 and len(cfg.times) == 5

    @pytest.mark.parametrize("patch", [
        {"schemaVersion": 2},
        {"horizon": -1},
        {"model": {"family": "potts", "L": 2}},
        {"observables": ["magic"]},
        {"tolerances": {"ode": 0}},
        {"extra": 1},
    ])
    def test_schema_violations(self, patch):
        with pytest.raises(ConfigError):
            load_config(minimal(**patch))

    def test_missing_and_malformed(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.json")
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(bad)

    def test_random_state_needs_seed(self):
        with pytest.raises(ConfigError):
            load_config(minimal(initialState={"kind": "random"}))

    def test_capacity(self):
        with pytest.raises(ConfigError):
            load_config(minimal(model={"family": "heisenberg", "L": 21}))

    @pytest.mark.parametrize("path", DEMO_CONFIGS, ids=[p.stem for p in DEMO_CONFIGS])
    def test_shipped_configs_validate(self, path):
        load_config(path)

    @pytest.mark.parametrize("path", DEMO_CONFIGS, ids=[p.stem for p in DEMO_CONFIGS])
    def test_shipped_configs_run(self, path):
        report, _, _ = run_experiment(load_config(path), write=False)
        assert report.passed, "\n".join(report.lines())


class TestReport:
    def test_format_float_round_trip(self, rng):
        for x in rng.normal(size=100) * 10.0 ** rng.integers(-20, 20, size=100):
            assert float(format_float(x)) == x
        assert format_float(float("nan")) == "nan"

    def test_check_modes(self):
        assert Check("a", 1e-7, 1e-6).passed
        assert not Check("a", math.nan, 1e-6).passed
        assert Check("neg", 0.5, 0.1, mode="min").passed
        assert not Check("neg", 0.01, 0.1, mode="min").passed
        assert Check("a", 2e-6, 1e-6).line().startswith("FAIL")

    def test_csv_text(self):
        text = csv_text(["t", "x"], [[0.0, 1 / 3]])
        assert text == "t,x\n0,0.33333333333333331\n"


class TestRunExperiment:
    def test_minimal_pipeline(self, tmp_path):
        report, series, paths = run_experiment(load_config(minimal()), tmp_path)
        assert report.passed, report.lines()
        names = {c.name for c in report.checks}
        assert {"route_distance", "norm_drift", "gauge_map_residual", "flow_equation_residual"} <= names
        assert paths["data"].exists() and paths["report"].exists()
        assert np.all(series["purity_0"] <= 1 + 1e-12) and series["purity_0"][0] == pytest.approx(1)
        header = paths["data"].read_text().splitlines()[0].split(",")
        assert header[:3] == ["t", "sz_0", "sz_1"] and "energy" in header

    def test_deterministic_and_guarded(self, tmp_path):
        cfg = load_config(minimal(initialState={"kind": "random", "seed": 7}))
        _, _, paths = run_experiment(cfg, tmp_path)
        first = paths["data"].read_bytes()
        with pytest.raises(ConfigError):
            run_experiment(cfg, tmp_path)
        run_experiment(cfg, tmp_path, overwrite=True)
        assert paths["data"].read_bytes() == first
        assert b"\r\n" not in first

    def test_json_output(self, tmp_path):
        _, _, paths = run_experiment(load_config(minimal()), tmp_path, fmt="json")
        doc = json.loads(paths["data"].read_text())
        assert len(doc["times"]) == 5 and "sz_0" in doc["values"]

    @pytest.mark.parametrize("doc", [
        {"model": {"family": "ising", "L": 3, "couplings": [0.7, -1.1]},
         "protocol": {"kind": "ising-compatible",
                      "bx": [{"kind": "sinusoidal", "offset": 0.4, "amplitudes": [0.3], "omegas": [1.1]}] * 3,
                      "b0": [[0.2, 0.9], [-0.5, 0.4], [0.1, -0.8]]}},
        {"model": {"family": "fermion", "eps": [[0.0, 1.0], [1.0, 0.0]], "V": [[0.5, 0.2], [0.2, 0.5]]},
         "protocol": {"kind": "rotating", "amplitude": 0.8, "omega": 1.2, "bz": 0.3},
         "observables": ["number", "sz"], "initialState": {"kind": "random", "seed": 3}},
        {"model": {"family": "spin-boson", "f": [0.4], "omega": [1.1], "n_max": 6},
         "protocol": {"kind": "ising-compatible",
                      "bx": [{"kind": "sinusoidal", "offset": 0.5, "amplitudes": [0.2], "omegas": [0.7]}],
                      "b0": [[0.3, 0.6]]},
         "observables": ["sx", "sz", "boson_number"], "initialState": {"kind": "eigenstate", "index": 0}},
    ], ids=["ising", "fermion", "spin-boson"])
    def test_families(self, doc):
        base = minimal()
        base.pop("initialState")
        base["observables"] = ["sz"]
        base.update(doc)
        report, _, _ = run_experiment(load_config(base), write=False)
        assert report.passed, report.lines()

    def test_capacity_leaves_no_output(self, tmp_path):
        cfg = write(tmp_path, minimal(model={"family": "heisenberg", "L": 30}, output={"dir": str(tmp_path / "o")}))
        assert cli.main(["run", "--config", str(cfg)]) == 2
        assert not (tmp_path / "o").exists()


class TestTrajectory:
    def test_rotation_family(self, tmp_path):
        cols, rows, paths = run_trajectory(load_config(minimal(method="gauss")), tmp_path)
        assert cols[:5] == ["t", "K", "nx", "ny", "nz"] and len(rows) == 5
        assert max(r[-1] for r in rows) <= 1e-8
        assert paths["data"].name == "mini_trajectory.csv"

    def test_ising_family(self, tmp_path):
        doc = minimal(model={"family": "ising", "L": 2},
                      protocol={"kind": "constant", "value": [0.5, 0.0, 1.0]})
        cols, rows, _ = run_trajectory(load_config(doc), tmp_path)
        assert cols == ["t", "phi_0", "phi_1"]
        assert np.allclose([r[1] for r in rows], 0.5 * np.linspace(0, 1, 5))


class TestSuites:
    def test_registry(self):
        assert set(SUITES) - {"all"} == {s for s, *_ in SCENARIOS.values()}
        assert scenario_names("all") == sorted(SCENARIOS)
        with pytest.raises(ConfigError):
            scenario_names("bogus")

    def test_workers_env(self, monkeypatch):
        monkeypatch.setenv(WORKERS_ENV, "3")
        assert default_workers() == 3
        monkeypatch.setenv(WORKERS_ENV, "zero")
        with pytest.raises(ConfigError):
            default_workers()

    def test_parallel_matches_serial(self):
        a = verify_suite("ising", workers=1)
        b = verify_suite("ising", workers=2)
        strip = lambda r: [(s.scenario, [(c.name, c.value) for c in s.checks]) for s in r.scenarios]
        assert strip(a) == strip(b) and a.passed


class TestCli:
    def test_run_exit_codes(self, tmp_path, capsys):
        cfg = write(tmp_path, minimal())
        assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path)]) == 0
        assert "PASS" in capsys.readouterr().out
        assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path)]) == 2
        assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path), "--overwrite"]) == 0

    def test_bad_arguments(self, tmp_path):
        assert cli.main([]) == 2
        assert cli.main(["run"]) == 2
        assert cli.main(["verify", "--suite", "bogus"]) == 2
        bad = write(tmp_path, {"schemaVersion": 1})
        assert cli.main(["run", "--config", str(bad)]) == 2

    def test_verify_and_fault(self, tmp_path, capsys):
        rep = tmp_path / "rep.json"
        assert cli.main(["verify", "--suite", "spin-boson", "--report", str(rep)]) == 0
        doc = json.loads(rep.read_text())
        assert doc["passed"] and doc["conventions"]["phase"]["adopted_phase_sign"] in (1, -1)
        assert cli.main(["verify", "--suite", "spin-boson", "--inject-fault"]) == 1
        assert "FAIL" in capsys.readouterr().out

    def test_trajectory_and_schema(self, tmp_path, capsys):
        cfg = write(tmp_path, minimal())
        assert cli.main(["trajectory", "--config", str(cfg), "--out", str(tmp_path)]) == 0
        assert (tmp_path / "mini_trajectory.csv").exists()
        capsys.readouterr()
        assert cli.main(["schema"]) == 0
        assert json.loads(capsys.readouterr().out) == SCHEMA
