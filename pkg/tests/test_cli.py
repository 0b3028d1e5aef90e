"""Configuration schema, report writers and the batch front end."""

import json
import math
from pathlib import Path

import pytest

from horocap.cli import main, run
from horocap.config import (ConfigError, RunConfig, load_config, parse_config)
from horocap.reports import config_hash, fmt_float, format_cell, write_csv

BASE_CONFIG = {
    "schema_version": 1,
    "surfaces": [
        {"label": "cap-ortho", "kind": "sphere_cap", "n": 2, "a": 1.0,
         "r": 0.5},
        {"label": "cap-tilt", "kind": "sphere_cap", "n": 2, "a": 0.6,
         "r": 0.7},
        {"label": "control", "kind": "sphere_cap", "n": 2, "a": 1.0,
         "r": 0.5, "perturbation": {"amplitude": 0.01}},
    ],
    "numerics": {"quad_order": 64, "grid": 64, "eig_count": 6},
    "output": {"dir": "out", "formats": ["csv", "json"]},
}


def write_config(tmp_path, overrides=None, **kw):
    cfg = json.loads(json.dumps(BASE_CONFIG))
    cfg["output"]["dir"] = str(tmp_path / "out")
    if overrides:
        cfg.update(overrides)
    for k, v in kw.items():
        cfg[k] = v
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return p


class TestConfigSchema:
    def test_round_trip(self, tmp_path):
        cfg = load_config(write_config(tmp_path))
        assert [s.label for s in cfg.surfaces] == ["cap-ortho", "cap-tilt",
                                                   "control"]
        assert cfg.surfaces[2].is_control
        assert cfg.numerics.quad_order == 64

    def test_missing_file(self):
        with pytest.raises(ConfigError):
            load_config("/nonexistent/cfg.json")

    def test_wrong_schema_version(self):
        with pytest.raises(ConfigError, match="schema_version"):
            parse_config({"schema_version": 99, "surfaces": []})

    def test_empty_surfaces_named_in_error(self):
        with pytest.raises(ConfigError, match="surfaces"):
            parse_config({"schema_version": 1, "surfaces": []})

    def test_unknown_family_names_field_path(self):
        with pytest.raises(ConfigError, match=r"surfaces\[0\]\.kind"):
            parse_config({"schema_version": 1,
                          "surfaces": [{"kind": "torus"}]})

    def test_invalid_parameters_named_by_entry(self):
        with pytest.raises(ConfigError, match=r"surfaces\[0\]"):
            parse_config({"schema_version": 1,
                          "surfaces": [{"kind": "sphere_cap", "a": 9.0,
                                        "r": 0.5}]})

    def test_duplicate_labels_rejected(self):
        surf = {"label": "x", "kind": "sphere_cap", "a": 1.0, "r": 0.5}
        with pytest.raises(ConfigError, match="unique"):
            parse_config({"schema_version": 1, "surfaces": [surf, dict(surf)]})

    def test_numeric_bounds(self):
        for field, value in [("quad_order", 2), ("grid", 4),
                             ("eig_count", 0), ("stability_tol", -1.0)]:
            with pytest.raises(ConfigError, match=f"numerics.{field}"):
                parse_config({"schema_version": 1,
                              "surfaces": BASE_CONFIG["surfaces"][:1],
                              "numerics": {field: value}})

    def test_unknown_format_rejected(self):
        with pytest.raises(ConfigError, match="output.formats"):
            parse_config({"schema_version": 1,
                          "surfaces": BASE_CONFIG["surfaces"][:1],
                          "output": {"formats": ["xml"]}})

    def test_sweep_section_validated(self):
        with pytest.raises(ConfigError, match="sweep"):
            parse_config({"schema_version": 1, "surfaces": [],
                          "sweep": {"thetas": []}})


class TestReports:
    def test_float_format_round_trips(self):
        for x in (math.pi, 1e-300, -2.5, 0.1 + 0.2):
            assert float(fmt_float(x)) == x

    def test_cell_formats(self):
        assert format_cell(True) == "true"
        assert format_cell(False) == "false"
        assert format_cell(3) == "3"
        assert format_cell(0.5) == "5.0000000000000000e-01"

    def test_csv_body_deterministic(self, tmp_path):
        rows = [["a", 1.0 / 3.0, True], ["b", -0.0, False]]
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_csv(p1, ["k", "v", "ok"], rows)
        write_csv(p2, ["k", "v", "ok"], rows)
        assert p1.read_bytes() == p2.read_bytes()

    def test_config_hash_is_order_insensitive(self):
        a = {"x": 1, "y": [1, 2]}
        b = {"y": [1, 2], "x": 1}
        assert config_hash(a) == config_hash(b)
        assert config_hash(a) != config_hash({"x": 2, "y": [1, 2]})


class TestRun:
    def test_verify_reports_and_manifest(self, tmp_path):
        cfg = load_config(write_config(tmp_path))
        manifest = run(cfg, "verify")
        assert set(manifest.statuses) == {"cap-ortho", "cap-tilt", "control"}
        assert manifest.statuses["cap-ortho"] == "PASS"
        assert manifest.statuses["control"] == "EXPECTED_FAIL"
        assert manifest.ok
        out = cfg.output.directory
        body = (out / "verify.csv").read_text().splitlines()
        assert len(body) == 1 + 5 * 3  # header + five identities per surface
        data = json.loads((out / "manifest.json").read_text())
        assert data["config_hash"] == config_hash(cfg.to_dict())
        assert len(data["statuses"]) == 3

    def test_parallel_jobs_byte_identical(self, tmp_path):
        cfg = load_config(write_config(tmp_path))
        run(cfg, "verify", jobs=1)
        serial = (cfg.output.directory / "verify.csv").read_bytes()
        run(cfg, "verify", jobs=3)
        parallel = (cfg.output.directory / "verify.csv").read_bytes()
        assert serial == parallel

    def test_numeric_failure_recorded_not_raised(self, tmp_path):
        cfg_path = write_config(tmp_path, surfaces=[
            {"label": "good", "kind": "sphere_cap", "a": 1.0, "r": 0.5},
            {"label": "bad", "kind": "sphere_cap", "a": 1.0, "r": 0.5,
             "perturbation": {"amplitude": -40.0}},
        ])
        cfg = load_config(cfg_path)
        manifest = run(cfg, "verify")
        assert manifest.statuses["good"] == "PASS"
        assert manifest.statuses["bad"] == "ERROR"
        assert not manifest.ok
        errors = (cfg.output.directory / "verify_errors.csv").read_text()
        assert "bad" in errors

    def test_sweep_requires_section(self, tmp_path):
        cfg = load_config(write_config(tmp_path))
        with pytest.raises(ConfigError, match="sweep"):
            run(cfg, "sweep")

    def test_unknown_command(self, tmp_path):
        cfg = load_config(write_config(tmp_path))
        with pytest.raises(ValueError):
            run(cfg, "prove")


class TestMain:
    def test_exit_zero_and_output(self, tmp_path, capsys):
        rc = main(["verify", "--config", str(write_config(tmp_path))])
        out = capsys.readouterr().out
        assert rc == 0
        assert "PASS" in out and "EXPECTED_FAIL" in out

    def test_exit_two_on_config_error(self, tmp_path, capsys):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        assert main(["verify", "--config", str(p)]) == 2
        assert "error" in capsys.readouterr().err

    def test_exit_one_on_error_status(self, tmp_path, capsys):
        p = write_config(tmp_path, surfaces=[
            {"label": "bad", "kind": "sphere_cap", "a": 1.0, "r": 0.5,
             "perturbation": {"amplitude": -40.0}}])
        assert main(["verify", "--config", str(p)]) == 1

    def test_determinism_across_runs(self, tmp_path):
        p = write_config(tmp_path)
        d1, d2 = tmp_path / "r1", tmp_path / "r2"
        assert main(["verify", "--config", str(p), "--out", str(d1)]) == 0
        assert main(["verify", "--config", str(p), "--out", str(d2)]) == 0
        assert (d1 / "verify.csv").read_bytes() == (d2 / "verify.csv").read_bytes()

    def test_plot_script_emission(self, tmp_path):
        p = write_config(tmp_path)
        rc = main(["deficit", "--config", str(p), "--format", "csv",
                   "--format", "plotscript", "--quad", "32"])
        assert rc == 0
        out = Path(json.loads(p.read_text())["output"]["dir"])
        script = out / "deficit_plot.py"
        assert script.exists()
        assert "deficit.csv" in script.read_text()

    def test_sweep_end_to_end_with_plot(self, tmp_path):
        cfg = {
            "schema_version": 1,
            "surfaces": [],
            "sweep": {"kind": "sphere_cap", "n": 2,
                      "thetas": [math.pi / 3, math.pi / 2],
                      "radii": [0.5, 0.8]},
            "numerics": {"quad_order": 32, "grid": 32, "eig_count": 4},
            "output": {"dir": str(tmp_path / "sw"),
                       "formats": ["csv", "plotscript"]},
        }
        p = tmp_path / "sweep.json"
        p.write_text(json.dumps(cfg))
        assert main(["sweep", "--config", str(p)]) == 0
        rows = (tmp_path / "sw" / "sweep.csv").read_text().splitlines()
        assert len(rows) == 1 + 4
        assert (tmp_path / "sw" / "sweep_plot.py").exists()
