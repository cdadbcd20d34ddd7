"""Experiment configs, scenario runners, artifact emission, CLI exit codes."""

import hashlib
import json

import numpy as np
import pytest

import inlslab.cli as cli
import inlslab.experiments as xp
import inlslab.reporting as rp
from inlslab.grid import ParameterRangeError

SMALL_SCAN = {
    "schema_version": 1,
    "scenario": "threshold_scan",
    "grid": {"r_max": 16.0, "n": 256},
    "evolve": {"dt": 2e-3, "t_end": 2.0, "snapshot_stride": 50},
    "groundstate": {"tol": 1e-9},
    "scan": [0.5, 1.3],
    "seed": 3,
}


def _small_mapping(**over):
    doc = {k: (dict(v) if isinstance(v, dict) else v) for k, v in SMALL_SCAN.items()}
    doc.update(over)
    return doc


# --- config parsing ----------------------------------------------------------


def test_defaults_materialized():
    cfg = xp.config_from_mapping({"schema_version": 1, "scenario": "single_run"})
    assert (cfg.p, cfg.b) == (2.0, 0.5)
    assert (cfg.r_max, cfg.n) == (40.0, 2048)
    assert cfg.evolve.dt == 2e-3
    assert cfg.evolve.t_end == 10.0
    assert cfg.evolve.snapshot_stride == 100
    assert cfg.evolve.grad_ceiling_factor == 10.0
    assert cfg.initial_data.family == "gaussian"
    assert (cfg.initial_data.amplitude, cfg.initial_data.width) == (0.5, 1.0)
    assert cfg.scan is None
    assert cfg.groundstate_tol == 1e-10
    assert cfg.morawetz.radii == (10.0, 20.0, 40.0)
    assert cfg.gn_count == 100
    assert cfg.status_rules.defect_scattered == 1e-2
    assert cfg.status_rules.beta_soliton_band == 0.1
    assert cfg.output_dir == "out"
    assert cfg.seed == 0


def test_round_trip_and_exponent_strings():
    doc = _small_mapping(initial_data={"family": "ground_state_scaled", "scale": 1.1})
    cfg = xp.config_from_mapping(doc)
    again = xp.parse_config(xp.emit_config(cfg))
    assert again == cfg
    # YAML 1.1 loads dotless exponents as strings; the schema coerces them
    text = "schema_version: 1\nscenario: single_run\nevolve:\n  dt: 1e-3\n  t_end: 1.0\n"
    assert xp.parse_config(text).evolve.dt == 1e-3


def test_rejections_lead_with_field_path():
    with pytest.raises(xp.ConfigError, match="schema_version: required"):
        xp.config_from_mapping({"scenario": "single_run"})
    with pytest.raises(xp.ConfigError, match="schema_version: expected 1"):
        xp.config_from_mapping({"schema_version": 2, "scenario": "single_run"})
    with pytest.raises(xp.ConfigError, match="scenario: required"):
        xp.config_from_mapping({"schema_version": 1})
    with pytest.raises(xp.ConfigError, match="scenario: 'warp'"):
        xp.config_from_mapping({"schema_version": 1, "scenario": "warp"})
    with pytest.raises(xp.ConfigError, match="bogus: unknown key"):
        xp.config_from_mapping({"schema_version": 1, "scenario": "single_run", "bogus": 1})
    with pytest.raises(xp.ConfigError, match=r"evolve\.cfl: unknown key"):
        xp.config_from_mapping(_small_mapping(evolve={"dt": 1e-3, "cfl": 0.5}))
    with pytest.raises(xp.ConfigError, match="scan: required"):
        xp.config_from_mapping(_small_mapping(scan=None))
    with pytest.raises(xp.ConfigError, match=r"scan\[0\]: require lambda > 0"):
        xp.config_from_mapping(_small_mapping(scan=[-1.0]))
    with pytest.raises(xp.ConfigError, match="initial_data.family"):
        xp.config_from_mapping(_small_mapping(initial_data={"family": "vortex"}))
    with pytest.raises(xp.ConfigError, match=r"evolve\.dt"):
        xp.config_from_mapping(_small_mapping(evolve={"dt": True}))
    # physical-range checks propagate with their own exception type
    with pytest.raises(ParameterRangeError):
        xp.config_from_mapping(_small_mapping(params={"b": 1.2}))


# --- pure helpers ------------------------------------------------------------


def test_late_windows_examples():
    assert xp.late_windows(41) == [(20, 23), (28, 31), (38, 41)]
    assert xp.late_windows(3) == [(0, 3)]
    assert xp.late_windows(2) == []
    assert xp.late_windows(4) == [(0, 3), (1, 4)]  # colliding fractions deduplicate


def test_classify_priority_and_edges():
    rules = xp.StatusRules()
    assert xp.classify("blowup_suspected", 1e-9, 1.0, rules) == xp.STATUS_BLOWUP
    assert xp.classify("completed", 1e-3, 1.0, rules) == xp.STATUS_SCATTERED
    assert xp.classify("completed", 0.5, 0.9, rules) == xp.STATUS_SOLITON  # band edge counts
    assert xp.classify("completed", 0.5, 0.85, rules) == xp.STATUS_INCONCLUSIVE
    assert xp.classify("completed", None, None, rules) == xp.STATUS_INCONCLUSIVE


def test_random_suite_seed_control(grid_coarse):
    a = xp.random_radial_suite(grid_coarse, 5, seed=7)
    b = xp.random_radial_suite(grid_coarse, 5, seed=7)
    c = xp.random_radial_suite(grid_coarse, 5, seed=8)
    assert len(a) == 5
    assert all(np.array_equal(x.values, y.values) for x, y in zip(a, b))
    assert any(not np.array_equal(x.values, y.values) for x, y in zip(a, c))
    assert all(np.iscomplexobj(f.values) and np.any(f.values != 0) for f in a)


# --- scenario runners --------------------------------------------------------


@pytest.fixture(scope="module")
def small_scan_reports():
    cfg = xp.config_from_mapping(_small_mapping())
    return xp.run_threshold_scan(cfg, threads=1)


def test_scan_below_threshold_scatters(small_scan_reports):
    low = small_scan_reports[0]
    assert low.lam == 0.5
    assert low.error is None
    assert low.status == xp.STATUS_SCATTERED
    assert low.threshold.below_gradient
    assert low.defect_relative is not None and low.defect_relative < 5e-3
    assert low.max_gradient_quotient is not None and low.max_gradient_quotient < 1.0
    assert low.windows == ((9, 12), (13, 16), (18, 21))
    assert len(low.window_defects) == 3
    assert all(d > 0 for d in low.window_defects)


def test_scan_above_threshold_never_scatters(small_scan_reports):
    high = small_scan_reports[1]
    assert high.lam == 1.3
    assert not high.threshold.below_gradient
    assert high.threshold.energy_negative
    assert high.status in (xp.STATUS_BLOWUP, xp.STATUS_INCONCLUSIVE)
    assert high.status != xp.STATUS_SCATTERED


def test_scan_isolates_per_run_failures(monkeypatch):
    cfg = xp.config_from_mapping(
        _small_mapping(evolve={"dt": 2e-3, "t_end": 0.1, "snapshot_stride": 10},
                       scan=[0.3, 0.8])
    )
    real = xp._run_once

    def sometimes_boom(cfg, params, grid, gs, lam):
        if lam == 0.8:
            raise RuntimeError("synthetic failure")
        return real(cfg, params, grid, gs, lam)

    monkeypatch.setattr(xp, "_run_once", sometimes_boom)
    reports = xp.run_threshold_scan(cfg, threads=1)
    assert [rep.lam for rep in reports] == [0.3, 0.8]
    assert reports[0].error is None
    assert reports[1].error == "RuntimeError: synthetic failure"
    assert reports[1].status == xp.STATUS_INCONCLUSIVE


def test_parallel_scan_matches_serial(tmp_path):
    doc = _small_mapping(evolve={"dt": 2e-3, "t_end": 0.5, "snapshot_stride": 50},
                         scan=[0.4, 0.6])
    cfg = xp.config_from_mapping(doc)
    serial = xp.run_threshold_scan(cfg, threads=1)
    parallel = xp.run_threshold_scan(cfg, threads=2)
    d1, d2 = tmp_path / "serial", tmp_path / "parallel"
    rp.emit_outputs(serial, d1)
    rp.emit_outputs(parallel, d2)
    assert (d1 / "summary.csv").read_bytes() == (d2 / "summary.csv").read_bytes()
    for path in sorted(d1.iterdir()):
        assert (d2 / path.name).read_bytes() == path.read_bytes()


# --- artifact emission -------------------------------------------------------


@pytest.fixture(scope="module")
def single_report():
    doc = _small_mapping(scenario="single_run")
    cfg = xp.config_from_mapping(doc)
    return xp.run_single(cfg)


def test_emission_is_reproducible(tmp_path, single_report):
    d1, d2 = tmp_path / "a", tmp_path / "b"
    files1 = rp.emit_outputs([single_report], d1)
    files2 = rp.emit_outputs([single_report], d2)
    assert [f.name for f in files1] == [f.name for f in files2]
    for f1, f2 in zip(files1, files2):
        assert f1.read_bytes() == f2.read_bytes()  # SVGs included


def test_manifest_audits_files(tmp_path, single_report):
    files = rp.emit_outputs([single_report], tmp_path)
    manifest_path = files[-1]
    assert manifest_path.name == "manifest.json"
    payload = json.loads(manifest_path.read_text())
    assert payload["manifest_version"] == rp.MANIFEST_VERSION
    assert payload["scenario"] == "single_run"
    listed = {entry["path"] for entry in payload["files"]}
    assert "summary.csv" not in listed  # single runs have no lambda column
    assert any(name.endswith("records.csv") for name in listed)
    for entry in payload["files"]:
        blob = (tmp_path / entry["path"]).read_bytes()
        assert hashlib.sha256(blob).hexdigest() == entry["sha256"]
        assert len(blob) == entry["bytes"]
    assert len(payload["runs"]) == 1
    assert payload["runs"][0]["status"] == single_report.status


def test_scan_emission_includes_summary(tmp_path, small_scan_reports):
    files = rp.emit_outputs(small_scan_reports, tmp_path)
    names = [f.name for f in files]
    assert "summary.csv" in names
    text = (tmp_path / "summary.csv").read_text()
    header, *rows = text.strip().splitlines()
    assert header == ",".join(rp.SUMMARY_COLUMNS)
    assert len(rows) == 2
    assert rows[0].startswith("0.5,true,")
    assert rows[1].split(",")[4] != xp.STATUS_SCATTERED


# --- command line ------------------------------------------------------------


def _write_config(tmp_path, name="cfg.yaml", **over):
    import yaml

    doc = _small_mapping(**over)
    doc.pop("scenario", None)  # the subcommand decides
    path = tmp_path / name
    path.write_text(yaml.safe_dump(doc, sort_keys=False))
    return path


def test_cli_scan_happy_path(tmp_path, capsys):
    cfg_path = _write_config(
        tmp_path,
        evolve={"dt": 2e-3, "t_end": 0.2, "snapshot_stride": 20},
        scan=[0.5],
    )
    out = tmp_path / "artifacts"
    code = cli.main(["scan", "--config", str(cfg_path), "--out", str(out)])
    captured = capsys.readouterr()
    assert code == 0
    assert "wrote" in captured.out
    assert (out / "manifest.json").exists()
    assert (out / "summary.csv").exists()


def test_cli_config_errors_exit_2(tmp_path, capsys):
    assert cli.main(["run", "--config", str(tmp_path / "absent.yaml")]) == 2
    bad = tmp_path / "broken.yaml"
    bad.write_text("evolve: [unclosed\n")
    assert cli.main(["run", "--config", str(bad)]) == 2
    out_of_range = _write_config(tmp_path, name="range.yaml", params={"p": 2.0, "b": 1.2})
    assert cli.main(["run", "--config", str(out_of_range)]) == 2
    capsys.readouterr()


def test_cli_runtime_errors_exit_1(tmp_path, capsys):
    cfg_path = _write_config(tmp_path, groundstate={"tol": 1e-12, "max_iter": 1})
    out = tmp_path / "artifacts"
    code = cli.main(["groundstate", "--config", str(cfg_path), "--out", str(out)])
    captured = capsys.readouterr()
    assert code == 1
    assert "error:" in captured.err


def test_cli_output_dir_precedence(tmp_path, capsys, monkeypatch):
    cfg_path = _write_config(tmp_path)
    env_dir = tmp_path / "from_env"
    monkeypatch.setenv(cli.OUTPUT_ENV, str(env_dir))
    assert cli.main(["groundstate", "--config", str(cfg_path)]) == 0
    assert (env_dir / "manifest.json").exists()
    flag_dir = tmp_path / "from_flag"
    assert cli.main(["groundstate", "--config", str(cfg_path), "--out", str(flag_dir)]) == 0
    assert (flag_dir / "manifest.json").exists()
    capsys.readouterr()
