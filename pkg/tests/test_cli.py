import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from bwsel.cli import main

CONFIG = "schema_version: 1\ndesigns: [1]\nsample_sizes: [100]\nreplications: {reps}\nselectors: [cv]\nseed: 42\n"


@pytest.fixture
def normal_file(tmp_path):
    p = tmp_path / "x.txt"
    np.savetxt(p, np.random.default_rng(2024).normal(size=100), header="standard normal draws")
    return p


def test_constants(tmp_path, capsys):
    assert main(["constants", "--out", str(tmp_path)]) == 0
    text = capsys.readouterr().out
    rows = list(csv.DictReader(text.splitlines()))
    assert len(rows) >= 9
    cv = [r for r in rows if r["family"] == "CV" and r["target"] == "epanechnikov"][0]
    assert float(cv["value"]) == 7.42
    assert float(cv["raw_integral"]) == pytest.approx(14.4)
    assert (tmp_path / "constants.csv").read_text() == text
    assert json.loads((tmp_path / "manifest.json").read_text())["command"] == "constants"
    main(["constants", "--out", str(tmp_path / "again")])
    assert capsys.readouterr().out == text


def test_select_do(normal_file, capsys, tmp_path):
    assert main(["select", "--data", str(normal_file), "--selector", "do", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    h = float([ln for ln in out.splitlines() if ln.startswith("h:")][0].split()[1])
    assert h > 0
    assert "warning" not in out


def test_select_median13_diagnostics(normal_file, capsys, tmp_path):
    assert main(["select", "--data", str(normal_file), "--selector", "median13", "--emit-density", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out.splitlines()
    h = float([ln for ln in out if ln.startswith("h:")][0].split()[1])
    comps = {ln.split()[1].rstrip(":"): float(ln.split()[2]) for ln in out if ln.startswith("component")}
    vals = [v for k, v in comps.items() if k != "PI"] + [comps["PI"]] * 5
    assert h == float(np.median(vals))
    rows = list(csv.reader((tmp_path / "density.csv").read_text().splitlines()))
    assert rows[0] == ["x", "density"] and len(rows) == 513
    grid = np.array([float(r[0]) for r in rows[1:]])
    dens = np.array([float(r[1]) for r in rows[1:]])
    assert np.trapezoid(dens, grid) == pytest.approx(1.0, abs=0.02)


def test_select_errors(tmp_path, capsys):
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    assert main(["select", "--data", str(empty), "--selector", "do"]) != 0
    short = tmp_path / "short.txt"
    short.write_text("1\n2\n3\n")
    assert main(["select", "--data", str(short), "--selector", "cv"]) != 0
    assert main(["select", "--data", str(tmp_path / "missing.txt"), "--selector", "cv"]) != 0
    assert main(["select", "--data", str(short), "--selector", "nope"]) != 0


def test_run_minimal_and_deterministic(tmp_path, capsys):
    cfg = tmp_path / "exp.yaml"
    cfg.write_text(CONFIG.format(reps=10))
    before = cfg.read_text()
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "b"), "--workers", "2"]) == 0
    rows = list(csv.reader((tmp_path / "a" / "summary_design1_n100.csv").read_text().splitlines()))
    assert len(rows) == 3 and [r[0] for r in rows[1:]] == ["ISE", "CV"]
    for name in ("summary_design1_n100.csv", "raw.csv", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    man = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert man["seed"] == 42 and len(man["config_hash"]) == 64 and man["version"]
    assert cfg.read_text() == before


def test_run_json_config(tmp_path):
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps(dict(schema_version=1, designs=[2], sample_sizes=[30], replications=2, selectors=["do"], seed=1)))
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "summary_design2_n30.csv").exists()


@pytest.mark.parametrize(
    "text, field",
    [
        (CONFIG.format(reps=0), "replications"),
        (CONFIG.format(reps=5).replace("schema_version: 1", "schema_version: 2"), "schema_version"),
        (CONFIG.format(reps=5) + "colour: red\n", "colour"),
        (CONFIG.format(reps=5).replace("seed: 42\n", ""), "seed"),
        (CONFIG.format(reps=5).replace("[cv]", "[xv]"), "selectors"),
    ],
)
def test_run_invalid_config_writes_nothing(tmp_path, capsys, text, field):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text(text)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 2
    assert field in capsys.readouterr().err
    assert not out.exists()


def test_env_default_output(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("BWSEL_OUT", str(tmp_path / "envout"))
    assert main(["constants", "--max-order", "2"]) == 0
    assert (tmp_path / "envout" / "constants.csv").exists()


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "bwsel.cli", "constants", "--max-order", "2", "--out", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 0
    assert r.stdout.startswith("target,family,indirect,raw_integral,value,analytic_value")


def test_run_overrides(tmp_path):
    cfg = tmp_path / "exp.yaml"
    cfg.write_text(CONFIG.format(reps=500))
    out = tmp_path / "o"
    assert main(["run", "--config", str(cfg), "--out", str(out), "--set", "replications=3", "--set", "sample_sizes=[40]"]) == 0
    assert (out / "summary_design1_n40.csv").exists()
    raw = (out / "raw.csv").read_text().splitlines()
    assert len(raw) == 1 + 3 * 2


@pytest.mark.parametrize("item", ["replications", "replications=0", "colour=red"])
def test_run_bad_override(tmp_path, capsys, item):
    cfg = tmp_path / "exp.yaml"
    cfg.write_text(CONFIG.format(reps=5))
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o"), "--set", item]) == 2
    assert not (tmp_path / "o").exists()
