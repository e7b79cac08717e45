import json
import subprocess
import sys

import pytest

from spectral_gate import __version__
from spectral_gate.cli import run
from spectral_gate.potential import gallery


def report(capsys, argv, code=0):
    assert run(argv) == code
    out = capsys.readouterr()
    return json.loads(out.out) if code == 0 else json.loads(out.err)


def test_min_eig_scan_example(capsys):
    rep = report(capsys, ["min-eig-scan", "--gallery", "W1", "--ell", "1", "--radii", "10,50,100"])
    assert rep["schema"] == "1" and rep["command"] == "min-eig-scan"
    assert rep["toolkit_version"] == __version__
    assert rep["tables"]["main"][-1]["ratio_to_r2"] == pytest.approx(0.0833, abs=5e-4)
    for key in ("config", "status", "witnesses", "runtime_ms"):
        assert key in rep


def test_ainfty_example(capsys):
    rep = report(capsys, ["ainfty", "--gallery", "W0", "--delta", "0.1", "--c", "0.1", "--ell0", "1",
                          "--region", "4"])
    assert rep["status"] == "violated"
    assert rep["witnesses"] and "center" in rep["witnesses"][0]


def test_compare_example(capsys):
    rep = report(capsys, ["compare", "--gallery", "W1", "--E", "1", "--L", "4,8,16", "--h", "0.0625"])
    assert rep["verdicts"] == {"H_V": "essential-spectrum-consistent",
                               "H_lambda": "essential-spectrum-consistent"}
    assert rep["inconsistent"] is False


def strip(text):
    doc = json.loads(text)
    doc.pop("runtime_ms"), doc.pop("toolkit_version")
    return json.dumps(doc, sort_keys=True)


@pytest.mark.parametrize("argv", [
    ["condition-b", "--gallery", "W0", "--alpha", "0.5", "--seed", "7"],
    ["oscillation", "--gallery", "degenerate", "--d", "2", "--radii", "4,8", "--seed", "7"],
])
def test_determinism(tmp_path, argv):
    outs = []
    for i in range(2):
        path = tmp_path / f"r{i}.json"
        assert run(argv + ["--output", str(path)]) == 0
        outs.append(strip(path.read_text()))
    assert outs[0] == outs[1]


def test_config_overrides_flags(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"radii": "10,100", "ell": 0.5}))
    rep = report(capsys, ["min-eig-scan", "--gallery", "W1", "--radii", "1,2", "--config", str(cfg)])
    assert rep["config"]["radii"] == "10,100" and rep["config"]["ell"] == 0.5
    assert [r["radius"] for r in rep["tables"]["main"]] == [10, 100]


def test_unknown_config_field(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    err = report(capsys, ["min-eig-scan", "--gallery", "W1", "--config", str(cfg)], code=2)
    assert err["error"] == "ConfigError" and "bogus" in err["message"]


@pytest.mark.parametrize("argv", [
    ["nonsense"],
    [],
    ["min-eig-scan"],
    ["min-eig-scan", "--gallery", "nope"],
    ["min-eig-scan", "--gallery", "W1", "--radii", "x,y"],
    ["ainfty", "--gallery", "W0", "--delta", "2"],
    ["mazya-shubin", "--gallery", "W1"],
    ["oscillation", "--gallery", "W1"],
])
def test_config_errors_exit_2(capsys, argv):
    err = report(capsys, argv, code=2)
    assert err["exit_code"] == 2


def test_numerical_error_exit_3(capsys):
    err = report(capsys, ["a2", "--gallery", "W1", "--region", "2"], code=3)
    assert err["error"] == "HypothesisError" and "node" in err


def test_potential_file_round_trip(tmp_path, capsys):
    path = tmp_path / "w1.json"
    path.write_text(gallery("W1").to_json())
    a = report(capsys, ["min-eig-scan", "--potential", str(path), "--radii", "10,20"])
    b = report(capsys, ["min-eig-scan", "--gallery", "W1", "--radii", "10,20"])
    assert a["tables"] == b["tables"]


def test_spectrum_csv(tmp_path, capsys):
    csv = tmp_path / "n.csv"
    rep = report(capsys, ["spectrum", "--gallery", "harmonic", "--E", "10", "--L", "4,8", "--h", "0.125",
                          "--csv", str(csv)])
    assert rep["status"] == "discrete-consistent"
    lines = csv.read_text().splitlines()
    assert lines[0] == "L,E,N,ratio" and len(lines) == 3


def test_gallery_list_and_classify(capsys):
    rep = report(capsys, ["gallery-list"])
    names = {r["name"] for r in rep["tables"]["gallery"]}
    assert {"W0", "W1", "degenerate"} <= names
    rep = report(capsys, ["classify", "--gallery", "W0", "--center", "2", "--side", "2"])
    assert rep["kind"] == "bad"


def test_capacity_command(capsys):
    rep = report(capsys, ["capacity", "--n", "2", "--set", "cube", "--radius", "0.5", "--h", "0.25"])
    assert rep["tables"]["capacity"][0]["value"] > 0


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "spectral_gate", "gallery-list"], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["command"] == "gallery-list"
