import json
import subprocess
import sys
from pathlib import Path

import pytest

from deltaloop.cli_experiments import (CATALOG, list_experiments, load_config, main,
                                       parse_config)
from deltaloop.errors import ConfigError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, text, name="exp.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def artifacts(out):
    return {p.name: p.read_bytes() for p in sorted(out.iterdir()) if p.name != "run.log"}


def test_catalog_lists_every_experiment(capsys):
    names = [e["name"] for e in list_experiments()]
    assert {"theorem1-fit", "sandwich", "persistent-current", "gauge-check"} <= set(names)
    assert all(e["description"] for e in list_experiments())
    assert main(["list"]) == 0
    assert "sandwich:" in capsys.readouterr().out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "deltaloop.cli_experiments", "list"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert "theorem1-fit" in res.stdout


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.yaml")), ids=lambda p: p.stem)
def test_shipped_configs_validate(path):
    cfg = load_config(path)
    assert cfg.experiment in CATALOG
    assert main(["validate", str(path)]) == 0


@pytest.mark.parametrize("text, match", [
    ("experiment: est2\nbeta: 20\na: 1\nextra: 1\n", "schema"),
    ("experiment: est2\nbeta: 20\n", "requires"),
    ("experiment: est2\nbeta: 20\na: 1\nclaims: [bogus]\n", "unknown claims"),
    ("experiment: nope\n", "schema"),
    ("experiment: sandwich\ncurve: missing.curve\nparams: {c0: 0.3, B: 1}\nbeta: 30\n", "does not exist"),
    ("experiment: sandwich\ncurve: {kind: circle}\nparams: {c0: 1.3, B: 1}\nbeta: 30\n", "c0"),
    ("experiment: est2\nbeta: -5\na: 1\n", "positive"),
    ("- just\n- a list\n", "mapping"),
])
def test_config_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(text)


def test_invalid_config_exit_code(tmp_path, capsys):
    path = write(tmp_path, "experiment: est2\nbeta: 20\na: 1\nunknown_key: 3\n")
    assert main(["validate", str(path)]) == 2
    assert main(["run", str(path)]) == 2
    assert "config error" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "absent.yaml")]) == 2


def test_effective_spectrum_run(tmp_path):
    out = tmp_path / "out"
    assert main(["run", str(CONFIGS / "effective_spectrum.yaml"), "--out", str(out)]) == 0
    spec = json.loads((out / "spectrum.json").read_text())
    assert spec["eigenvalues"] == pytest.approx([-0.25, 0.75, 0.75, 3.75, 3.75], abs=1e-10)
    report = json.loads((out / "report.json").read_text())
    assert report["status"] == "complete"
    assert [c["claim"] for c in report["claims"]] == ["closed_form", "converged"]
    assert all(c["status"] == "pass" for c in report["claims"])
    assert "wall clock" in (out / "run.log").read_text()


def test_transverse_bounds_run(tmp_path):
    out = tmp_path / "out"
    assert main(["run", str(CONFIGS / "est2.yaml"), "--out", str(out)]) == 0
    header = (out / "est2.csv").read_text().splitlines()[0]
    assert "strict_bound_pass" in header and "bound_literal_pass" in header


def test_runs_are_byte_identical(tmp_path):
    cfg = write(tmp_path, "experiment: enclosure-sweep\ncurve: {kind: circle}\n"
                          "params: {c0: 0.3, B: 1.0}\nbeta: [200, 400]\nn: 2\n")
    one, two, par = tmp_path / "one", tmp_path / "two", tmp_path / "par"
    assert main(["run", str(cfg), "--out", str(one)]) == 0
    assert main(["run", str(cfg), "--out", str(two)]) == 0
    assert main(["run", str(cfg), "--out", str(par), "--workers", "2"]) == 0
    assert artifacts(one) == artifacts(two) == artifacts(par)
    assert "report.json" in artifacts(one)


def test_strict_turns_flags_into_failures(tmp_path):
    cfg = write(tmp_path, "experiment: enclosure-sweep\ncurve: {kind: circle}\n"
                          "params: {c0: 0.3, B: 1.0}\nbeta: [30]\nn: 2\n")
    assert main(["run", str(cfg), "--out", str(tmp_path / "lax")]) == 0
    lax = json.loads((tmp_path / "lax" / "report.json").read_text())
    assert {c["claim"]: c["status"] for c in lax["claims"]}["flags_verified"] == "flagged"
    assert main(["run", str(cfg), "--out", str(tmp_path / "strict"), "--strict"]) == 1


def test_infeasible_regime_exit_code(tmp_path):
    cfg = write(tmp_path, "experiment: sandwich\ncurve: {kind: ellipse, a: 2, b: 1}\n"
                          "params: {c0: 0.3, B: 1.0}\nbeta: [30]\nn: 1\n")
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out", str(out)]) == 2
    report = json.loads((out / "report.json").read_text())
    assert report["status"] == "infeasible"
    assert all(c["status"] == "fail" for c in report["claims"])


def test_curve_file_relative_to_config(tmp_path):
    (tmp_path / "loop.curve").write_text("kind = circle\nradius = 2\n")
    cfg = write(tmp_path, "experiment: effective-spectrum\ncurve: loop.curve\nn: 3\n")
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out", str(out)]) == 0
    spec = json.loads((out / "spectrum.json").read_text())
    assert spec["eigenvalues"][0] == pytest.approx(-1 / 16, abs=1e-12)


def test_config_digest_ignores_key_order():
    a = parse_config("experiment: est2\nbeta: 20\na: 1\n")
    b = parse_config("a: 1\nbeta: 20\nexperiment: est2\n")
    assert a.digest() == b.digest()
