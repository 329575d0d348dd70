import json
import subprocess
import sys

import pytest

from conftest import small_config
from salvoguide.cli import main, parse_range
from salvoguide.scenario import dump_scenario, example2


@pytest.fixture
def small_file(tmp_path):
    p = tmp_path / "small.yaml"
    p.write_text(dump_scenario(small_config()))
    return p


def test_run_and_verify(small_file, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", str(small_file), "--out", str(out)]) == 0
    assert (out / "manifest.json").exists()
    assert main(["verify", str(out / "trace.npz")]) == 0
    assert "verification passed" in capsys.readouterr().out


def test_output_root_env(small_file, tmp_path, monkeypatch):
    monkeypatch.setenv("SALVOGUIDE_OUTPUT_ROOT", str(tmp_path / "root"))
    assert main(["run", str(small_file), "--no-plots"]) == 0
    assert (tmp_path / "root" / "small" / "R.csv").exists()


def test_validation_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text(dump_scenario(small_config()).replace("speed_kmps: [0.7", "speed_kmps: [1.2"))
    assert main(["run", str(p)]) == 1
    err = capsys.readouterr().err
    assert "bad.yaml:" in err and "not slower" in err


def test_runtime_exit_code(tmp_path):
    p = tmp_path / "ex2.yaml"
    p.write_text(dump_scenario(example2(dt=1e-2)))
    assert main(["run", str(p), "--out", str(tmp_path / "r"), "--no-plots"]) == 2
    assert json.loads((tmp_path / "r" / "summary.json").read_text())["status"] == "singular"


def test_verification_exit_code(tmp_path):
    p = tmp_path / "biased.yaml"
    p.write_text(dump_scenario(small_config(radial_bias=0.01)))
    assert main(["run", str(p), "--out", str(tmp_path / "r"), "--no-plots"]) == 0
    assert main(["verify", str(tmp_path / "r" / "trace.npz")]) == 3


def test_preset_prints_yaml(capsys):
    assert main(["preset", "example2"]) == 0
    out = capsys.readouterr().out
    assert "s_per_s: -2.0" in out and "tf_s: 8.0" in out


def test_preset_written_to_file(tmp_path):
    assert main(["preset", "example1", "-o", str(tmp_path / "e1.yaml")]) == 0
    assert "R0_km: [7.1063" in (tmp_path / "e1.yaml").read_text()


def test_sweep(small_file, tmp_path, capsys):
    code = main(["sweep", str(small_file), "--param", "P1", "--range", "0.5:2:3",
                 "--out", str(tmp_path / "sw"), "--jobs", "2"])
    assert code == 0
    rows = json.loads((tmp_path / "sw" / "sweep.json").read_text())
    assert [r["P1"] for r in rows] == [0.5, 1.25, 2.0]
    assert all(r["status"] == "complete" for r in rows)


def test_parse_range():
    assert parse_range("1:3:3") == [1.0, 2.0, 3.0]
    assert parse_range("1,2,4", int) == [1, 2, 4]


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "salvoguide", "preset", "example1"],
                       capture_output=True, text=True, check=True)
    assert r.stdout.startswith("name: example1")
