import json
import subprocess
import sys

import pytest

from torsionlab.cli import _m_list, main


def test_m_list_parsing():
    assert _m_list("1,2") == [1, 2]
    assert _m_list("1-3,5") == [1, 2, 3, 5]


def test_predict(capsys):
    assert main(["predict", "--D", "1", "--m", "2"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["bound_lower"] == pytest.approx(0.2106, abs=1e-4)


def test_homology_json(capsys):
    assert main(["homology", "--D", "1", "--subgroup", "principal:2+i", "--m", "1", "--format", "json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["index"] == 120 and out["h1_rank"] == 12 and out["kappa"] == 6


def test_homology_csv(capsys):
    assert main(["homology", "--D", "1", "--subgroup", "principal:2+i", "--m", "0"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("D,subgroup,index") and len(lines) == 2


def test_sweep_writes_csv_and_json(tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--D", "1", "--max-norm", "5", "--m", "1", "--out", str(out), "--workers", "1"]) == 0
    assert out.read_text().splitlines()[0].startswith("D,ideal,norm")
    assert json.loads((tmp_path / "s.json").read_text())["records"]
    assert "position" in capsys.readouterr().err


def test_weights(capsys):
    assert main(["weights", "--D", "1", "--m-max", "1"]) == 0
    assert capsys.readouterr().out.startswith("m,h1_rank")


def test_cusp_shapes(capsys):
    assert main(["cusp-shapes", "--D", "1", "--max-norm", "5"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 3 and lines[1].endswith(",0.0,1.0")


def test_verify_all(capsys):
    assert main(["verify"]) == 0
    assert "FAIL" not in capsys.readouterr().out


def test_bad_input_exit_code(capsys):
    assert main(["homology", "--D", "1", "--subgroup", "bogus:1", "--m", "1"]) == 2


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "torsionlab.cli", "predict", "--D", "3", "--m", "2"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["D"] == 3
