import json
import math
from pathlib import Path

import pytest

from leftdef.cli import main, parse_zgrid
from leftdef.errors import ConfigError

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_spectrum_of_two_peakons(capsys):
    code, out, _ = run(capsys, "spectrum", PROBLEMS / "p2.toml")
    assert code == 0
    data = json.loads(out)
    lams = [e["lambda"] for e in data["eigenvalues"]]
    assert lams == pytest.approx([2.0 / 3.0, 2.0], rel=1e-13)
    assert data["complete"] and "gauge" in data


def test_validate_reports_the_failing_clause(capsys):
    code, out, err = run(capsys, "validate", PROBLEMS / "bad_sigma_atom.toml")
    assert code == 2
    assert json.loads(out)["ok"] is False
    report = json.loads(err)
    assert report["error"] == "invalid_problem"
    assert report["details"]["clauses"] == ["(4) sigma has no atoms"]


def test_validate_accepts_a_good_problem(capsys):
    code, out, _ = run(capsys, "validate", PROBLEMS / "r1.toml")
    assert code == 0 and json.loads(out)["ok"] is True


def test_roundtrip_of_two_peakons(capsys):
    code, out, _ = run(capsys, "roundtrip", PROBLEMS / "p2.toml")
    assert code == 0
    data = json.loads(out)
    assert data["max_atom_residual"] < 1e-8


def test_csv_carries_the_gauge(capsys):
    code, out, _ = run(capsys, "spectrum", PROBLEMS / "p1.toml", "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("# gauge: ")
    json.loads(lines[0][len("# gauge: "):])
    assert lines[1] == "lambda,mu"
    lam, mu = (float(v) for v in lines[2].split(","))
    assert lam == pytest.approx(1.0, rel=1e-14) and mu == pytest.approx(1.0, rel=1e-14)


def test_tolerance_below_the_floor_is_a_config_error(capsys):
    code, _, err = run(capsys, "roundtrip", PROBLEMS / "p2.toml", "--tol-roundtrip", "1e-18")
    assert code == 2
    assert json.loads(err)["error"] == "config"


def test_unbounded_spectrum_needs_a_window(capsys):
    code, _, err = run(capsys, "spectrum", PROBLEMS / "r1.toml")
    assert code == 1
    assert json.loads(err)["error"] == "window_required"
    code, out, _ = run(capsys, "spectrum", PROBLEMS / "r1.toml", "--lambda-min", "0.5", "--lambda-max", "50")
    assert code == 0
    lams = [e["lambda"] for e in json.loads(out)["eigenvalues"]]
    assert lams == pytest.approx([1.0, 1.0 + math.pi ** 2, 1.0 + 4.0 * math.pi ** 2], rel=1e-12)


def test_missing_file_and_bad_arguments(capsys, tmp_path):
    code, _, _ = run(capsys, "spectrum", tmp_path / "absent.toml")
    assert code == 2
    code, _, _ = run(capsys, "spectrum")
    assert code == 2


def test_output_is_deterministic(capsys, tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"out{k}.json"
        code, _, _ = run(capsys, "embed", PROBLEMS / "p2.toml", "--samples", "3", "-o", path)
        assert code == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_invert_reads_spectrum_output(capsys, tmp_path):
    sd = tmp_path / "sd.json"
    assert run(capsys, "spectrum", PROBLEMS / "p2.toml", "-o", sd)[0] == 0
    code, out, _ = run(capsys, "invert", sd)
    assert code == 0
    atoms = json.loads(out)["atoms"]
    assert [a["pos"] for a in atoms] == pytest.approx([-math.log(2.0), math.log(2.0)], abs=1e-8)


def test_zgrid_parsing():
    assert parse_zgrid("0:1:3:2") == [2j, 0.5 + 2j, 1 + 2j]
    assert parse_zgrid("1+2j, -3") == [1 + 2j, -3]
    with pytest.raises(ConfigError):
        parse_zgrid("0:1")
