import json
import subprocess
import sys

import numpy as np
import pytest

from kornlab import cli


def run(argv, capsys):
    code = cli.main(argv)
    return code, capsys.readouterr().out


def payload(text):
    return [line for line in text.splitlines() if not line.startswith("#")]


def test_bounds_rows(capsys):
    code, out = run(["bounds", "--p-grid", "2,4,1.3333333333333333"], capsys)
    assert code == 0
    lines = payload(out)
    assert lines[0] == "p,lower,riesz_upper,korn_upper,korn_lower,full_lower,full_upper"
    r2 = [float(x) for x in lines[1].split(",")]
    assert r2 == pytest.approx([2, 1, 1, np.sqrt(3), 1, np.sqrt(2), 2])
    r4 = [float(x) for x in lines[2].split(",")]
    assert r4 == pytest.approx([4, 1.5, 3, 3 * np.sqrt(3), 3, np.sqrt(10), np.sqrt(28)])
    rd = [float(x) for x in lines[3].split(",")]
    assert rd[1:5] == pytest.approx(r4[1:5], rel=1e-14)


def test_header_and_format(capsys):
    code, out = run(["bounds", "--p", "3", "--seed", "7"], capsys)
    head = out.splitlines()[:3]
    assert head[0].startswith("# kornlab ")
    assert head[1].startswith("# config {")
    assert head[2] == "# seed 7"
    val = payload(out)[1].split(",")[3]
    assert float(val) == np.sqrt(3) * 2  # 17 significant digits round-trip
    code, out = run(["bounds", "--p", "3", "--format", "json"], capsys)
    data = json.loads(out)
    assert data["meta"]["seed"] == 0 and data["columns"][0] == "p"


def test_usage_errors(capsys):
    assert cli.main(["bounds", "--p-grid", "x"]) == 2
    assert cli.main(["bounds", "--p", "0.5"]) == 2
    assert cli.main(["bounds", "--out", "/nonexistent/dir/x.csv"]) == 2
    assert cli.main(["orlicz", "--family", "power", "--p", "1"]) == 2
    with pytest.raises(SystemExit) as e:
        cli.main(["nope"])
    assert e.value.code == 2


def test_verify_and_negate(capsys):
    code, out = run(["verify"], capsys)
    assert code == 0
    lines = [l for l in out.splitlines() if l.startswith(("PASS", "FAIL"))]
    assert len(lines) >= 20 and all(l.startswith("PASS") for l in lines)
    assert all("tol=" in l and "measured=" in l for l in lines)
    code, out = run(["verify", "--self-test-negate"], capsys)
    assert code == 1
    assert any(l.startswith("FAIL") and "Korn identity" in l for l in out.splitlines())


def test_figures_byte_stable(tmp_path):
    d = tmp_path / "fig"
    assert cli.main(["figures", "--out", str(d)]) == 0
    a = (d / "improvement.csv").read_bytes(), (d / "riesz_bounds.csv").read_bytes()
    assert cli.main(["figures", "--out", str(d)]) == 0
    b = (d / "improvement.csv").read_bytes(), (d / "riesz_bounds.csv").read_bytes()
    assert a == b
    rows = [l.split(",") for l in payload(a[0].decode())[1:]]
    imp = np.array([float(r[1]) for r in rows])
    assert imp.max() <= 0.0005
    assert np.all(imp[1:-1] > 0)
    assert abs(imp[0]) <= 1e-5 and abs(imp[-1]) <= 1e-5


def test_other_commands(capsys, tmp_path):
    for argv in (["witness", "--k", "1,5", "--p", "4"], ["radial", "--k", "3", "--p", "3"],
                 ["spectral-check", "--trials", "1", "--p", "4"], ["bellman", "--n", "16", "--sweeps", "3"],
                 ["envelope", "--n", "11", "--sweeps", "3"], ["orlicz"], ["tensor-constants", "--d", "3"]):
        code, out = run(argv, capsys)
        assert code == 0, argv
        assert len(payload(out)) >= 2
    out = tmp_path / "t.csv"
    assert cli.main(["tensor-constants", "--out", str(out)]) == 0
    assert out.read_text().count("\n") == 3 + 1 + 5


def test_console_script_module():
    r = subprocess.run([sys.executable, "-m", "kornlab.cli", "bounds", "--p", "2"], capture_output=True, text=True)
    assert r.returncode == 0 and "p,lower" in r.stdout
