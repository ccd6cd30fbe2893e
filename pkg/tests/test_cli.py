import json
import subprocess
import sys

import pytest

from quenchlab import io
from quenchlab.cli import main

EXAMPLE_A = "[ic]\nname = example_A\n[grid]\nN = 124\n"


def _write(tmp_path, text, name="c.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_validate_ic_ok(tmp_path, capsys):
    assert main(["validate-ic", "--config", _write(tmp_path, EXAMPLE_A)]) == 0
    assert json.loads(capsys.readouterr().out)["predicted_quench_side"] == "right"


def test_validate_ic_hypothesis_failure(tmp_path):
    text = "[problem]\na = 0.125\np = 1\nq = 1\n[ic]\nc0 = 0.25\nc1 = 0\nc2 = 4\n[grid]\nN = 10\n"
    assert main(["validate-ic", "--config", _write(tmp_path, text)]) == 2


def test_config_errors_exit_1(tmp_path, capsys):
    assert main(["validate-ic", "--config", str(tmp_path / "missing.ini")]) == 1
    path = _write(tmp_path, EXAMPLE_A + "oops\n")
    assert main(["run", "--config", path]) == 1
    assert f"{path}:5:" in capsys.readouterr().err


FIXED_SHORT = EXAMPLE_A.replace("124", "30") + "[stepping]\nmode = fixed\nmax_time = 5e-5\n"


def test_run_truncated_writes_artifacts(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", _write(tmp_path, FIXED_SHORT), "--output-dir", str(out)]) == 0
    summary = io.read_json(out / "summary.json")
    assert summary["termination"] == "max_time"
    assert summary["rate_fit"] is None and summary["quench"]["side"] == "none"
    assert summary["bounds"]["side"] == "right"
    manifest = io.read_json(out / "manifest.json")
    assert manifest["config"]["stepping"]["mode"] == "fixed"
    assert set(manifest["artifacts"]) == {"trajectory", "summary", "loglog"}
    rec = io.read_trajectory(out / "trajectory.csv")
    assert rec.t[-1] == pytest.approx(5e-5)


def test_run_is_byte_reproducible(tmp_path):
    path = _write(tmp_path, FIXED_SHORT)
    for name in ("a", "b"):
        assert main(["run", "--config", path, "--output-dir", str(tmp_path / name)]) == 0
    for art in ("trajectory.csv", "summary.json", "loglog.csv"):
        assert (tmp_path / "a" / art).read_bytes() == (tmp_path / "b" / art).read_bytes()


def test_run_quench_with_fit(tmp_path):
    text = EXAMPLE_A.replace("124", "30") + "[stepping]\nepsilon_quench = 0.05\ntau_min = 1e-10\n"
    out = tmp_path / "o"
    assert main(["run", "--config", _write(tmp_path, text), "--output-dir", str(out)]) == 0
    summary = io.read_json(out / "summary.json")
    assert summary["quench"]["side"] == "right"
    assert summary["rate_fit"] is not None or "rate_fit_error" in summary
    data = io.read_csv(out / "loglog.csv", io.LOGLOG_HEADER)
    assert data.shape[1] == 2


def test_convergence_exit_codes(tmp_path, capsys):
    assert main(["convergence", "--self-test"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["order_one"]["median_order"] == pytest.approx(1.0, abs=1e-12)
    assert report["order_two"]["median_order"] == pytest.approx(2.0, abs=1e-12)
    base = EXAMPLE_A.replace("124", "12")
    assert main(["convergence", "--config", _write(tmp_path, base)]) == 1
    bad_div = base + "[analysis]\ntau = 1e-5\nt_compare = 1e-4\nref_divisor = 2\n"
    assert main(["convergence", "--config", _write(tmp_path, bad_div, "d.ini")]) == 1
    late = base + "[analysis]\ntau = 1e-5\nt_compare = 1e-2\nref_divisor = 4\n"
    assert main(["convergence", "--config", _write(tmp_path, late, "l.ini")]) == 3


def test_convergence_writes_report(tmp_path):
    text = EXAMPLE_A.replace("124", "12") + "[analysis]\ntau = 2e-5\nt_compare = 5e-4\nref_divisor = 16\n"
    out = tmp_path / "c"
    assert main(["convergence", "--config", _write(tmp_path, text), "--output-dir", str(out)]) == 0
    rep = io.read_json(out / "convergence.json")
    assert 1.8 < rep["median_order"] < 2.2
    assert (out / "manifest.json").exists()


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "quenchlab.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "validate-ic" in res.stdout
