import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from nodal_lab.cli import main
from nodal_lab.geometry import AnalyticCurve, write_curve
from nodal_lab.modes import disc_mode, write_trace


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_disc_scan_first_ten(tmp_path):
    out = tmp_path / "scan.csv"
    code = main(["--experiment", "disc-scan", "--m-range", "1:10", "--epsilon", "0.05",
                 "--method", "fourier", "--out", str(out)])
    assert code == 0
    rows = read_rows(out)
    assert len(rows) == 10
    for r in rows:
        m = int(r["m"])
        assert r["status"] == "ok"
        assert int(r["n_real"]) == int(r["n_complex"]) == int(r["n_crit"]) == 2 * m
    side = json.loads(out.with_suffix(".json").read_text())
    assert side["summary"]["modes"] == 10
    assert side["summary"]["violations"] == []


def test_repeat_runs_are_byte_identical(tmp_path, monkeypatch):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["--experiment", "disc-scan", "--m-range", "2:4", "--method", "fourier"]
    assert main(args + ["--out", str(a)]) == 0
    monkeypatch.setenv("NODAL_LAB_THREADS", "2")
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(b.with_suffix(".json").read_text())["config"]["threads"] == 2


def test_continue_from_trace_file(tmp_path):
    m, eps = 4, 0.05
    trace = tmp_path / "m4.trace"
    write_trace(disc_mode(m, 1), trace)
    out = tmp_path / "cont.csv"
    code = main(["--experiment", "continue", "--trace", str(trace), "--epsilon", str(eps),
                 "--out", str(out)])
    assert code == 0
    side = json.loads(out.with_suffix(".json").read_text())
    # the trace is sin(4 s)/sqrt(pi); its strip maximum is cosh(4 eps)/sqrt(pi)
    expected = math.log(math.cosh(m * eps) / math.sqrt(math.pi))
    assert abs(side["max_log_mod"] - expected) < 1e-6
    # the slope fit over |Im t| in [eps/2, eps], applied to log cosh(m y) itself
    y = np.linspace(eps / 2, eps, 33)
    assert abs(side["growth_slope"] - np.polyfit(y, np.log(np.cosh(m * y)), 1)[0]) < 0.02
    rows = read_rows(out)
    assert list(rows[0]) == ["re_t", "im_t", "re_u", "im_u"]
    for r in rows[::97]:
        t = complex(float(r["re_t"]), float(r["im_t"]))
        ref = np.sin(m * t) / math.sqrt(math.pi)
        assert abs(complex(float(r["re_u"]), float(r["im_u"])) - ref) < 1e-6


def test_epsilon_beyond_curve_margin_is_rejected(tmp_path, capsys):
    K = 20
    c = np.zeros(2 * K + 1, dtype=complex)
    c[K + 1] = 1.0
    for k in range(1, K + 1):
        c[K - k] = 0.05 * math.exp(-0.5 * k)
    curve_path = tmp_path / "c.curve"
    write_curve(AnalyticCurve(c), curve_path)
    assert AnalyticCurve(c).margin < 0.8
    code = main(["--experiment", "disc-scan", "--curve", str(curve_path), "--epsilon", "0.8",
                 "--out", str(tmp_path / "x.csv")])
    assert code == 1
    assert "epsilon" in capsys.readouterr().err


def test_config_errors_name_the_field(tmp_path, capsys):
    assert main(["--m-range", "5:2", "--out", str(tmp_path / "x.csv")]) == 1
    assert "m_range" in capsys.readouterr().err
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("experiment = disc-scan\ncolour = blue\n")
    assert main(["--config", str(cfg)]) == 1
    assert "colour" in capsys.readouterr().err
    assert main(["--experiment", "report", "--out", str(tmp_path / "r.csv")]) == 1
    assert "input" in capsys.readouterr().err


def test_report_summarizes_a_scan(tmp_path):
    scan = tmp_path / "scan.csv"
    assert main(["--experiment", "disc-scan", "--m-range", "1:3", "--method", "fourier",
                 "--out", str(scan)]) == 0
    rep = tmp_path / "rep.csv"
    assert main(["--experiment", "report", "--input", str(scan), "--out", str(rep)]) == 0
    metrics = {r["metric"]: r["value"] for r in read_rows(rep)}
    assert metrics["modes"] == "3"
    lam3 = float(read_rows(scan)[-1]["lambda"])
    assert abs(float(metrics["sup_n_real_over_lambda"]) - 6 / lam3) < 1e-12


def test_config_file_with_overrides(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nexperiment = count\nm-range = 3\nmethod = fourier\n"
                   f"out = {tmp_path / 'from_file.csv'}\n")
    out = tmp_path / "override.csv"
    assert main(["--config", str(cfg), "--epsilon", "0.1", "--out", str(out)]) == 0
    row = read_rows(out)[0]
    assert row["epsilon"] == "0.1" and row["n_complex"] == "6"
    assert not (tmp_path / "from_file.csv").exists()


def test_console_entry_point(tmp_path):
    out = tmp_path / "e.csv"
    proc = subprocess.run([sys.executable, "-m", "nodal_lab.cli", "--experiment", "ellipse-scan",
                           "--ecc", "0.3", "--m-range", "2", "--parity", "cos", "--out", str(out)],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0, proc.stderr
    row = read_rows(out)[0]
    assert row["n_real"] == "4"
