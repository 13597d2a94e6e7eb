import csv
import json
import subprocess
import sys

import pytest

from cayley_ising.cli import main


def _load(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_count_balanced_envelope(tmp_path):
    out = tmp_path / "count.json"
    rc = main(["count", "--k", "4", "--a-size", "4", "--alpha", "10",
               "--set", "I3", "--out", str(out)])
    assert rc == 0
    d = _load(out)
    assert d["schema_version"] == 1
    assert d["command"] == "count"
    assert d["params"]["k"] == 4 and d["params"]["alpha"] == 10.0
    assert d["diagnostics"]["count"] == 5
    assert d["diagnostics"]["exactness"] == "exact"
    assert len(d["results"]) == 5
    rec = d["results"][0]
    assert set(rec) == {"h", "residual", "flags", "source"}
    assert len(rec["h"]) == 4


def test_count_observed_tag_off_the_closed_form_regime(tmp_path):
    out = tmp_path / "count.json"
    rc = main(["count", "--k", "5", "--a-size", "5", "--alpha", "4",
               "--set", "I3", "--out", str(out)])
    assert rc == 0
    assert _load(out)["diagnostics"]["exactness"] == "observed"


def test_count_csv_format(tmp_path):
    out = tmp_path / "count.csv"
    rc = main(["count", "--k", "4", "--a-size", "4", "--alpha", "10",
               "--set", "I3", "--format", "csv", "--out", str(out)])
    assert rc == 0
    raw = out.read_bytes()
    assert b"\r\n" not in raw  # LF only
    rows = list(csv.reader(out.read_text().splitlines()))
    assert rows[0][:4] == ["k", "a_size", "alpha", "theta"]
    assert len(rows) == 6  # header + five records


def test_solve_roundtrips_through_verify(tmp_path):
    out = tmp_path / "solve.json"
    rc = main(["solve", "--k", "2", "--a-size", "1", "--alpha", "0.2",
               "--out", str(out)])
    assert rc == 0
    rc = main(["verify", "--in", str(out), "--depth", "4"])
    assert rc == 0


def test_verify_catches_a_bad_record(tmp_path):
    out = tmp_path / "solve.json"
    main(["solve", "--k", "2", "--a-size", "1", "--alpha", "0.2",
          "--out", str(out)])
    d = _load(out)
    d["results"][0]["h"] = [1.0, 1.0, 1.0, 1.0]  # not a solution
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(d), encoding="utf-8")
    rc = main(["verify", "--in", str(bad)])
    assert rc == 1


def test_verify_zero_record_passes(tmp_path):
    env = {
        "schema_version": 1,
        "command": "solve",
        "params": {"k": 3, "a_size": 2, "alpha": 5.0, "theta": None},
        "results": [
            {"h": [0.0, 0.0, 0.0, 0.0], "residual": 0.0,
             "flags": {"ti": True}, "source": "full-4d"}
        ],
        "diagnostics": {},
    }
    src = tmp_path / "zero.json"
    src.write_text(json.dumps(env), encoding="utf-8")
    rc = main(["verify", "--in", str(src), "--out", str(tmp_path / "rep.json")])
    assert rc == 0
    rep = _load(tmp_path / "rep.json")
    assert rep["diagnostics"]["failures"] == 0
    assert rep["results"][0]["eq4"]["max_residual"] == 0.0


def test_critical_k4(tmp_path):
    out = tmp_path / "crit.json"
    rc = main(["critical", "--k", "4", "--out", str(out)])
    assert rc == 0
    d = _load(out)
    assert abs(d["diagnostics"]["alpha_critical"] - 6.3716) < 5e-4
    assert abs(d["diagnostics"]["psi_residual"]) < 1e-10
    assert d["diagnostics"]["count_at_critical"] == 3


def test_critical_constant_count_exits_2(capsys):
    assert main(["critical", "--k", "3"]) == 2
    assert "no critical point: count is constant" in capsys.readouterr().err
    assert main(["critical", "--k", "2"]) == 2


def test_critical_unsupported_order(capsys):
    assert main(["critical", "--k", "7"]) == 2
    assert main(["critical"]) == 2


def test_scan_csv_and_figure(tmp_path):
    out = tmp_path / "scan.csv"
    rc = main(["scan", "--k", "3", "--a-size", "3", "--alpha-lo", "2",
               "--alpha-hi", "4", "--steps", "4", "--set", "I3",
               "--format", "csv", "--out", str(out)])
    assert rc == 0
    rows = out.read_text().splitlines()
    assert rows[0].startswith("alpha,count,")
    assert (tmp_path / "scan.png").exists()


def test_scan_no_fig(tmp_path):
    out = tmp_path / "scan.json"
    rc = main(["scan", "--k", "3", "--a-size", "3", "--alpha-lo", "2",
               "--alpha-hi", "3", "--steps", "3", "--set", "I3",
               "--no-fig", "--out", str(out)])
    assert rc == 0
    assert not (tmp_path / "scan.png").exists()
    d = _load(out)
    assert d["diagnostics"]["counts"] == [1, 1, 1]
    assert all("alpha" in rec for rec in d["results"])


def test_plot_phi_files(tmp_path):
    out = tmp_path / "phi.csv"
    rc = main(["plot-phi", "--k", "5", "--alpha", "3", "--out", str(out)])
    assert rc == 0
    rows = list(csv.reader(out.read_text().splitlines()))
    assert rows[0] == ["x", "phi", "identity"]
    assert (tmp_path / "phi.png").exists()
    diffs = [float(r[1]) - float(r[0]) for r in rows[1:]]
    zeros = sum(1 for d in diffs if d == 0.0)
    flips = sum(
        1 for a, b in zip(diffs, diffs[1:])
        if a != 0.0 and b != 0.0 and (a < 0) != (b < 0)
    )
    assert zeros + flips == 5


def test_plot_phi_explicit_fig_without_out(tmp_path, capsys):
    fig = tmp_path / "custom.png"
    rc = main(["plot-phi", "--k", "2", "--alpha", "1.5", "--fig", str(fig)])
    assert rc == 0
    assert fig.exists()
    header = capsys.readouterr().out.splitlines()[0]
    assert header == "x,phi,identity"


def test_group_subcommand(tmp_path):
    out = tmp_path / "group.json"
    rc = main(["group", "--k", "2", "--n", "3", "--a", "1",
               "--word", "1 2 2 1 3", "--out", str(out)])
    assert rc == 0
    d = _load(out)
    assert d["diagnostics"]["level_sizes"] == [1, 3, 6, 12]
    assert d["diagnostics"]["word"]["reduced"] == [3]
    assert d["diagnostics"]["word"]["in_HA"] is True
    assert d["diagnostics"]["subgroup"]["role_counts"]["1"] > 0


def test_usage_errors_exit_2():
    assert main(["count", "--k", "4", "--a-size", "4"]) == 2  # no alpha/theta
    assert main(["count", "--k", "4", "--a-size", "4",
                 "--alpha", "2", "--theta", "0.5"]) == 2  # both
    assert main(["count", "--k", "4", "--a-size", "9", "--alpha", "2"]) == 2
    assert main(["scan", "--k", "4", "--a-size", "1", "--alpha-lo", "3",
                 "--alpha-hi", "2", "--steps", "5"]) == 2
    assert main(["verify", "--in", "/no/such/file.json"]) == 2
    assert main(["no-such-command"]) == 2


def test_python_dash_m_entry():
    proc = subprocess.run(
        [sys.executable, "-m", "cayley_ising", "critical", "--k", "3"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2
    assert "count is constant" in proc.stderr


def test_log_verbosity_env(tmp_path, monkeypatch):
    monkeypatch.setenv("CAYLEY_ISING_LOG", "INFO")
    out = tmp_path / "c.json"
    proc = subprocess.run(
        [sys.executable, "-m", "cayley_ising", "count", "--k", "4",
         "--a-size", "4", "--alpha", "10", "--set", "I3", "--out", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "count=5" in proc.stderr
