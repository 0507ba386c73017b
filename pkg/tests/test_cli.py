import json
import subprocess
import sys

import pytest

from pacsg.access import AccessMode
from pacsg.blackvi import BlackViConfig
from pacsg.cli import main
from pacsg.harness import (
    TRACE_COLUMNS, bundled_models, derive_seeds, load_game, pac_test, read_trace, write_trace,
)
from pacsg.whitebox import TraceRecord


def test_bundled_models():
    assert bundled_models() == ["fig1", "fig1_dashed", "fig1_full", "mec6"]


def test_seed_derivation_is_stable_and_distinct():
    a = derive_seeds(5, 50)
    assert a == derive_seeds(5, 50)
    assert derive_seeds(5, 10) == a[:10]
    assert len(set(a)) == 50 and a != derive_seeds(6, 50)


def test_trace_round_trip(tmp_path):
    path = tmp_path / "t.csv"
    recs = [TraceRecord(1.5, 2, 0.05, 4, 100.0, 0.25, 0.75), TraceRecord(3.0, 4, 0.025, 5, None, 0.3, 0.7)]
    write_trace(path, recs[:1])
    write_trace(path, recs[1:])  # appends without a second header
    assert path.read_text().splitlines()[0] == ",".join(TRACE_COLUMNS)
    assert read_trace(path) == recs


def test_trace_rejects_foreign_header(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_trace(path)


def test_cli_oracle(capsys):
    assert main(["oracle", "fig1"]) == 0
    out = capsys.readouterr().out.split("\n")
    table = dict(line.split(None, 1) for line in out if line)
    assert table["s0"].startswith("1/2") and table["s1"].startswith("1/2")
    assert table["target"] == "1" and table["sink"] == "0"
    assert main(["oracle", "fig1_full"]) == 0
    assert "s1      1/2" in capsys.readouterr().out


def test_cli_oracle_goal_only(tmp_path, capsys):
    path = tmp_path / "g.json"
    path.write_text(json.dumps({"type": "sg", "pmin": 1, "initial": "g", "goal": ["g"],
                                "states": [{"name": "g", "player": "max"}]}))
    assert main(["oracle", str(path)]) == 0
    assert capsys.readouterr().out.split() == ["g", "1"]


def test_cli_run_white(capsys):
    assert main(["run", "fig1", "--mode", "white", "--epsilon", "1e-8"]) == 0
    out = capsys.readouterr().out
    assert "interval: [0.5, 0.5]" in out and "termination: precision" in out


def test_cli_run_grey_with_trace(tmp_path, capsys):
    trace = tmp_path / "trace.csv"
    code = main(["run", "fig1", "--mode", "grey", "--delta", "0.1", "--epsilon", "1e-6",
                 "--timeout", "1", "--seed", "7", "--trace", str(trace)])
    assert code == 2  # ran out of time: anytime interval still printed
    out = capsys.readouterr().out
    lo, hi = map(float, out.split("interval: [")[1].split("]")[0].split(","))
    assert lo <= 0.5 <= hi
    records = read_trace(trace)
    assert records and all(r.explored_pct == 100.0 for r in records)


def test_cli_run_reaches_precision(capsys):
    assert main(["run", "fig1", "--epsilon", "0.1", "--nk", "500,1000"]) == 0
    assert "termination: precision" in capsys.readouterr().out


def test_cli_errors(tmp_path, capsys):
    assert main(["run", str(tmp_path / "missing.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"type": "sg"')
    assert main(["run", str(bad)]) == 1
    assert "syntax error" in capsys.readouterr().err
    with pytest.raises(SystemExit) as info:
        main(["run", "fig1", "--mode", "purple"])
    assert info.value.code == 1


def test_cli_validate(tmp_path, capsys):
    assert main(["validate", "mec6"]) == 0
    assert "ok: 6 states" in capsys.readouterr().out
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"type": "sg", "pmin": "1/2", "initial": "s", "goal": [],
                               "states": [{"name": "s", "player": "max",
                                           "actions": [{"name": "a", "to": {"s": 0.9}}]}]}))
    assert main(["validate", str(bad)]) == 1
    assert "distribution not stochastic" in capsys.readouterr().out


def test_cli_pac_test_small(capsys):
    assert main(["pac-test", "fig1", "--runs", "4", "--epsilon", "0.2", "--nk", "500", "--workers", "1"]) == 0
    out = capsys.readouterr().out
    assert "runs: 4" in out and "verdict: PASS" in out


def test_pac_test_large_delta_passes_trivially():
    report = pac_test(load_game("fig1"), 5, BlackViConfig(epsilon=0.5, delta=0.9, nk=50), workers=1)
    assert report.verdict == "PASS" and report.violation_rate == report.violations / report.runs


def test_pac_test_worker_pool_matches_serial():
    game = load_game("fig1")
    cfg = BlackViConfig(epsilon=0.2, nk=200, max_phases=2)
    serial = pac_test(game, 4, cfg, master_seed=3, workers=1)
    pooled = pac_test(game, 4, cfg, master_seed=3, workers=2)
    assert serial.intervals == pooled.intervals


def test_pac_test_rejects_white_mode():
    with pytest.raises(ValueError):
        pac_test(load_game("fig1"), 2, BlackViConfig(), mode=AccessMode.WHITE)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "pacsg", "oracle", "fig1"], capture_output=True, text=True)
    assert proc.returncode == 0 and "target" in proc.stdout
