# tests/test_cli.py
import csv

import numpy as np
import pytest

from src.cli import EXIT_CONFIG_ERROR, EXIT_OK, EXIT_SCHEME_FAILURE, main, potential_table
from src.diagnostics.records import COLUMNS, DiagnosticsRecord, read_records_csv, write_records_csv
from src.fields.snapshot import FieldKind, read_snapshot, write_snapshot
from src.potential.singular import LOG_4PI

EQUILIBRIUM = """
[grid]
dim = 2
n = 16

[scheme]
steps = 3

[init]
presets = equilibrium
"""

UNSTABLE = """
[grid]
dim = 2
n = 16

[scheme]
dt = 10
steps = 5

[init]
presets = taylor-green-velocity
amplitude = 1.0
"""


def _write(path, text):
    path.write_text(text)
    return str(path)


def test_run_equilibrium(tmp_path):
    config = _write(tmp_path / "run.ini", EQUILIBRIUM)
    out = tmp_path / "out"
    assert main(["run", "--config", config, "--out", str(out)]) == EXIT_OK

    records = read_records_csv(out / "diagnostics.csv")
    assert [r.step for r in records] == [0, 1, 2, 3]
    assert max(r.energy_drift for r in records) <= 1e-12
    final = read_snapshot(out / "final.bin")
    assert final.kind == FieldKind.STATE and final.step == 3
    assert (out / "config.ini").exists()


def test_run_writes_periodic_snapshots(tmp_path):
    config = _write(tmp_path / "run.ini", EQUILIBRIUM)
    out = tmp_path / "out"
    assert main(["run", "--config", config, "--out", str(out), "--steps", "4", "--snapshot-every", "2"]) == EXIT_OK
    assert sorted(p.name for p in out.glob("snapshot_*.bin")) == ["snapshot_000002.bin", "snapshot_000004.bin"]


def test_run_is_deterministic(tmp_path):
    config = _write(tmp_path / "run.ini", EQUILIBRIUM.replace("equilibrium", "isotropic-quench"))
    for name in ("a", "b"):
        assert main(["run", "--config", config, "--out", str(tmp_path / name)]) == EXIT_OK
    for artifact in ("diagnostics.csv", "final.bin"):
        assert (tmp_path / "a" / artifact).read_bytes() == (tmp_path / "b" / artifact).read_bytes()


def test_restart_continues_from_snapshot(tmp_path):
    config = _write(tmp_path / "run.ini", EQUILIBRIUM)
    first = tmp_path / "first"
    assert main(["run", "--config", config, "--out", str(first)]) == EXIT_OK
    second = tmp_path / "second"
    args = ["run", "--config", config, "--out", str(second), "--restart", str(first / "final.bin")]
    assert main(args) == EXIT_OK
    assert read_snapshot(second / "final.bin").step == 6


def test_restart_rejects_grid_mismatch(tmp_path):
    config = _write(tmp_path / "run.ini", EQUILIBRIUM)
    snapshot = tmp_path / "other.bin"
    write_snapshot(snapshot, np.zeros((8, 8, 10)), FieldKind.STATE, 0.0, 0)
    args = ["run", "--config", config, "--out", str(tmp_path / "out"), "--restart", str(snapshot)]
    assert main(args) == EXIT_CONFIG_ERROR


def test_unstable_run_exits_with_scheme_failure(tmp_path, capsys):
    config = _write(tmp_path / "run.ini", UNSTABLE)
    out = tmp_path / "out"
    assert main(["run", "--config", config, "--out", str(out)]) == EXIT_SCHEME_FAILURE
    assert "CFL" in capsys.readouterr().err
    assert len(read_records_csv(out / "diagnostics.csv")) == 1


def test_config_errors_exit_2(tmp_path):
    assert main(["run", "--config", str(tmp_path / "missing.ini")]) == EXIT_CONFIG_ERROR
    bad = _write(tmp_path / "bad.ini", "[scheme]\ndelta = 0.1\nr = 2.5\n")
    assert main(["run", "--config", bad]) == EXIT_CONFIG_ERROR


def test_potential_table(tmp_path):
    out = tmp_path / "table.csv"
    assert main(["potential-table", "--out", str(out), "--points", "9"]) == EXIT_OK
    with open(out, newline="") as f:
        rows = list(csv.DictReader(f))
    assert list(rows[0]) == ["lambda1", "lambda2", "f", "grad_norm", "iters"]
    for row in rows:
        l1, l2 = float(row["lambda1"]), float(row["lambda2"])
        assert l1 >= l2 >= -(l1 + l2)
        assert float(row["f"]) >= -LOG_4PI - 1e-10


def test_potential_table_values_grow_toward_boundary():
    rows = potential_table(25)
    # oblate branch lambda1 == lambda2 runs outward from the origin
    oblate = sorted((r["lambda1"], r["f"]) for r in rows if r["lambda1"] == r["lambda2"])
    assert len(oblate) >= 3
    assert all(b[1] > a[1] for a, b in zip(oblate, oblate[1:]))


def test_potential_table_rejects_single_point(tmp_path):
    assert main(["potential-table", "--out", str(tmp_path / "t.csv"), "--points", "1"]) == EXIT_CONFIG_ERROR


def test_report(tmp_path, capsys):
    config = _write(tmp_path / "run.ini", EQUILIBRIUM)
    out = tmp_path / "out"
    assert main(["run", "--config", config, "--out", str(out)]) == EXIT_OK
    capsys.readouterr()

    plot = tmp_path / "plot.csv"
    args = ["report", "--diagnostics", str(out / "diagnostics.csv"), "--config", config, "--out", str(plot)]
    assert main(args) == EXIT_OK
    text = capsys.readouterr().out
    assert "Records: 4" in text and "Positivity" in text and "[ok]" in text
    with open(plot, newline="") as f:
        assert len(list(csv.DictReader(f))) == 4


def test_report_missing_file(tmp_path):
    assert main(["report", "--diagnostics", str(tmp_path / "absent.csv")]) == EXIT_CONFIG_ERROR


def test_report_without_config(tmp_path, capsys):
    fields = {name: 0.0 for name in COLUMNS}
    fields.update(theta_min=1.0, theta_max=1.0)
    path = tmp_path / "d.csv"
    write_records_csv(path, [DiagnosticsRecord(**fields), DiagnosticsRecord(**{**fields, "t": 0.1})])
    assert main(["report", "--diagnostics", str(path)]) == EXIT_OK
    assert "Positivity" not in capsys.readouterr().out
