"""Command-line interface: argument handling, outputs, exit codes."""

import json
import subprocess
import sys

import pytest

from fbfqv.cli import main


def _write_config(tmp_path, **kw):
    cfg = {"experiment": "typical", "replicates": 2000, "master_seed": 5}
    cfg.update(kw)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def test_typical_run_outputs(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    out = tmp_path / "out"
    code = main(["typical", "--config", str(cfg), "--out", str(out)])
    captured = capsys.readouterr()
    assert code == 0
    assert "[PASS] edge_length_matches_quadrature_cdf" in captured.out
    assert f"wrote {out}" in captured.out
    assert (out / "rows.csv").exists()
    assert (out / "report.json").exists()
    report = json.loads((out / "report.json").read_text())
    assert report["config"]["output_dir"] == str(out)


def test_seed_and_set_overrides(tmp_path):
    cfg = _write_config(tmp_path)
    out = tmp_path / "o2"
    code = main(
        [
            "typical",
            "--config",
            str(cfg),
            "--out",
            str(out),
            "--seed",
            "99",
            "--set",
            "replicates=800",
            "--set",
            "typical_ks_tol=0.1",  # small-sample run; default is for 1e5 draws
        ]
    )
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["config"]["master_seed"] == 99
    assert report["config"]["replicates"] == 800
    assert report["row_count"] == 800


def test_experiment_mismatch_rejected(tmp_path, capsys):
    cfg = _write_config(tmp_path)  # says "typical"
    code = main(["intensities", "--config", str(cfg), "--out", str(tmp_path / "x")])
    captured = capsys.readouterr()
    assert code == 1
    assert "error" in captured.err


def test_missing_config_file(tmp_path, capsys):
    code = main(["typical", "--config", str(tmp_path / "absent.json")])
    captured = capsys.readouterr()
    assert code == 1
    assert "cannot read config file" in captured.err


def test_invalid_json_config(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    code = main(["typical", "--config", str(path)])
    captured = capsys.readouterr()
    assert code == 1
    assert "not valid JSON" in captured.err


def test_unknown_key_reported(tmp_path, capsys):
    cfg = _write_config(tmp_path, zzz=1)
    code = main(["typical", "--config", str(cfg), "--out", str(tmp_path / "y")])
    captured = capsys.readouterr()
    assert code == 1
    assert "zzz" in captured.err


def test_unknown_experiment_rejected_by_parser(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["nonsense", "--config", "whatever.json"])
    assert exc.value.code == 2


def test_statistical_failure_exit_two(tmp_path, capsys):
    cfg = _write_config(tmp_path, typical_ks_tol=1e-9)
    code = main(["typical", "--config", str(cfg), "--out", str(tmp_path / "z")])
    captured = capsys.readouterr()
    assert code == 2
    assert "[FAIL] edge_length_matches_quadrature_cdf" in captured.out


def test_console_script_entry_point(tmp_path):
    # the installed `fbfqv` executable must behave like cli.main
    cfg = _write_config(tmp_path, replicates=500, typical_ks_tol=0.1)
    out = tmp_path / "sub"
    proc = subprocess.run(
        [sys.executable, "-m", "fbfqv.cli", "typical", "--config", str(cfg), "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (out / "report.json").exists()
