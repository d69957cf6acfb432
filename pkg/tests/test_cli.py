"""Command-line interface: usage errors, outputs, determinism of files."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from isdsim.cli import main
from isdsim.csvio import read_csv, write_csv


def test_usage_error_exit_code():
    proc = subprocess.run(
        [sys.executable, "-m", "isdsim.cli", "campaign", "--mode", "bogus"],
        capture_output=True,
    )
    assert proc.returncode == 2


def test_missing_subcommand_exit_code():
    proc = subprocess.run([sys.executable, "-m", "isdsim.cli"], capture_output=True)
    assert proc.returncode == 2


def test_validate_rejects_zero_cases(tmp_path):
    rc = main(["validate", "--study", "decay", "--cases", "0",
               "--out-dir", str(tmp_path)])
    assert rc == 2


def test_burn_rejects_negative_nu_init(tmp_path):
    rc = main(["burn", "--nu-init", "-5", "--out-dir", str(tmp_path),
               "--cache-dir", str(tmp_path / "cache")])
    assert rc == 2


def test_dump_windows(tmp_path):
    rc = main(["dump", "--what", "windows", "--out-dir", str(tmp_path)])
    assert rc == 0
    header, rows = read_csv(tmp_path / "dump_windows.csv")
    assert header == ["transition", "lo_hz", "hi_hz"]
    vals = {r[0]: (float(r[1]), float(r[2])) for r in rows}
    assert vals["zero_e"][0] == pytest.approx(-9.0e6, abs=0.2e6)
    assert vals["one_e"][1] == pytest.approx(14.6e6, abs=0.2e6)


def test_validate_outputs_csv(tmp_path):
    rc = main(["validate", "--study", "multi2", "--cases", "2", "--seed", "4",
               "--out-dir", str(tmp_path), "--quiet"])
    assert rc == 0
    header, rows = read_csv(tmp_path / "validate_multi2.csv")
    assert header[:4] == ["case", "total_error", "estimated_error", "ratio"]
    assert len(rows) == 2


def test_validate_rerun_byte_identical(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    for out in (a, b):
        rc = main(["validate", "--study", "multi2", "--cases", "2", "--seed", "4",
                   "--out-dir", str(out), "--quiet"])
        assert rc == 0
    assert (a / "validate_multi2.csv").read_bytes() == (b / "validate_multi2.csv").read_bytes()


def test_config_file_merging(tmp_path):
    cfg = tmp_path / "conf.yaml"
    cfg.write_text("cases: 2\nseed: 9\nquiet: true\n")
    rc = main(["validate", "--study", "multi2", "--config", str(cfg),
               "--out-dir", str(tmp_path)])
    assert rc == 0
    assert (tmp_path / "validate_multi2.csv").exists()


def test_csv_dialect_formatting(tmp_path):
    path = tmp_path / "t.csv"
    write_csv(path, ["a", "b", "c"], [(0.5e-3, 12.25, 0)], {"x": 1})
    text = path.read_text().splitlines()
    assert text[0].startswith("# isdsim ")
    assert text[1].startswith("# config ")
    # scientific below 1e-3, plain above, zero bare
    assert text[3].split(",") == ["5.0000000000e-04", "12.25", "0"]


def test_numerical_failure_exit_code(monkeypatch, tmp_path):
    import isdsim.cli as cli
    from isdsim._kernel import StepSizeUnderflow

    def boom(args):
        raise StepSizeUnderflow("h vanished")

    monkeypatch.setattr(cli, "cmd_validate", boom)
    rc = cli.main(["validate", "--study", "decay", "--cases", "1",
                   "--out-dir", str(tmp_path)])
    assert rc == 4
