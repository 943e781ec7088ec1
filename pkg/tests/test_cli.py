"""Command-line interface: exit codes, output formats, manifests, config.

Golden-pins the CSV contract (header names, 17-significant-digit
lowercase scientific notation) so downstream consumers can rely on it.
"""

import json
import re
import subprocess
import sys

import pytest

from asepdist.cli import main


SCI = re.compile(r"^-?\d\.\d{16}e[+-]\d{2,}$")


def run_cli(argv, tmp_path=None, out=True):
    args = list(argv)
    if out and tmp_path is not None:
        args = ["--out", str(tmp_path)] + args
    return main(args)


def test_exact_writes_csv_and_manifest(tmp_path, capsys):
    code = run_cli(["exact", "--p", "0.3", "--m", "1", "--x", "0",
                    "--t", "1.0"], tmp_path)
    assert code == 0
    csv = (tmp_path / "exact.csv").read_text().strip().splitlines()
    assert csv[0] == "s,value,err_est"
    fields = csv[1].split(",")
    assert len(fields) == 3
    for f in fields:
        assert SCI.match(f), f
    man = json.loads((tmp_path / "exact.manifest.json").read_text())
    for key in ("command_line", "config_hash", "precision_bits",
                "node_counts", "artifact_version", "duration_s"):
        assert key in man
    # stdout carries the JSON payload; prob in the CSV matches it
    payload = json.loads(capsys.readouterr().out)
    assert 0.0 <= payload["prob"] <= 1.0
    assert float(fields[1]) == payload["prob"]


def test_limit_f2_csv_header_and_monotone(tmp_path):
    code = run_cli(["limit", "f2", "--sweep=-2:2:1"], tmp_path)
    assert code == 0
    lines = (tmp_path / "limit_f2.csv").read_text().strip().splitlines()
    assert lines[0] == "s,value,err_est"
    assert len(lines) == 6
    vals = [float(l.split(",")[1]) for l in lines[1:]]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_limit_thm1_time_sweep(tmp_path):
    code = run_cli(["limit", "thm1", "--sweep", "5:10:2.5", "--p", "0.3",
                    "--m", "1", "--x", "0"], tmp_path)
    assert code == 0
    lines = (tmp_path / "limit_thm1.csv").read_text().strip().splitlines()
    assert lines[0] == "t,value"
    assert len(lines) == 4


def test_tabulate_requires_out(capsys):
    assert run_cli(["tabulate", "f2", "--sweep", "0:1:1"], None, out=False) == 2


def test_simulate_seed_reproducible(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    a.mkdir(), b.mkdir()
    argv = ["simulate", "--p", "0.3", "--m", "1", "--x", "0", "--t", "1.0",
            "--trials", "2000", "--seed", "5"]
    assert run_cli(argv, a) == 0
    assert run_cli(argv, b) == 0
    assert (a / "simulate.csv").read_text() == (b / "simulate.csv").read_text()


def test_oracle_command(tmp_path):
    code = main(["--out", str(tmp_path), "--format", "json", "oracle",
                 "--p", "0.3", "--m", "1", "--x", "0", "--t", "0.5",
                 "--n-sites", "8"])
    assert code == 0
    payload = json.loads((tmp_path / "oracle.json").read_text())
    assert payload["error_bound"] < 1e-8
    assert payload["cdf_lower"] <= payload["prob"] <= payload["cdf_upper"]


def test_compare_agrees(tmp_path):
    code = main(["--out", str(tmp_path), "--format", "json", "compare",
                 "--p", "0.3", "--m", "1", "--x", "0", "--t", "1.0",
                 "--trials", "20000", "--seed", "1"])
    assert code == 0
    payload = json.loads((tmp_path / "compare.json").read_text())
    assert payload["agree"] is True


def test_verify_command(tmp_path):
    assert run_cli(["verify", "--p", "0.3"], tmp_path) == 0


def test_usage_errors_exit_2():
    assert main(["exact", "--p", "0.3", "--m", "1", "--x", "0"]) == 2  # missing --t
    assert main(["limit", "f2", "--sweep", "bogus"]) == 2
    assert main(["limit", "f2", "--sweep", "2:1:1"]) == 2
    assert main(["exact", "--p", "1.5", "--m", "1", "--x", "0", "--t", "1"]) == 2
    assert main(["nosuchcommand"]) == 2


def test_domain_errors_exit_2():
    # f2_cdf refuses s < -10; surfaced as a parameter error
    assert main(["limit", "f2", "--sweep=-12:-11:1"]) == 2


def test_backend_errors_exit_3(monkeypatch):
    import asepdist.cli as cli

    def boom(*a, **kw):
        raise RuntimeError("synthetic backend failure")

    monkeypatch.setattr(cli, "f2_table", boom)
    assert main(["limit", "f2", "--sweep", "0:1:1"]) == 3


def test_config_file_supplies_defaults(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 5}))
    out = tmp_path / "out"
    out.mkdir()
    code = main(["--config", str(cfg), "--out", str(out), "simulate",
                 "--p", "0.3", "--m", "1", "--x", "0", "--t", "1.0",
                 "--trials", "1000"])
    assert code == 0
    man = json.loads((out / "simulate.manifest.json").read_text())
    assert man["seed"] == 5


def test_config_unknown_key_rejected(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"frobnicate": 1}))
    assert main(["--config", str(cfg), "limit", "f2", "--sweep", "0:1:1"]) == 2


def test_cli_flag_beats_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 5}))
    out = tmp_path / "out"
    out.mkdir()
    code = main(["--config", str(cfg), "--out", str(out), "simulate",
                 "--p", "0.3", "--m", "1", "--x", "0", "--t", "1.0",
                 "--trials", "1000", "--seed", "9"])
    assert code == 0
    man = json.loads((out / "simulate.manifest.json").read_text())
    assert man["seed"] == 9


def test_console_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "asepdist.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "exact" in proc.stdout
