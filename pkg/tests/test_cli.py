import json
import subprocess
import sys

import pytest

from fastfio.cli import _threads, build_parser, main


def write_cfg(tmp_path, cfg):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return str(p)


def test_check_separation_reports(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"n": 16, "epsilon": 1e-3, "phase": {"name": "ellipse+"}})
    assert main(["check-separation", "--config", cfg, "--seed", "2", "--out", str(tmp_path / "o")]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    rec = json.loads(lines[0])
    assert rec["experiment"] == "check-separation" and rec["pass"]
    assert (tmp_path / "o" / "check-separation.jsonl").exists()


def test_config_error_exit_code(tmp_path, capsys):
    bad = write_cfg(tmp_path, {"n": 15})
    assert main(["bench", "--config", bad]) == 2
    assert "invalid grid side" in capsys.readouterr().err


def test_missing_config(tmp_path, capsys):
    assert main(["bench", "--config", str(tmp_path / "none.json")]) == 2


def test_threads_env(monkeypatch):
    monkeypatch.setenv("FIO_THREADS", "3")
    assert _threads(None) == 3
    assert _threads(2) == 2
    monkeypatch.delenv("FIO_THREADS")
    assert _threads(None) == 1


def test_parser_subcommands():
    parser = build_parser()
    for name in ("check-separation", "check-rank", "bench", "bench-adjoint", "wavefront", "nufft-test"):
        args = parser.parse_args([name, "--config", "c.json", "--threads", "2"])
        assert args.command == name and args.threads == 2
    assert parser.parse_args(["serve", "--port", "9000"]).port == 9000
    with pytest.raises(SystemExit):
        parser.parse_args(["bench"])


def test_console_entry(tmp_path):
    cfg = write_cfg(tmp_path, {"instances": 2, "targets": 50, "nufft_preset": "six_digit"})
    out = subprocess.run(
        [sys.executable, "-m", "fastfio.cli", "nufft-test", "--config", cfg],
        capture_output=True, text=True, check=False,
    )
    assert out.returncode == 0, out.stderr
    assert json.loads(out.stdout.splitlines()[0])["preset"] == "six_digit"


def test_failed_experiment_exit_code(tmp_path, monkeypatch, capsys):
    from fastfio import experiments

    def failing(name, cfg, seed=None, threads=1, out=None):
        return experiments.ExperimentResult(name, records=[{"experiment": name, "pass": False}], ok=False)

    monkeypatch.setattr(experiments, "run", failing)
    cfg = write_cfg(tmp_path, {"n": 16})
    assert main(["bench", "--config", cfg]) == 1
    assert json.loads(capsys.readouterr().out)["pass"] is False
