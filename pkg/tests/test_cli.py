from __future__ import annotations

import json
import subprocess
import sys

from antijam import cli, harness


def _cfg(tmp_path, doc):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    return str(path)


def test_success_writes_csv(tmp_path, capsys):
    cfg = _cfg(tmp_path, {"iterations": 200, "eval_window": 100, "seeds": [0, 1]})
    out = tmp_path / "out"
    code = cli.main(["--config", cfg, "--algo", "q", "--policy", "htt", "--seed", "4", "--out", str(out)])
    assert code == cli.EXIT_OK
    assert [p.name for p in out.iterdir()] == ["htt_q_seed4.csv"]
    assert "throughput" in capsys.readouterr().out


def test_iterations_override(tmp_path):
    out = tmp_path / "out"
    assert cli.main(["--policy", "wd", "--iterations", "40", "--out", str(out)]) == 0
    rows = (out / "wd_dueling_seed0.csv").read_text().splitlines()
    assert rows[-1].startswith("40,")


def test_config_error_exit_code(tmp_path, capsys):
    cfg = _cfg(tmp_path, {"env": {"D": -1}})
    assert cli.main(["--config", cfg, "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    assert "env.D" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert cli.main(["--config", str(tmp_path / "absent.json")]) == cli.EXIT_CONFIG


def test_all_cells_faulted_exit_code(tmp_path, monkeypatch):
    monkeypatch.setattr(harness, "run_cell", lambda cfg, seed: ([], None, "boom"))
    cfg = _cfg(tmp_path, {"seeds": [0, 1]})
    assert cli.main(["--config", cfg, "--out", str(tmp_path / "o")]) == cli.EXIT_FAULT


def test_partial_fault_still_succeeds(tmp_path, monkeypatch):
    real = harness.run_cell

    def flaky(cfg, seed):
        return ([], None, "boom") if seed == 0 else real(cfg, seed)

    monkeypatch.setattr(harness, "run_cell", flaky)
    cfg = _cfg(tmp_path, {"seeds": [0, 1], "iterations": 50, "eval_window": 20, "policy": "wd"})
    assert cli.main(["--config", cfg, "--out", str(tmp_path / "o")]) == cli.EXIT_OK


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "antijam", "--policy", "wd", "--iterations", "10",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "wd_dueling_seed0.csv").exists()
