import json
import subprocess
import sys

import numpy as np
import pytest

from stronginv import errors
from stronginv.cli import (EXIT_BUDGET, EXIT_CONFIG, EXIT_FAIL, EXIT_PASS, ConfigError,
                           exit_status_for, run)
from stronginv.export import read_trajectory


def last_json(text):
    return json.loads(text.strip().splitlines()[-1])


def test_simulate_intro(tmp_path, capsys):
    out = tmp_path / "arc.csv"
    assert run(["simulate", "--scenario", "intro", "--start", "0.5", "--out", str(out)]) == EXIT_PASS
    traj, header = read_trajectory(out)
    assert header["converged"] is True
    assert np.max(np.abs(traj.points[:, 0] - np.maximum(0.5 - traj.times, 0))) <= 1e-2


def test_certify_counterexample(capsys):
    assert run(["certify", "--scenario", "counterexample31", "--region", "neighborhood"]) == EXIT_FAIL
    cert = json.loads(capsys.readouterr().out)
    assert cert["verdict"] == "fail" and max(w["margin"] for w in cert["witnesses"]) > 0


def test_certify_intro_hamiltonian(capsys):
    assert run(["certify", "--scenario", "intro", "--condition", "hamiltonian"]) == EXIT_PASS
    assert json.loads(capsys.readouterr().out)["verdict"] == "pass"


def test_equivalence_and_escape(capsys):
    assert run(["equivalence", "--scenario", "expansion"]) == EXIT_PASS
    assert json.loads(capsys.readouterr().out)["label"] == "agreement"
    assert run(["escape", "--scenario", "expansion", "--start", "0.5", "--horizon", "3"]) == EXIT_PASS
    rep = json.loads(capsys.readouterr().out)
    assert rep["classification"] == "E3" and rep["escape_time"] == pytest.approx(np.log(1.2 / 0.5), abs=5e-3)


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.toml"
    cfg.write_text('command = "simulate"\nscenario = "intro"\nstart = [0.5]\n'
                   'k_list = [10, 20]\neps_list = [0.1, 0.05]\ntol = 1e-9\n')
    assert run(["simulate", "--config", str(cfg)]) == EXIT_BUDGET
    err = last_json(capsys.readouterr().err)
    assert err["error"] == "NoConvergence" and err["exit_status"] == EXIT_BUDGET
    assert run(["simulate", "--config", str(cfg), "--tol", "1e-2"]) == EXIT_PASS


@pytest.mark.parametrize("argv", [
    ["certify", "--scenario", "bogus"],
    ["certify"],
    ["simulate", "--scenario", "intro", "--tol", "-1"],
    ["simulate", "--scenario", "intro", "--k-list", "10,20"],
    ["simulate", "--scenario", "intro", "--k-list", "10,20", "--eps-list", "0.1"],
    ["certify", "--scenario", "example21", "--condition", "hamiltonian"],
    ["simulate", "--scenario", "intro", "--start", "0.5,0.2"],
    ["simulate", "--scenario", "intro", "--config", "/nonexistent.toml"],
    ["frobnicate"],
])
def test_config_errors(argv, capsys):
    assert run(argv) == EXIT_CONFIG
    assert last_json(capsys.readouterr().err)["exit_status"] == EXIT_CONFIG


def test_bad_toml(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("scenario = [unclosed\n")
    assert run(["certify", "--config", str(cfg)]) == EXIT_CONFIG
    cfg.write_text('command = "escape"\nscenario = "intro"\n')
    assert run(["certify", "--config", str(cfg)]) == EXIT_CONFIG
    cfg.write_text('scenario = "intro"\n[params]\nbogus = 1\n')
    assert run(["certify", "--config", str(cfg)]) == EXIT_CONFIG


def all_error_classes():
    seen, todo = [], [errors.StrongInvError]
    while todo:
        cls = todo.pop()
        seen.append(cls)
        todo.extend(cls.__subclasses__())
    return seen


EXPECTED = {
    "SearchExhausted": EXIT_BUDGET, "NoAdmissibleVelocity": EXIT_BUDGET, "NoConvergence": EXIT_BUDGET,
    "NoSelectionFound": EXIT_BUDGET, "BoundViolated": EXIT_FAIL,
}


def test_exit_status_exhaustive():
    classes = all_error_classes()
    assert ConfigError in classes
    for cls in classes:
        exc = cls.__new__(cls)
        assert exit_status_for(exc) == EXPECTED.get(cls.__name__, EXIT_CONFIG), cls.__name__
    assert exit_status_for(ZeroDivisionError()) is None


def test_budget_error_from_selection(monkeypatch, capsys):
    import stronginv.cli as cli

    def boom(cfg):
        raise errors.NoSelectionFound("residual too large", residual=0.5, time=0.1)

    monkeypatch.setitem(cli.HANDLERS, "certify", boom)
    assert run(["certify", "--scenario", "intro"]) == EXIT_BUDGET
    err = last_json(capsys.readouterr().err)
    assert err["residual"] == 0.5 and err["error"] == "NoSelectionFound"


def test_module_entry_point(tmp_path):
    out = tmp_path / "c.json"
    proc = subprocess.run([sys.executable, "-m", "stronginv.cli", "certify", "--scenario", "intro",
                           "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(out.read_text())["verdict"] == "pass"
