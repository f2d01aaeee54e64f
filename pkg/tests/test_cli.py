import json

import numpy as np
import pytest

from obstacle_control.cli import load_config, main

BASE = """
[grid]
dim = 1
nodes_per_axis = 65
[data]
g = const:2
b = const:1
q = 0
[checks]
n_pairs = 2
"""


@pytest.fixture
def cfg(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(BASE)
    return str(path)


def _csv_body(path):
    lines = path.read_text().splitlines()
    return [line for line in lines if not line.startswith("#")]


def test_solve_analytic(cfg, tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == 0
    assert "complementarity residual" in capsys.readouterr().out
    rows = _csv_body(out / "solution.csv")[1:]
    x = np.array([float(r.split(",")[1]) for r in rows])
    u = np.array([float(r.split(",")[2]) for r in rows])
    assert np.abs(u - (-x**2 + 2 * x + 1)).max() < 1e-8


def test_solve_zero_data(tmp_path):
    out = tmp_path / "o"
    assert main(["solve", "--out", str(out)]) == 0
    rows = _csv_body(out / "solution.csv")[1:]
    assert all(float(r.split(",")[2]) == 0.0 for r in rows)


def test_header_echoes_config(cfg, tmp_path):
    out = tmp_path / "o"
    main(["solve", "--config", cfg, "--out", str(out), "--mode", "robin", "--h", "7"])
    head = [ln for ln in (out / "solution.csv").read_text().splitlines() if ln.startswith("# config:")]
    conf = json.loads(head[0][len("# config: "):])
    assert conf["problem"] == {"mode": "robin", "h": 7.0, "M": 1.0}
    assert set(conf) == {"grid", "data", "problem", "solver", "control", "checks", "sweep", "run"}


def test_malformed_config(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[grid\nnodes = 3\n")
    assert main(["solve", "--config", str(bad)]) == 1
    assert "malformed config" in capsys.readouterr().err
    bad.write_text("[grid]\nnodes = 3\n")
    assert main(["solve", "--config", str(bad)]) == 1
    bad.write_text("[grid]\nnodes_per_axis = two\n")
    assert main(["solve", "--config", str(bad)]) == 1


def test_usage_errors_exit_1(capsys):
    with pytest.raises(SystemExit) as err:
        main(["frobnicate"])
    assert err.value.code == 1
    with pytest.raises(SystemExit) as err:
        main(["solve", "--mode", "neumann"])
    assert err.value.code == 1


def test_check_unknown_name(cfg, capsys):
    assert main(["check", "bogus", "--config", cfg]) == 1
    assert "theorem1" in capsys.readouterr().err


def test_check_single_name(cfg, tmp_path):
    out = tmp_path / "o"
    assert main(["check", "mignot", "--config", cfg, "--out", str(out)]) == 0
    rows = _csv_body(out / "checks.csv")
    assert rows[0] == "check_name,mode,mu,lhs,rhs,slack,pass"
    assert {r.split(",")[0] for r in rows[1:]} == {"mignot"}


def test_check_deterministic(cfg, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["check", "theorem1", "sandwich", "--config", cfg, "--out", str(out)]) == 0
    assert (a / "checks.csv").read_bytes() == (b / "checks.csv").read_bytes()


def test_optimize(cfg, tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["optimize", "--config", cfg, "--out", str(out)]) == 0
    assert "J = 0.44273043" in capsys.readouterr().out
    assert (out / "control_nodes.csv").exists()


def test_optimize_zero_data(tmp_path):
    out = tmp_path / "o"
    assert main(["optimize", "--out", str(out)]) == 0
    rows = _csv_body(out / "control_nodes.csv")[1:]
    assert all(float(r.split(",")[2]) == 0.0 for r in rows)


def test_optimize_max_iter_exit_3(tmp_path):
    path = tmp_path / "mi.ini"
    path.write_text("[data]\nb = 1\n[control]\nmax_iter = 1\n")
    out = tmp_path / "o"
    assert main(["optimize", "--config", str(path), "--out", str(out)]) == 3
    assert len(_csv_body(out / "control_history.csv")) == 3


def test_solver_failure_exit_2(tmp_path):
    path = tmp_path / "s.ini"
    path.write_text("[data]\ng = step:10,-50,0.5\nb = 0.2\n[solver]\nsolver = psor\nmax_iter = 10\n")
    assert main(["solve", "--config", str(path), "--out", str(tmp_path / "o")]) == 2


def test_sweep(cfg, tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["sweep", "--config", cfg, "--out", str(out), "--h-list", "1,10,100,1000,10000"]) == 0
    text = capsys.readouterr().out
    assert "rate state_dist_V" in text
    for name in ("sweep_state.csv", "sweep_control.csv", "sweep_rates.csv"):
        assert "# command: \"sweep\"" in (out / name).read_text()
    assert main(["report", "--out", str(out)]) == 0
    assert "sweep control" in (out / "report.txt").read_text()


def test_sweep_zero_data_and_single_h(tmp_path):
    out = tmp_path / "o"
    assert main(["sweep", "--out", str(out)]) == 0
    rows = _csv_body(out / "sweep_state.csv")[1:]
    assert all(float(r.split(",")[1]) == 0.0 for r in rows)
    assert main(["sweep", "--out", str(out), "--h-list", "10"]) == 1


def test_report_without_results(tmp_path):
    assert main(["report", "--out", str(tmp_path / "empty")]) == 1


def test_flags_override_config(cfg):
    conf = load_config(cfg, {("problem", "M"): "2.5", ("run", "seed"): "9"})
    assert conf["problem"]["M"] == 2.5 and conf["run"]["seed"] == 9
    assert conf["data"]["g"] == "const:2"


def test_inline_comments(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[problem]   ; boundary settings\nmode = robin   ; Robin on the left\nh = 3\n")
    conf = load_config(str(path))
    assert conf["problem"]["mode"] == "robin" and conf["problem"]["h"] == 3.0
