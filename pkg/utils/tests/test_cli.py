#  BSD 3-Clause License
#
#  Copyright (c) 2023., reset-delay-certifier contributors
#  All rights reserved.
#
import argparse
import json
import os

import reset_delay_certifier.__search__.search as search
from reset_delay_certifier.__cli__.args import (
    EXIT_CONFIG_ERROR,
    EXIT_INFEASIBLE,
    EXIT_OK,
    certifier_cli_args,
)
from reset_delay_certifier.__cli__.cli import run
from reset_delay_certifier.__cli__.simulate import simulate_cli_command_logic
from reset_delay_certifier.__cli__.sweep import (
    decay_cli_command_logic,
    sweep_cli_command_logic,
)
from reset_delay_certifier.__cli__.table import table1_cli_command_logic
from reset_delay_certifier.__common__.output import read_config_line
from reset_delay_certifier.__sdp__.sdp import (
    VERDICT_FEASIBLE,
    VERDICT_INFEASIBLE,
    Certificate,
    load_certificate,
)

EXAMPLE1 = "./reset_delay_certifier/problems/example1-integrator.json"
EXAMPLE2 = "./reset_delay_certifier/problems/example2-unstable-base.json"


def should_run_solver():
    run_solver = True
    TST_SOLVER_X = os.getenv("TST_SOLVER_X", "1")
    if TST_SOLVER_X == "0":
        run_solver = False
    return run_solver


def parse(run_args):
    parser = argparse.ArgumentParser(
        description="test",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser = certifier_cli_args(parser)
    return parser.parse_args(args=run_args)


def write_problem(path, source, **changes):
    with open(source) as fd:
        problem = json.load(fd)
    for section, values in changes.items():
        if isinstance(values, dict):
            problem.setdefault(section, {}).update(values)
        else:
            problem[section] = values
    with open(path, "w") as fd:
        json.dump(problem, fd)
    return str(path)


def fake_oracle(rule):
    def oracle(model, query, options=None, dump_problem=None):
        ok = rule(query)
        verdict = VERDICT_FEASIBLE if ok else VERDICT_INFEASIBLE
        return ok, Certificate(verdict, 1e-9, solver_stats={"runtime_s": 0.0})

    return oracle


def test_default_args():
    args = parse([])
    assert args.tool == "certify"
    assert args.config.endswith("example1-integrator.json")
    assert args.out is None
    assert args.tol is None


def test_malformed_config_exit_code(tmp_path):
    config = write_problem(
        tmp_path / "bad.json", EXAMPLE1, controller={"p_r": 1.5}
    )
    assert run(["--tool", "certify", "--config", config]) == EXIT_CONFIG_ERROR
    missing = str(tmp_path / "missing.json")
    assert run(["--tool", "simulate", "--config", missing]) == EXIT_CONFIG_ERROR
    assert (
        run(["--tool", "verify", "--config", EXAMPLE1, "--out", str(tmp_path)])
        == EXIT_CONFIG_ERROR
    )


def test_simulate_writes_trajectory(tmp_path):
    config = write_problem(
        tmp_path / "short.json",
        EXAMPLE1,
        simulation={"horizon": 5.0, "step": 0.05},
        law={"kind": "periodic", "T": 1.0, "min_dwell": None},
    )
    args = parse(["--tool", "simulate", "--config", config, "--out", str(tmp_path)])
    assert simulate_cli_command_logic(args, "tool", "v0") == EXIT_OK
    csv_path = os.path.join(str(tmp_path), "example1-integrator-trajectory.csv")
    assert os.path.exists(csv_path)
    recorded = read_config_line(csv_path)
    assert recorded["law"]["kind"] == "periodic"
    assert recorded["output"]["dir"] == str(tmp_path)
    assert recorded["simulation"]["phi"]["values"][0] == [1.0, 0.0, 0.0]


def test_table1_with_stub_oracle(tmp_path, monkeypatch):
    monkeypatch.setattr(search, "is_feasible", fake_oracle(lambda q: q.T_m >= 0.5))
    config = write_problem(tmp_path / "table.json", EXAMPLE1, sweep={"M": [1, 3]})
    args = parse(
        ["--tool", "table1", "--config", config, "--out", str(tmp_path), "--jobs", "1"]
    )
    assert table1_cli_command_logic(args, "tool", "v0") == EXIT_OK
    csv_path = os.path.join(str(tmp_path), "example1-integrator-table1.csv")
    with open(csv_path) as fd:
        lines = fd.read().splitlines()
    assert lines[0].startswith("# config: ")
    assert len(lines) == 2 + 2


def test_sweep_and_decay_with_stub_oracle(tmp_path, monkeypatch):
    monkeypatch.setattr(
        search,
        "is_feasible",
        fake_oracle(lambda q: q.T_M <= 0.3 and q.alpha <= 0.5),
    )
    config = write_problem(
        tmp_path / "sweep.json",
        EXAMPLE2,
        sweep={"p_r": [0.5], "h": [0.1, 0.2], "T": [0.1, 0.2, 0.4]},
    )
    common = ["--config", config, "--out", str(tmp_path), "--jobs", "1"]
    args = parse(["--tool", "sweep"] + common)
    assert sweep_cli_command_logic(args, "tool", "v0") == EXIT_OK
    assert os.path.exists(
        os.path.join(str(tmp_path), "example2-unstable-base-sweep.csv")
    )

    args = parse(["--tool", "decay", "--tol", "0.01"] + common)
    assert decay_cli_command_logic(args, "tool", "v0") == EXIT_OK
    recorded = read_config_line(
        os.path.join(str(tmp_path), "example2-unstable-base-decay.csv")
    )
    assert recorded["sweep"]["alpha_tol"] == 0.01

    monkeypatch.setattr(search, "is_feasible", fake_oracle(lambda q: False))
    assert sweep_cli_command_logic(parse(["--tool", "sweep"] + common), "t", "v0") == (
        EXIT_INFEASIBLE
    )


def test_usage_errors_exit_with_config_code():
    assert run(["--tool", "certify", "--no-such-flag"]) == EXIT_CONFIG_ERROR
    assert run(["--tool", "not-a-tool"]) == EXIT_CONFIG_ERROR
    assert run(["--jobs", "many"]) == EXIT_CONFIG_ERROR
    assert run(["--help"]) == EXIT_OK


def test_certify_then_verify(tmp_path):
    if should_run_solver():
        out = str(tmp_path)
        stable = write_problem(
            tmp_path / "stable.json",
            EXAMPLE1,
            name="stable-base",
            plant={"A": [[-1.0]], "B": [[1.0]], "C": [[1.0]]},
            controller={"k_p": 0.5, "k_i": 0.2, "p_r": 0.0},
            h=0.1,
            query={"T_m": 0.5, "T_M": 1.0},
            simulation={"step": 0.01},
        )
        assert run(["--tool", "certify", "--config", stable, "--out", out]) == EXIT_OK
        cert_path = os.path.join(out, "stable-base-certificate.json")
        cert = load_certificate(cert_path)
        assert cert.verdict == VERDICT_FEASIBLE
        assert cert.metadata["query"]["T_m"] == 0.5
        assert run(["--tool", "verify", "--config", stable, "--out", out]) == EXIT_OK

        diverging = write_problem(
            tmp_path / "diverging.json",
            EXAMPLE1,
            name="diverging-base",
            controller={"k_p": 3.0, "k_i": 0.3, "p_r": 0.0},
            query={"T_m": 0.5, "T_M": 0.5},
        )
        assert run(["--tool", "certify", "--config", diverging, "--out", out]) != EXIT_OK
