#  BSD 3-Clause License
#
#  Copyright (c) 2023., reset-delay-certifier contributors
#  All rights reserved.
#
import logging

from reset_delay_certifier.__cli__.args import (
    EXIT_INCONCLUSIVE,
    EXIT_INFEASIBLE,
    EXIT_OK,
)
from reset_delay_certifier.__common__.config import resolve_config
from reset_delay_certifier.__common__.exceptions import ConfigError
from reset_delay_certifier.__common__.output import (
    print_results_table,
    write_results_csv,
)
from reset_delay_certifier.__search__.search import (
    VERDICT_ERROR,
    check_frontier_monotone,
    decay_vs_period,
    max_decay_rate,
    period_vs_delay_sweep,
)

SWEEP_HEADERS = [
    "p_r",
    "h",
    "T_max",
    "verdict",
    "solves",
    "solver_time_s",
    "message",
]
DECAY_HEADERS = ["T_m", "T_M", "alpha_max", "verdict", "solves", "solver_time_s"]


def results_exit_code(results):
    if any(r.verdict == VERDICT_ERROR for r in results):
        return EXIT_INCONCLUSIVE
    if all(r.value is None for r in results):
        return EXIT_INFEASIBLE
    return EXIT_OK


def sweep_cli_command_logic(args, project_name, project_version):
    """Largest certified periodic reset period per (p_r, h) cell."""
    config = resolve_config(args)
    sweep = config["sweep"]
    query = config["query"]
    for key in ("p_r", "h", "T"):
        if not sweep.get(key):
            raise ConfigError(
                "sweep needs a non-empty '{}' grid".format(key), {"sweep": [key]}
            )
    controller = config["controller"]
    results = period_vs_delay_sweep(
        config.plant(),
        controller["k_p"],
        controller["k_i"],
        sweep["p_r"],
        sweep["h"],
        sweep["T"],
        N=query["N"],
        M=query["M"],
        alpha=query["alpha"],
        tol=sweep["T_tol"],
        jobs=args.jobs,
        options=config.solver_options(),
    )
    rows = [
        [
            r.params["p_r"],
            r.params["h"],
            r.value,
            r.verdict,
            r.solves,
            round(r.solver_time, 3),
            r.message,
        ]
        for r in results
    ]
    table_name = "Allowable periodic reset period vs delay"
    print_results_table(table_name, SWEEP_HEADERS, rows)
    write_results_csv(
        config.output_path("sweep.csv"),
        table_name,
        SWEEP_HEADERS,
        rows,
        config.to_dict(),
    )
    for violation in check_frontier_monotone(results, sweep["T_tol"]):
        logging.warning(
            "Allowable T grows with h at p_r={}: h {} -> T {}".format(
                violation["p_r"], violation["h"], violation["T"]
            )
        )
    return results_exit_code(results)


def decay_cli_command_logic(args, project_name, project_version):
    """Certified decay rate at the configured interval, or along sweep.T."""
    config = resolve_config(args, tol_key="alpha_tol")
    sweep = config["sweep"]
    query = config["query"]
    model = config.sampled_data()
    options = config.solver_options()
    if sweep.get("T"):
        results = decay_vs_period(
            model,
            sweep["T"],
            N=query["N"],
            M=query["M"],
            asynchronous_ratio=sweep["asynchronous_ratio"],
            tol=sweep["alpha_tol"],
            alpha_upper=sweep["alpha_upper"],
            jobs=args.jobs,
            options=options,
        )
    else:
        if query["T_m"] is None or query["T_M"] is None:
            raise ConfigError("decay needs query.T_m and query.T_M or a sweep.T grid")
        result = max_decay_rate(
            model,
            query["N"],
            query["M"],
            query["T_m"],
            query["T_M"],
            tol=sweep["alpha_tol"],
            alpha_upper=sweep["alpha_upper"],
            options=options,
        )
        results = [result]
    rows = [
        [
            r.params["T_m"],
            r.params["T_M"],
            r.value,
            r.verdict,
            r.solves,
            round(r.solver_time, 3),
        ]
        for r in results
    ]
    table_name = "Certified decay rate vs reset period"
    print_results_table(table_name, DECAY_HEADERS, rows)
    write_results_csv(
        config.output_path("decay.csv"),
        table_name,
        DECAY_HEADERS,
        rows,
        config.to_dict(),
    )
    return results_exit_code(results)
