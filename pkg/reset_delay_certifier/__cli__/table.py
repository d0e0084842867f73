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
from reset_delay_certifier.__search__.search import VERDICT_ERROR, table1

TABLE1_HEADERS = ["M", "T_m", "verdict", "lower_infeasible", "solver_time_s"]


def table1_rows(results):
    return [
        [
            r.params["M"],
            r.value,
            r.verdict,
            r.other,
            round(r.solver_time, 3),
        ]
        for r in results
    ]


def table1_exit_code(results):
    if any(r.verdict == VERDICT_ERROR for r in results):
        return EXIT_INCONCLUSIVE
    if any(r.value is None for r in results):
        return EXIT_INFEASIBLE
    return EXIT_OK


def table1_cli_command_logic(args, project_name, project_version):
    config = resolve_config(args)
    query = config["query"]
    if query["T_M"] is None:
        raise ConfigError("table1 needs query.T_M", {"query": ["T_M"]})
    sweep = config["sweep"]
    model = config.sampled_data()
    logging.info(
        "Minimum T_m for M in {} (N={}, alpha={}, T_M={})".format(
            sweep["M"], query["N"], query["alpha"], query["T_M"]
        )
    )
    results = table1(
        model,
        N=query["N"],
        M_list=sweep["M"],
        alpha=query["alpha"],
        T_M=query["T_M"],
        tol=sweep["T_tol"],
        jobs=args.jobs,
        options=config.solver_options(),
    )
    rows = table1_rows(results)
    table_name = "Minimum T_m per partition count M"
    print_results_table(table_name, TABLE1_HEADERS, rows)
    write_results_csv(
        config.output_path("table1.csv"),
        table_name,
        TABLE1_HEADERS,
        rows,
        config.to_dict(),
    )
    return table1_exit_code(results)
