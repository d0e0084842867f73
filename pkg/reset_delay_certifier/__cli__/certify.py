#  BSD 3-Clause License
#
#  Copyright (c) 2023., reset-delay-certifier contributors
#  All rights reserved.
#
import logging
import os

import numpy as np

from reset_delay_certifier.__cli__.args import (
    EXIT_INCONCLUSIVE,
    EXIT_INFEASIBLE,
    EXIT_OK,
)
from reset_delay_certifier.__common__.config import resolve_config
from reset_delay_certifier.__common__.exceptions import ConfigError
from reset_delay_certifier.__common__.output import print_results_table
from reset_delay_certifier.__lmi__.conditions import assemble_conditions
from reset_delay_certifier.__model__.model import delay_free_spectrum, model_to_dict
from reset_delay_certifier.__sdp__.sdp import (
    VERDICT_FEASIBLE,
    VERDICT_INFEASIBLE,
    certificate_to_json,
    load_certificate,
    solve,
    verify_certificate,
)

MARGIN_MATCH_TOL = 1e-9


def verdict_exit_code(verdict):
    if verdict == VERDICT_FEASIBLE:
        return EXIT_OK
    if verdict == VERDICT_INFEASIBLE:
        return EXIT_INFEASIBLE
    return EXIT_INCONCLUSIVE


def residuals_matrix(residuals):
    return [
        [name, r.sense, "{:.3e}".format(r.min_eig), "{:.3e}".format(r.max_eig), r.ok]
        for name, r in residuals.items()
    ]


def certify_cli_command_logic(args, project_name, project_version):
    config = resolve_config(args)
    closed = config.closed_loop()
    model = config.sampled_data()
    query = config.query()
    options = config.solver_options()

    spectrum = delay_free_spectrum(closed)
    if np.max(spectrum.real) >= 0:
        logging.warning(
            "Delay-free closed loop (reset disabled) is not Hurwitz: max Re = {:.4f}".format(
                np.max(spectrum.real)
            )
        )
    logging.info(
        "Certifying {}: alpha={} T in [{}, {}] N={} M={}".format(
            config.name, query.alpha, query.T_m, query.T_M, query.N, query.M
        )
    )
    problem = assemble_conditions(model, query, options.epsilon_scale)
    dump_problem = config["solver"]["dump_problem"]
    if dump_problem is not None:
        problem.to_json(dump_problem)
    cert = solve(problem, options)

    print_results_table(
        "Certificate for {}".format(config.name),
        ["Verdict", "Epsilon", "Worst margin", "Solver status", "Runtime (s)"],
        [
            [
                cert.verdict,
                "{:.3e}".format(cert.epsilon),
                cert.worst_margin(),
                cert.solver_stats.get("status", cert.solver_stats.get("message")),
                "{:.3f}".format(cert.solver_stats.get("runtime_s", 0.0)),
            ]
        ],
    )
    if cert.residuals:
        print_results_table(
            "Block residuals",
            ["Block", "Sense", "Min eig", "Max eig", "OK"],
            residuals_matrix(cert.residuals),
        )

    out_dir = config["output"]["dir"]
    os.makedirs(out_dir, exist_ok=True)
    certificate_to_json(
        cert,
        config.output_path("certificate.json"),
        query=query.to_dict(),
        model=model_to_dict(model),
    )
    return verdict_exit_code(cert.verdict)


def verify_cli_command_logic(args, project_name, project_version):
    """Reload a certificate and re-run the eigenvalue checks against the config."""
    config = resolve_config(args)
    cert_path = args.certificate
    if cert_path is None:
        cert_path = config.output_path("certificate.json")
    if not os.path.exists(cert_path):
        raise ConfigError("Certificate {} not found".format(cert_path))
    cert = load_certificate(cert_path)
    if cert.variables is None:
        logging.info(
            "Certificate {} holds verdict {} without variables".format(
                cert_path, cert.verdict
            )
        )
        return verdict_exit_code(cert.verdict)

    problem = assemble_conditions(
        config.sampled_data(), config.query(), config.solver_options().epsilon_scale
    )
    residuals = verify_certificate(problem, cert.variables, cert.epsilon)
    print_results_table(
        "Re-verified residuals for {}".format(cert_path),
        ["Block", "Sense", "Min eig", "Max eig", "OK"],
        residuals_matrix(residuals),
    )
    mismatched = [
        name
        for name, r in residuals.items()
        if name not in cert.residuals
        or abs(r.margin - cert.residuals[name].margin)
        > MARGIN_MATCH_TOL * (1.0 + abs(r.margin))
    ]
    if mismatched:
        logging.error(
            "Margins differ from the stored certificate on {}".format(
                ",".join(mismatched)
            )
        )
        return EXIT_INCONCLUSIVE
    if not all(r.ok for r in residuals.values()):
        logging.error("Certificate {} does not satisfy the margins".format(cert_path))
        return EXIT_INFEASIBLE
    logging.info("Certificate {} verified".format(cert_path))
    return EXIT_OK
