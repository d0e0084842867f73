#  BSD 3-Clause License
#
#  Copyright (c) 2023., reset-delay-certifier contributors
#  All rights reserved.
#
import logging

import numpy as np

from reset_delay_certifier.__cli__.args import EXIT_OK
from reset_delay_certifier.__common__.config import resolve_config
from reset_delay_certifier.__common__.exceptions import DecayEstimationError
from reset_delay_certifier.__common__.output import print_results_table
from reset_delay_certifier.__sim__.sim import (
    estimate_decay_rate,
    simulate_reset_system,
    trajectory_to_csv,
    w_norm,
)


def trajectory_summary(traj, phi, tail_fraction):
    initial = float(np.linalg.norm(traj.x[0]))
    final = float(np.linalg.norm(traj.final_state))
    peak = float(np.max(traj.norms))
    decay = None
    if not traj.diverged:
        try:
            decay = estimate_decay_rate(traj, tail_fraction)
        except DecayEstimationError as e:
            logging.warning("Decay estimate unavailable: {}".format(e))
    growing = traj.diverged or peak > 10.0 * max(initial, w_norm(phi))
    return {
        "status": "divergent" if growing else "convergent",
        "diverged_flag": traj.diverged,
        "resets": len(traj.resets),
        "t_end": float(traj.t[-1]),
        "initial_norm": initial,
        "final_norm": final,
        "peak_norm": peak,
        "phi_w_norm": w_norm(phi),
        "decay_estimate": decay,
    }


def simulate_cli_command_logic(args, project_name, project_version):
    config = resolve_config(args)
    model = config.closed_loop()
    law = config.law()
    sim = config["simulation"]
    phi = config.initial_condition(model.n)
    logging.info(
        "Simulating {} with law {} over [0, {}]".format(
            config.name, law.kind, sim["horizon"]
        )
    )
    traj = simulate_reset_system(model, law, phi, sim["horizon"], sim["step"])
    summary = trajectory_summary(traj, phi, sim["tail_fraction"])
    print_results_table(
        "Simulation summary for {}".format(config.name),
        list(summary.keys()),
        [list(summary.values())],
    )
    resolved = config.to_dict()
    resolved["simulation"]["phi"] = phi.to_dict()
    trajectory_to_csv(traj, config.output_path("trajectory.csv"), resolved)
    return EXIT_OK
