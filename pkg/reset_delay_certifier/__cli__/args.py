#  BSD 3-Clause License
#
#  Copyright (c) 2023., reset-delay-certifier contributors
#  All rights reserved.
#
import os

from reset_delay_certifier.__common__.env import MACHINE_CPU_COUNT, PROBLEMS_PATH

CLI_TOOL_CERTIFY = "certify"
CLI_TOOL_TABLE1 = "table1"
CLI_TOOL_SIMULATE = "simulate"
CLI_TOOL_SWEEP = "sweep"
CLI_TOOL_DECAY = "decay"
CLI_TOOL_VERIFY = "verify"
CLI_TOOLS = [
    CLI_TOOL_CERTIFY,
    CLI_TOOL_TABLE1,
    CLI_TOOL_SIMULATE,
    CLI_TOOL_SWEEP,
    CLI_TOOL_DECAY,
    CLI_TOOL_VERIFY,
]

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_INCONCLUSIVE = 2
EXIT_CONFIG_ERROR = 3

DEFAULT_PROBLEM = os.path.join(PROBLEMS_PATH, "example1-integrator.json")


def certifier_cli_args(parser):
    parser.add_argument(
        "--tool",
        type=str,
        default=CLI_TOOL_CERTIFY,
        choices=CLI_TOOLS,
        help="subtool to use. One of '{}' ".format(",".join(CLI_TOOLS)),
    )
    parser.add_argument(
        "--config",
        type=str,
        default=DEFAULT_PROBLEM,
        help="problem definition file (JSON). Bundled problems can be referred by file name",
    )
    parser.add_argument(
        "--out",
        type=str,
        default=None,
        help="output directory. Defaults to the problem's output.dir",
    )
    parser.add_argument(
        "--jobs",
        type=int,
        default=MACHINE_CPU_COUNT,
        help="number of worker processes for table and sweep cells",
    )
    parser.add_argument(
        "--tol",
        type=float,
        default=None,
        help="bisection tolerance. Overrides sweep.T_tol, or sweep.alpha_tol for the decay tool",
    )
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help="seed of the bounded_random resetting law",
    )
    parser.add_argument(
        "--certificate",
        type=str,
        default=None,
        help="certificate JSON to re-verify (verify tool). Defaults to the one certify writes",
    )
    parser.add_argument(
        "--dump-problem",
        type=str,
        default=None,
        help="write the assembled LMI problem as JSON to this path",
    )
    parser.add_argument("--logname", type=str, default=None)
    return parser
