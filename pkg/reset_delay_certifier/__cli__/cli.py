#  BSD 3-Clause License
#
#  Copyright (c) 2023., reset-delay-certifier contributors
#  All rights reserved.
#

import argparse
import logging
import sys

from reset_delay_certifier.__cli__.args import (
    CLI_TOOL_CERTIFY,
    CLI_TOOL_DECAY,
    CLI_TOOL_SIMULATE,
    CLI_TOOL_SWEEP,
    CLI_TOOL_TABLE1,
    CLI_TOOL_VERIFY,
    EXIT_CONFIG_ERROR,
    EXIT_OK,
    certifier_cli_args,
)
from reset_delay_certifier.__cli__.certify import (
    certify_cli_command_logic,
    verify_cli_command_logic,
)
from reset_delay_certifier.__cli__.simulate import simulate_cli_command_logic
from reset_delay_certifier.__cli__.sweep import (
    decay_cli_command_logic,
    sweep_cli_command_logic,
)
from reset_delay_certifier.__cli__.table import table1_cli_command_logic
from reset_delay_certifier.__common__.env import LOG_DATEFMT, LOG_FORMAT, LOG_LEVEL
from reset_delay_certifier.__common__.exceptions import CertifierError, ConfigError
from reset_delay_certifier.__common__.package import (
    get_version_string,
    populate_with_poetry_data,
)

TOOLS = {
    CLI_TOOL_CERTIFY: certify_cli_command_logic,
    CLI_TOOL_VERIFY: verify_cli_command_logic,
    CLI_TOOL_TABLE1: table1_cli_command_logic,
    CLI_TOOL_SIMULATE: simulate_cli_command_logic,
    CLI_TOOL_SWEEP: sweep_cli_command_logic,
    CLI_TOOL_DECAY: decay_cli_command_logic,
}


def run(argv=None):
    _, _, project_version = populate_with_poetry_data()
    project_name = "reset-delay-certifier"
    parser = argparse.ArgumentParser(
        description=get_version_string(project_name, project_version),
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser = certifier_cli_args(parser)
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits with 2 on usage errors, which is the inconclusive code here
        if e.code in (0, None):
            return EXIT_OK
        return EXIT_CONFIG_ERROR

    if args.logname is not None:
        print("Writting log to {}".format(args.logname))
        logging.basicConfig(
            filename=args.logname,
            filemode="a",
            format=LOG_FORMAT,
            datefmt=LOG_DATEFMT,
            level=LOG_LEVEL,
        )
    else:
        # logging settings
        logging.basicConfig(
            format=LOG_FORMAT,
            level=LOG_LEVEL,
            datefmt=LOG_DATEFMT,
        )
    logging.info(
        "Using: {project_name} {project_version}".format(
            project_name=project_name, project_version=project_version
        )
    )
    try:
        return TOOLS[args.tool](args, project_name, project_version)
    except ConfigError as e:
        logging.error("Configuration error: {}".format(e))
        return EXIT_CONFIG_ERROR
    except CertifierError as e:
        logging.error("{} failed: {}".format(args.tool, e))
        return EXIT_CONFIG_ERROR


def main():
    sys.exit(run())
