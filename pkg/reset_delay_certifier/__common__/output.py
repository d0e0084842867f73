#  BSD 3-Clause License
#
#  Copyright (c) 2023., reset-delay-certifier contributors
#  All rights reserved.
#
import json
import logging
import os

import numpy as np
from pytablewriter import CsvTableWriter, MarkdownTableWriter

CONFIG_COMMENT_PREFIX = "# config: "


def json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError("Object of type {} is not JSON serializable".format(type(obj)))


def config_line(config):
    return CONFIG_COMMENT_PREFIX + json.dumps(
        config, sort_keys=True, default=json_default
    )


def print_results_table(table_name, headers, value_matrix):
    writer = MarkdownTableWriter(
        table_name=table_name,
        headers=headers,
        value_matrix=value_matrix,
    )
    writer.write_table()


def write_results_csv(dest_fpath, table_name, headers, value_matrix, config=None):
    """CSV with a leading '# config: {...}' line recording the resolved config."""
    dest_dir = os.path.dirname(dest_fpath)
    if dest_dir != "":
        os.makedirs(dest_dir, exist_ok=True)
    csv_writer = CsvTableWriter(
        table_name=table_name,
        headers=headers,
        value_matrix=value_matrix,
    )
    logging.info("Storing {} into {}".format(table_name, dest_fpath))
    with open(dest_fpath, "w") as fd:
        if config is not None:
            fd.write(config_line(config) + "\n")
        fd.write(csv_writer.dumps())
    return dest_fpath


def read_config_line(csv_fpath):
    with open(csv_fpath, "r") as fd:
        first = fd.readline().rstrip("\n")
    if not first.startswith(CONFIG_COMMENT_PREFIX):
        return None
    return json.loads(first[len(CONFIG_COMMENT_PREFIX) :])


def write_json(dest_fpath, payload):
    dest_dir = os.path.dirname(dest_fpath)
    if dest_dir != "":
        os.makedirs(dest_dir, exist_ok=True)
    with open(dest_fpath, "w") as fd:
        json.dump(payload, fd, indent=2, default=json_default)
    return dest_fpath
