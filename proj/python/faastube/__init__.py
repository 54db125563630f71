# SPDX-FileCopyrightText: Copyright (c) 2026 The FaaSTube-Sim Authors. All rights reserved.
# SPDX-License-Identifier: Apache-2.0
"""Python access to the serverless GPU data-passing simulator."""

import json as _json
from pathlib import Path as _Path

from . import _faastube
from ._faastube import (  # noqa: F401
    GB,
    MB,
    ConfigError,
    FaasTubeError,
    MissingData,
    SchedulingError,
    TopologyError,
    WorkflowError,
    distribute_chunks,
    gen_workload,
    min_rate,
    pair_bandwidth,
    percentile,
    pinned_cost,
    pipeline_latency,
    select_paths,
    strategy_names,
    topology_names,
    water_fill,
    workflow_names,
)


def topology(name):
    """Preset name or JSON path, returned as a dict."""
    return _json.loads(_faastube.topology_json(str(name)))


def validate_topology(doc):
    return _faastube.validate_topology(_json.dumps(doc))


def workflow(name):
    return _json.loads(_faastube.workflow_json(name))


def run_experiment(config, base_dir=None):
    """Runs a config given as a dict or a path to a JSON file.

    The result holds ``summary``, per-workflow summaries under ``workflows``,
    ``warnings`` and the per-request table as a ``requests_csv`` string.
    """
    if isinstance(config, (str, _Path)):
        path = _Path(config)
        return run_experiment(_json.loads(path.read_text()), path.parent)
    return _json.loads(_faastube.run_experiment(_json.dumps(config), str(base_dir or "")))


def max_throughput(config, slo_ms):
    """Returns (requests per second, diagnostic)."""
    return _faastube.max_throughput(_json.dumps(config), slo_ms)
