# SPDX-FileCopyrightText: Copyright (c) 2026 The FaaSTube-Sim Authors. All rights reserved.
# SPDX-License-Identifier: Apache-2.0

import pytest

import faastube as ft


def test_presets():
    assert set(ft.topology_names()) == {"dgx_v100", "dgx_a100", "quad_a10"}
    topo = ft.topology("dgx_v100")
    assert ft.validate_topology(topo) == []
    assert "yelp" in ft.workflow_names()
    assert [f["id"] for f in ft.workflow("yelp")["functions"]] == ["bert_1", "bert_2"]


def test_bandwidth_helpers():
    assert ft.pair_bandwidth("dgx_v100", 0, 5) == pytest.approx(7.9)
    paths = ft.select_paths("dgx_v100", 0, 5)
    assert sum(rate for _, rate in paths) == pytest.approx(48.0)
    assert ft.pipeline_latency(96 * ft.MB, [12, 12], 2 * ft.MB) == pytest.approx(96 / 12 + 2 / 12)
    assert ft.water_fill([12.0], [[0], [0]], [float("inf")] * 2) == pytest.approx([6.0, 6.0])
    assert ft.min_rate(480 * ft.MB, 100, 60) == pytest.approx(12.0)
    assert ft.distribute_chunks([48, 24], 30) == [20, 10]
    assert ft.percentile(list(range(1, 101)), 99) == 99


def test_errors_map_to_python():
    with pytest.raises(ft.TopologyError):
        ft.topology("dgx_h100")
    with pytest.raises(ft.ConfigError) as info:
        ft.run_experiment({"topology": "dgx_h100", "workflows": ["nope"]})
    assert len(str(info.value).splitlines()) == 2
    with pytest.raises(ft.FaasTubeError):
        ft.pipeline_latency(1.0, [], 1.0)


def test_run_experiment_is_deterministic():
    cfg = {
        "topology": "dgx_v100",
        "workflows": [{"preset": "yelp", "rate_rps": 20}],
        "strategy": "faastube",
        "duration_ms": 500,
        "seed": 2,
    }
    a = ft.run_experiment(cfg)
    b = ft.run_experiment(cfg)
    assert a == b
    summary = a["summary"]
    assert summary["requests"] == summary["completed"] > 0
    assert a["requests_csv"].count("\n") == summary["requests"] + 1
    assert a["workflows"]["yelp"]["slo_ms"] > 0
    baseline = ft.run_experiment({**cfg, "strategy": "infless_plus"})
    assert summary["p99_ms"] < baseline["summary"]["p99_ms"]


def test_workload_generation():
    arrivals = ft.gen_workload("periodic", 10, 1000, 1)
    assert len(arrivals) == 10
    assert ft.gen_workload("bursty", 10, 5000, 3) == ft.gen_workload("bursty", 10, 5000, 3)
