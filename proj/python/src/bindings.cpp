// SPDX-FileCopyrightText: Copyright (c) 2026 The FaaSTube-Sim Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "faastube/harness.hpp"

namespace py = pybind11;
using namespace faastube;
using nlohmann::json;

namespace {

// JSON crosses the boundary as text; the Python package wraps it in dicts.
std::string report_text(const Report& r) {
  json j = r.json();
  j["requests_csv"] = r.csv();
  return j.dump();
}

std::vector<std::pair<std::vector<int>, double>> paths_between(const std::string& topology,
                                                                int src, int dst) {
  const auto t = load_topology(topology);
  BandwidthMatrix m(t);
  std::vector<std::pair<std::vector<int>, double>> out;
  for (const auto& p : select_paths(m, {1, src, dst})) out.emplace_back(p.gpus, p.b_min_gbps);
  return out;
}

}  // namespace

PYBIND11_MODULE(_faastube, m) {
  m.doc() = "Serverless GPU data-passing simulator";

  auto base = py::register_exception<Error>(m, "FaasTubeError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<TopologyError>(m, "TopologyError", base.ptr());
  py::register_exception<WorkflowError>(m, "WorkflowError", base.ptr());
  py::register_exception<SchedulingError>(m, "SchedulingError", base.ptr());
  py::register_exception<MemoryError>(m, "MemoryError", base.ptr());
  py::register_exception<MissingData>(m, "MissingData", base.ptr());
  // ConfigErrors carries every message; surface them joined.
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigErrors& e) {
      std::string msg;
      for (const auto& s : e.errors()) msg += (msg.empty() ? "" : "\n") + s;
      py::object cls = py::module_::import("faastube._faastube").attr("ConfigError");
      PyErr_SetString(cls.ptr(), msg.c_str());
    }
  });

  m.attr("MB") = kMB;
  m.attr("GB") = kGB;

  m.def("topology_names", &preset_topology_names);
  m.def("topology_json", [](const std::string& name) { return to_json(load_topology(name)).dump(); },
        py::arg("name"));
  m.def("validate_topology", [](const std::string& text) {
    return validate(topology_from_json(json::parse(text)));
  });
  m.def("pair_bandwidth",
        [](const std::string& name, int u, int v) { return pair_bandwidth(load_topology(name), u, v); },
        py::arg("topology"), py::arg("u"), py::arg("v"));
  m.def("select_paths", &paths_between, py::arg("topology"), py::arg("src"), py::arg("dst"),
        "Parallel NVLink paths on an idle fabric as (gpus, gbps) pairs.");

  m.def("workflow_names", &preset_workflow_names);
  m.def("workflow_json", [](const std::string& name) { return to_json(preset_workflow(name)).dump(); },
        py::arg("name"));

  m.def("pipeline_latency", &pipeline_latency, py::arg("size_bytes"), py::arg("hop_gbps"),
        py::arg("chunk_bytes"));
  m.def("water_fill", &water_fill, py::arg("capacity"), py::arg("paths"), py::arg("caps"));
  m.def("percentile", &percentile, py::arg("samples"), py::arg("p"));

  m.def("min_rate", &min_rate, py::arg("bytes"), py::arg("slo_ms"), py::arg("infer_ms"));
  m.def("pinned_cost", &pinned_cost, py::arg("bytes"), py::arg("warm_bytes"),
        py::arg("ms_per_mb") = 0.7);
  m.def("distribute_chunks", &distribute_chunks, py::arg("rates"), py::arg("chunks"));

  m.def("strategy_names", [] {
    auto names = baseline_names();
    for (const auto& a : ablation_names())
      if (std::find(names.begin(), names.end(), a) == names.end()) names.push_back(a);
    return names;
  });
  m.def("gen_workload",
        [](const std::string& pattern, double rate, double duration, std::uint64_t seed) {
          return gen_workload(arrival_pattern_from_string(pattern), rate, duration, seed);
        },
        py::arg("pattern"), py::arg("rate_rps"), py::arg("duration_ms"), py::arg("seed"));
  m.def("run_experiment",
        [](const std::string& config_text, const std::string& base_dir) {
          const auto cfg = config_from_json(json::parse(config_text), base_dir);
          py::gil_scoped_release unlocked;
          return report_text(run_experiment(cfg));
        },
        py::arg("config"), py::arg("base_dir") = "");
  m.def("max_throughput",
        [](const std::string& config_text, double slo_ms) {
          const auto cfg = config_from_json(json::parse(config_text));
          py::gil_scoped_release unlocked;
          const auto r = max_throughput(cfg, slo_ms);
          return std::make_pair(r.rps, r.diagnostic);
        },
        py::arg("config"), py::arg("slo_ms"));
}
