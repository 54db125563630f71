// SPDX-FileCopyrightText: Copyright (c) 2026 The FaaSTube-Sim Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "faastube/common.hpp"
#include "faastube/topology.hpp"

namespace faastube {

enum class FuncKind { kCFunc, kGFunc };
enum class Pattern { kSequence, kCondition, kFanIn, kFanOut };

std::string_view to_string(FuncKind k);
std::string_view to_string(Pattern p);
Pattern pattern_from_string(std::string_view s);

struct FunctionSpec {
  std::string id;
  FuncKind kind = FuncKind::kGFunc;
  double compute_ms = 0.0;
  double compute_jitter = 0.0;  ///< uniform +-fraction of compute_ms per request
  double slo_ms = 0.0;          ///< stage SLO; 0 means derive by calibration
  double infer_ms = -1.0;       ///< rate-control inference latency; <0 means compute_ms

  double infer_latency() const { return infer_ms < 0.0 ? compute_ms : infer_ms; }
};

struct EdgeSpec {
  std::string from;
  std::string to;
  double bytes = 0.0;        ///< per edge, or per detected object when per_object
  bool per_object = false;
  double probability = 1.0;  ///< condition edge when < 1
};

/// A workflow DAG. Entry gFuncs receive `input_bytes` from the host; sink
/// gFuncs return `response_bytes` to the host.
struct Workflow {
  std::string name;
  Pattern pattern = Pattern::kSequence;
  std::vector<FunctionSpec> functions;
  std::vector<EdgeSpec> edges;
  double input_bytes = 0.0;
  double response_bytes = 1.0 * kMB;
  int objects_min = 1;  ///< per-request object count, uniform in [min, max]
  int objects_max = 1;

  const FunctionSpec& function(std::string_view id) const;
  int index_of(std::string_view id) const;  ///< -1 when absent
  std::vector<int> predecessors(int f) const;  ///< edge indices into f
  std::vector<int> successors(int f) const;    ///< edge indices out of f
  std::vector<int> topo_order() const;         ///< throws WorkflowError on a cycle
  double expected_bytes(const EdgeSpec& e) const;
  int gfunc_count() const;
};

std::vector<std::string> preset_workflow_names();
/// `overrides` follows the workflow-file schema; only listed fields change.
Workflow preset_workflow(std::string_view name, const nlohmann::json& overrides = nullptr);
void apply_overrides(Workflow& w, const nlohmann::json& overrides);

std::vector<std::string> validate_dag(const Workflow& w);

Workflow workflow_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Workflow& w);

/// Where a function runs. gpu < 0 means the node's host CPU.
struct Location {
  NodeId node = 0;
  GpuId gpu = -1;

  bool on_host() const { return gpu < 0; }
  bool operator==(const Location&) const = default;
};

struct Placement {
  std::map<std::string, Location> mapping;

  const Location& at(std::string_view id) const;
};

struct PlacementOptions {
  int gpu_slots = 1;  ///< gFuncs allowed per GPU, counting other tenants
  NodeId node = -1;   ///< restrict to one node; -1 picks automatically
};

/// Greedy heaviest-edge-first placement. `occupancy[g]` is the number of
/// functions already resident on GPU g.
Placement place(const Workflow& w, const Topology& t, const std::vector<int>& occupancy,
                const PlacementOptions& opts = {});

/// Function id -> node assignment that keeps heavy edges inside one node.
std::map<std::string, NodeId> partition_across_nodes(const Workflow& w, const Topology& cluster,
                                                     const std::vector<int>& occupancy,
                                                     int gpu_slots = 1);
int cross_node_edges(const Workflow& w, const std::map<std::string, NodeId>& assignment);

}  // namespace faastube
