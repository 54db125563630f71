// SPDX-FileCopyrightText: Copyright (c) 2026 The FaaSTube-Sim Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "faastube/dataplane.hpp"
#include "faastube/datastore.hpp"
#include "faastube/fluid.hpp"
#include "faastube/metrics.hpp"
#include "faastube/pcie_sched.hpp"
#include "faastube/topology.hpp"
#include "faastube/workflow.hpp"

namespace faastube {

/// Data-plane behaviour of one strategy.
struct StrategyConfig {
  std::string name = "faastube";
  PlannerOptions planner;
  bool pcie_sched = false;     ///< SLO-aware rate partitioning of PCIe legs
  bool unified_index = false;  ///< local table first; otherwise every fetch asks the global table
  PoolMode pool = PoolMode::kNone;
  bool migration = false;
  MigrationPolicy policy = MigrationPolicy::kQueueAware;
  bool prefetch = false;
  double store_capacity_bytes = 1.0 * kGB;  ///< per-GPU object budget before migration
  double pool_floor_bytes = 300.0 * kMB;
};

struct Arrival {
  double time_ms = 0.0;
  int workflow = 0;
};

struct EngineConfig {
  Topology topo;
  std::vector<Workflow> workflows;
  std::vector<Placement> placements;  ///< one per workflow
  StrategyConfig strategy;
  PcieSchedConfig pcie;
  IndexConfig index;
  std::uint64_t seed = 1;
  std::vector<double> workflow_slo_ms;                   ///< per workflow; 0 = unset
  std::vector<std::map<std::string, double>> stage_slo;  ///< per workflow and function
  bool all_edges = false;   ///< calibration: every condition edge taken, max objects
  bool no_jitter = false;
};

/// Per-function fetch + compute time of one unloaded request.
struct Calibration {
  double latency_ms = 0.0;
  std::map<std::string, double> stage_ms;
};

/// Deterministic discrete-event runtime for workflow requests.
class Engine {
 public:
  explicit Engine(EngineConfig cfg);
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  void submit(const std::vector<Arrival>& arrivals);
  /// Processes every event up to `end_ms`; requests still running stay unfinished.
  const Metrics& run_until(double end_ms);
  const Metrics& metrics() const;
  double now() const;
  /// Total pool bytes across GPUs right now.
  double pool_bytes() const;
  /// Smallest pool size seen on each GPU while one of its functions had an
  /// active reservation window; kInf when that never happened.
  std::vector<double> min_pool_bytes() const;
  const FluidSim& fluid() const;
  /// Fetch + compute time per function of a finished request.
  std::map<std::string, double> stage_times(std::uint64_t request) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Runs workflow `w` alone for one request (all edges, max objects, no jitter,
/// no PCIe scheduling).
Calibration calibrate(const EngineConfig& cfg, int workflow);

}  // namespace faastube
