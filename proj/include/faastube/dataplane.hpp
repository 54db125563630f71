// SPDX-FileCopyrightText: Copyright (c) 2026 The FaaSTube-Sim Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "faastube/fluid.hpp"
#include "faastube/nvlink_sched.hpp"
#include "faastube/pcie_sched.hpp"
#include "faastube/topology.hpp"
#include "faastube/workflow.hpp"

namespace faastube {

enum class TransferMethod { kIntraGpu, kInterGpu, kHostGpu, kInterNode };

std::string_view to_string(TransferMethod m);

/// Exactly one method for every (producer, requester) pair.
TransferMethod dispatch(const Location& from, const Location& to);

struct DataIndexEntry {
  DataId id = 0;
  double bytes = 0.0;
  Location loc;
  double created_ms = 0.0;
  std::string producer;
  bool response = false;
};

struct IndexConfig {
  double sync_period_ms = 10.0;
  double local_lookup_ms = 0.005;
  double global_lookup_ms = 0.2;
};

struct Resolution {
  DataIndexEntry entry;
  double cost_ms = 0.0;
  bool local_hit = false;
};

/// Per-node local tables plus a global table that catches up at every sync
/// tick.
class DataIndex {
 public:
  explicit DataIndex(int nodes = 1, IndexConfig cfg = {});

  DataId unique_id() { return next_id_++; }
  void store(DataId id, const Location& loc, double bytes, double now_ms, std::string producer,
             bool response = false);
  /// Local table of `node` first; otherwise the global table, waiting for the
  /// next sync tick if the entry is not published yet. `force_global` skips
  /// the local table.
  Resolution resolve(DataId id, NodeId node, double now_ms, bool force_global = false) const;
  void relocate(DataId id, const Location& loc);
  void erase(DataId id);
  bool contains(DataId id) const { return entries_.count(id) > 0; }
  std::size_t size() const { return entries_.size(); }
  /// Sync tick at or after `t`.
  double published_at(double t) const;
  const IndexConfig& config() const { return cfg_; }

 private:
  IndexConfig cfg_;
  int nodes_;
  DataId next_id_ = 1;
  std::map<DataId, DataIndexEntry> entries_;
};

/// Fluid resources for every directed link of a topology.
class ResourceMap {
 public:
  ResourceMap() = default;
  ResourceMap(const Topology& t, FluidSim& sim);

  int root_up(int root) const { return root_up_.at(root); }      ///< GPU to host
  int root_down(int root) const { return root_down_.at(root); }  ///< host to GPU
  int net(NodeId a, NodeId b) const;
  /// Resources of one GPU hop: the NVLink direction or the two switch ports.
  std::vector<int> hop(GpuId u, GpuId v) const;
  std::vector<int> path(const GpuPath& p) const;
  double capacity(int r) const { return caps_.at(r); }

 private:
  int add(FluidSim& sim, std::string name, double gbps);

  std::vector<double> caps_;
  int gpus_ = 0;
  int nodes_ = 0;
  std::vector<int> root_up_, root_down_, nv_, port_out_, port_in_, net_;
};

struct FlowLeg {
  std::vector<int> resources;
  double bytes = 0.0;
  double rate_cap = kInf;
  double tail_ms = 0.0;
  bool pcie = false;            ///< crosses a PCIe root
  double managed_rate = -1.0;   ///< NVLink hold rate for multipath legs
  std::uint64_t hold_id = 0;
};

struct TransferStage {
  double setup_ms = 0.0;
  std::vector<FlowLeg> legs;
};

struct TransferPlan {
  TransferMethod method = TransferMethod::kIntraGpu;
  double bytes = 0.0;
  std::vector<TransferStage> stages;
  NodeId pcie_node = -1;     ///< node whose PCIe scheduler owns the PCIe legs
  OwnerId nv_owner = 0;      ///< matrix owner to release when done
  std::vector<HoldChange> changes;
};

enum class PinnedMode { kNone, kTemporary, kRing };

struct PlannerOptions {
  bool parallel_pcie = false;
  bool gpu_direct = false;
  bool multipath = false;
  bool pipelined_internode = false;
  bool infinite_bandwidth = false;
  PinnedMode pinned = PinnedMode::kNone;
  double chunk_bytes = 2.0 * kMB;
  double intra_gpu_ms = 0.05;
  double pinned_ms_per_mb = 0.7;
};

/// Turns (producer, requester, size) into staged flow legs.
class TransferPlanner {
 public:
  TransferPlanner(const Topology& t, const ResourceMap& res, PlannerOptions opts,
                  std::vector<PinnedRing>* rings = nullptr);

  /// `matrix` must be given for multipath planning; holds are taken under
  /// `owner` and recorded in the plan.
  TransferPlan plan(const Location& from, const Location& to, double bytes,
                    BandwidthMatrix* matrix = nullptr, OwnerId owner = 0);

  /// Sum of stage setups plus each stage's slowest leg, assuming every leg
  /// runs alone at its bottleneck rate.
  double uncontended_ms(const TransferPlan& p) const;
  const PlannerOptions& options() const { return opts_; }

 private:
  std::vector<FlowLeg> pcie_legs(GpuId g, double bytes, bool to_gpu, const BandwidthMatrix* m) const;
  FlowLeg make_leg(std::vector<int> resources, const std::vector<double>& hop_gbps,
                   double bytes, bool pcie) const;
  double pinned_setup(NodeId node, double bytes);

  const Topology* topo_;
  const ResourceMap* res_;
  PlannerOptions opts_;
  std::vector<PinnedRing>* rings_;
  BandwidthMatrix idle_;
};

}  // namespace faastube
