// SPDX-FileCopyrightText: Copyright (c) 2026 The FaaSTube-Sim Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "faastube/common.hpp"

namespace faastube {

enum class LinkKind { kPcie, kNvLink, kNvSwitchPort, kNetwork };

enum class EndpointKind { kGpu, kHost, kPcieRoot, kNvSwitch };

std::string_view to_string(LinkKind kind);
LinkKind link_kind_from_string(std::string_view s);

/// A link endpoint: "gpu3", "host0", "root1" or "nvswitch0".
struct Endpoint {
  EndpointKind kind = EndpointKind::kGpu;
  int index = 0;

  static Endpoint gpu(int i) { return {EndpointKind::kGpu, i}; }
  static Endpoint host(int i) { return {EndpointKind::kHost, i}; }
  static Endpoint root(int i) { return {EndpointKind::kPcieRoot, i}; }
  static Endpoint nvswitch(int i) { return {EndpointKind::kNvSwitch, i}; }

  std::string str() const;
  static Endpoint parse(std::string_view s);

  bool operator==(const Endpoint&) const = default;
};

struct Link {
  LinkKind kind = LinkKind::kNvLink;
  Endpoint a;
  Endpoint b;
  double bandwidth_gbps = 0.0;  ///< per lane, per direction
  int multiplicity = 1;         ///< lane count

  double capacity_gbps() const { return bandwidth_gbps * multiplicity; }
};

struct NodeDesc {
  NodeId id = 0;
  std::vector<GpuId> gpus;
};

/// GPUs sharing one PCIe root link (the PCIe link whose endpoint is `root`).
struct PcieGroup {
  int root = 0;
  std::vector<GpuId> gpus;
};

struct TopologyParams {
  double pcie_pinned_gbps = 12.0;
  double pageable_gbps = 3.0;
  double pcie_p2p_gbps = 7.9;  ///< GPU pair without NVLink, through the host complex
  double network_gbps = 10.0;
  double gpu_memory_bytes = 32e9;
};

/// Immutable description of one server or a cluster of servers.
///
/// Build through `build_preset`, `topology_from_json` or `make_cluster`; all of
/// them call `finalize()`, which derives the lookup tables and throws
/// TopologyError if `validate()` reports anything.
class Topology {
 public:
  std::string name;
  int gpu_count = 0;
  std::vector<NodeDesc> nodes;
  std::vector<Link> links;
  std::vector<PcieGroup> pcie_groups;
  TopologyParams params;

  void finalize();

  bool has_gpu(GpuId g) const { return g >= 0 && g < gpu_count; }
  NodeId node_of(GpuId g) const;
  int root_of(GpuId g) const;
  int root_count() const { return static_cast<int>(pcie_groups.size()); }
  const PcieGroup& group(int root) const;
  NodeId root_node(int root) const;
  double root_bandwidth(int root) const;
  std::vector<int> roots_of_node(NodeId n) const;

  /// Direct GPU-to-GPU NVLink capacity (lanes x lane rate), or the NVSwitch
  /// pair rate; 0 when the GPUs share no NVLink fabric.
  double nvlink_capacity(GpuId u, GpuId v) const;
  bool has_nvlink(GpuId u, GpuId v) const { return nvlink_capacity(u, v) > 0.0; }
  int nvlink_lanes(GpuId u, GpuId v) const;
  int nvlink_degree(GpuId g) const;  ///< total lanes attached to g
  std::vector<GpuId> nvlink_neighbors(GpuId g) const;
  bool on_nvswitch(GpuId g) const { return switch_port_gbps_.at(g) > 0.0; }
  double switch_port_gbps(GpuId g) const { return switch_port_gbps_.at(g); }
  /// Largest single-pair NVLink capacity available to g.
  double max_pair_capacity(GpuId g) const;
  /// Sum of NVLink capacity attached to g.
  double nvlink_aggregate(GpuId g) const;
  double network_bandwidth(NodeId a, NodeId b) const;

 private:
  std::vector<NodeId> node_of_;
  std::vector<int> root_of_;
  std::vector<NodeId> root_node_;
  std::vector<double> root_gbps_;
  std::vector<double> nv_capacity_;  // gpu_count^2
  std::vector<int> nv_lanes_;        // gpu_count^2
  std::vector<double> switch_port_gbps_;
};

/// Known preset names: dgx_v100, dgx_a100, quad_a10.
Topology build_preset(std::string_view name);
std::vector<std::string> preset_topology_names();

/// `name` may be a preset name or "custom:<path>" / a path to a JSON file.
Topology load_topology(std::string_view name_or_path);

Topology topology_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Topology& t);

/// `nodes` copies of `server` joined by an all-to-all network.
Topology make_cluster(const Topology& server, int nodes);

/// Every invariant violation, as human-readable strings; empty when valid.
std::vector<std::string> validate(const Topology& t);

/// Point-to-point bandwidth between two GPUs: NVLink when directly connected,
/// otherwise the PCIe fallback (or the network rate across nodes).
double pair_bandwidth(const Topology& t, GpuId u, GpuId v);

/// How per-GPU NVLink egress/ingress budgets are derived.
enum class BudgetMode {
  kMaxPair,       ///< largest single-pair capacity of the GPU (default)
  kLaneAggregate  ///< sum of all attached lanes
};

struct HeldPath {
  std::uint64_t id = 0;
  OwnerId owner = 0;
  std::vector<GpuId> gpus;
  double rate_gbps = 0.0;
};

/// Residual directed GPU-pair bandwidth plus per-GPU egress and ingress
/// budgets. Residuals are always recomputed from capacity minus the held
/// paths, so releasing every hold restores the fresh snapshot bit for bit.
class BandwidthMatrix {
 public:
  BandwidthMatrix() = default;
  explicit BandwidthMatrix(const Topology& t, BudgetMode mode = BudgetMode::kMaxPair);

  int size() const { return n_; }
  double capacity(GpuId u, GpuId v) const { return capacity_[at(u, v)]; }
  double residual(GpuId u, GpuId v) const { return residual_[at(u, v)]; }
  bool idle(GpuId u, GpuId v) const;  ///< edge exists and nobody holds it
  double egress_capacity(GpuId g) const { return egress_cap_.at(g); }
  double ingress_capacity(GpuId g) const { return ingress_cap_.at(g); }
  double egress_budget(GpuId g) const { return egress_.at(g); }
  double ingress_budget(GpuId g) const { return ingress_.at(g); }
  std::vector<OwnerId> owners(GpuId u, GpuId v) const;

  /// Reserves `rate` along `path`; throws SchedulingError if any edge or
  /// budget would go negative.
  std::uint64_t hold(OwnerId owner, std::vector<GpuId> path, double rate);
  /// Drops every hold of `owner`; throws SchedulingError when it holds none.
  void release(OwnerId owner);
  void release_hold(std::uint64_t hold_id);
  void set_rate(std::uint64_t hold_id, double rate);
  bool holds_any(OwnerId owner) const;
  const std::vector<HeldPath>& holds() const { return holds_; }
  std::vector<HeldPath> holds_of(OwnerId owner) const;
  double aggregate(OwnerId owner) const;

  /// Residuals, budgets and holds all equal.
  bool operator==(const BandwidthMatrix& o) const;
  nlohmann::json to_json() const;

 private:
  std::size_t at(GpuId u, GpuId v) const;
  void recompute();

  int n_ = 0;
  std::vector<double> capacity_;
  std::vector<double> residual_;
  std::vector<double> egress_cap_, ingress_cap_, egress_, ingress_;
  std::vector<HeldPath> holds_;
  std::uint64_t next_hold_ = 1;
};

inline BandwidthMatrix snapshot_matrix(const Topology& t,
                                       BudgetMode mode = BudgetMode::kMaxPair) {
  return BandwidthMatrix(t, mode);
}

}  // namespace faastube
