// SPDX-FileCopyrightText: Copyright (c) 2026 The FaaSTube-Sim Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include <json.hpp>

#include "faastube/common.hpp"
#include "faastube/topology.hpp"

namespace faastube {

struct PcieSchedConfig {
  double chunk_bytes = 2.0 * kMB;
  int batch_chunks = 5;
  double pinned_cost_ms_per_mb = 0.7;
  double ring_capacity_bytes = 0.0;  ///< 0 selects 2 x batch bytes x root links
  double pageable_rate_gbps = 3.0;

  double batch_bytes() const { return chunk_bytes * batch_chunks; }
};

PcieSchedConfig pcie_config_from_json(const nlohmann::json& j);

/// Rate_least in GB/s: bytes / (slo - infer). Throws InfeasibleRate when the
/// window is empty and there is data to move.
double min_rate(double bytes, double slo_ms, double infer_ms);

struct RateDemand {
  OwnerId id = 0;
  double bytes = 0.0;
  double slo_ms = 0.0;
  double infer_ms = 0.0;
  double rate_least = 0.0;  ///< GB/s
  double elapsed_ms = 0.0;  ///< since the demand was registered
  double remaining_bytes = 0.0;

  /// slo - elapsed - remaining / rate_least
  double slack_ms() const;
};

RateDemand make_demand(OwnerId id, double bytes, double slo_ms, double infer_ms);

struct RateAssignment {
  OwnerId id = 0;
  double rate_gbps = 0.0;
  bool slo_at_risk = false;
};

/// Server-wide PCIe capacity seen by the scheduler: pinned rate x root links.
double bw_all(const Topology& t, NodeId node);

/// Every demand gets Rate_least; the idle remainder goes to the demand with
/// the smallest slack (ties by id). Oversubscription scales all rates by
/// bw_all / sum and flags every demand. Output follows input order.
std::vector<RateAssignment> partition(double bw_all_gbps, const std::vector<RateDemand>& demands);
double rate_idle(double bw_all_gbps, const std::vector<RateDemand>& demands);

struct ChunkBatch {
  int index = 0;
  int chunks = 0;
  double first_byte = 0.0;
  double bytes = 0.0;
};

/// Splits a flow into batches of `batch_chunks` chunks; the last chunk and
/// batch may be short.
std::vector<ChunkBatch> trigger_batches(double bytes, const PcieSchedConfig& cfg);

/// Cold pinning cost for `bytes` when `warm_bytes` are already pinned.
double pinned_cost(double bytes, double warm_bytes, double ms_per_mb = 0.7);

/// Transfer time through pageable memory: the link rate is capped.
double pageable_transfer_ms(double bytes, double link_gbps, double pageable_gbps = 3.0);

/// Circular pinned staging buffer shared by all functions of a server.
/// Transfers stream through it in batches, so a transfer never needs more
/// than `capacity` pinned bytes and cost is paid only while the ring grows.
class PinnedRing {
 public:
  explicit PinnedRing(double capacity_bytes, double ms_per_mb = 0.7)
      : capacity_(capacity_bytes), ms_per_mb_(ms_per_mb) {}

  /// Pins the whole ring up front.
  void prewarm() { warm_ = capacity_; allocated_ += capacity_; }
  /// Cost in ms of staging `bytes` through the ring.
  double stage(double bytes);

  double capacity() const { return capacity_; }
  double warm_bytes() const { return warm_; }
  double allocated_bytes() const { return allocated_; }

 private:
  double capacity_;
  double ms_per_mb_;
  double warm_ = 0.0;
  double allocated_ = 0.0;
};

double default_ring_capacity(const PcieSchedConfig& cfg, int root_links);

}  // namespace faastube
