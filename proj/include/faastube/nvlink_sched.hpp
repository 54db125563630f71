// SPDX-FileCopyrightText: Copyright (c) 2026 The FaaSTube-Sim Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "faastube/topology.hpp"

namespace faastube {

using GpuPath = std::vector<GpuId>;

struct NvPath {
  GpuPath gpus;
  double b_min_gbps = 0.0;  ///< rate held on the path
  OwnerId held_by = 0;
  std::uint64_t hold_id = 0;
};

struct PathQuery {
  OwnerId func = 0;
  GpuId src = 0;
  GpuId dst = 0;
};

/// How a foreign hold was changed to make room for a query.
struct HoldChange {
  OwnerId owner = 0;
  std::uint64_t old_hold = 0;
  std::uint64_t new_hold = 0;  ///< differs from old_hold when rerouted
  GpuPath path;
  double rate_gbps = 0.0;
};

struct SelectOptions {
  int max_hops = 4;
  bool phase2 = true;
  int max_examined = 1000;
};

/// Everything select_paths looked at, for assertions and debugging.
struct SelectTrace {
  std::vector<GpuPath> candidates;
  std::vector<NvPath> chosen;
  std::vector<HoldChange> changes;
  nlohmann::json before;
  nlohmann::json after;
  int examined = 0;

  std::string str() const;
};

/// All loop-free paths of at most `max_hops` edges over NVLink edges with
/// capacity, in hop-count then lexicographic order.
std::vector<GpuPath> enumerate_paths(const BandwidthMatrix& m, GpuId src, GpuId dst,
                                     int max_hops = 4);

/// Minimum current residual along the path.
double path_b_min(const BandwidthMatrix& m, const GpuPath& p);
/// Minimum physical capacity along the path.
double path_capacity(const BandwidthMatrix& m, const GpuPath& p);
/// Best single-path bandwidth of an idle fabric, capped by the GPU budgets.
double best_single_path(const BandwidthMatrix& m, GpuId src, GpuId dst, int max_hops = 4);

/// Contention-aware parallel path selection. Phase 1 takes idle paths
/// shortest first; phase 2 adopts contended paths only when no holder ends
/// below its best single-path bandwidth. Holds are recorded in `m` under
/// `q.func`. Empty when no NVLink path exists.
std::vector<NvPath> select_paths(BandwidthMatrix& m, const PathQuery& q,
                                 SelectTrace* trace = nullptr, const SelectOptions& opts = {});

/// Direct-edge-only selection used by the single-path baseline.
std::vector<NvPath> select_direct(BandwidthMatrix& m, const PathQuery& q);

struct ClaimResult {
  std::vector<NvPath> reservations;
  std::vector<OwnerId> evicted;
  std::vector<std::pair<OwnerId, std::vector<NvPath>>> replanned;
};

/// Reserves the direct edges between the given GPU pairs for `owner`,
/// evicting foreign holders and re-planning them with select_paths.
ClaimResult claim_direct_for_workflow(BandwidthMatrix& m, OwnerId owner,
                                      const std::vector<std::pair<GpuId, GpuId>>& gpu_pairs);

/// Chunk counts per path proportional to `rates`, largest-remainder rounding
/// with ties to the lower index.
std::vector<int> distribute_chunks(const std::vector<double>& rates, int chunks);

/// Byte split proportional to `rates`, whole chunks except the last one.
std::vector<double> distribute_bytes(const std::vector<double>& rates, double bytes,
                                     double chunk_bytes);

void release_paths(BandwidthMatrix& m, OwnerId func);

}  // namespace faastube
