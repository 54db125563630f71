// SPDX-FileCopyrightText: Copyright (c) 2026 The FaaSTube-Sim Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "faastube/pcie_sched.hpp"

#include <algorithm>
#include <cmath>

namespace faastube {

PcieSchedConfig pcie_config_from_json(const nlohmann::json& j) {
  PcieSchedConfig c;
  if (j.is_null()) return c;
  try {
    c.chunk_bytes = j.value("chunk_bytes", c.chunk_bytes);
    c.batch_chunks = j.value("batch_chunks", c.batch_chunks);
    c.pinned_cost_ms_per_mb = j.value("pinned_cost_ms_per_mb", c.pinned_cost_ms_per_mb);
    c.ring_capacity_bytes = j.value("ring_capacity_bytes", c.ring_capacity_bytes);
    c.pageable_rate_gbps = j.value("pageable_rate_gbps", c.pageable_rate_gbps);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad pcie scheduler settings: ") + e.what());
  }
  if (!(c.chunk_bytes > 0.0) || c.batch_chunks < 1)
    throw ConfigError("chunk_bytes and batch_chunks must be positive");
  return c;
}

double min_rate(double bytes, double slo_ms, double infer_ms) {
  if (bytes < 0.0) throw SchedulingError("negative demand size");
  if (bytes == 0.0) return 0.0;
  if (slo_ms <= infer_ms)
    throw InfeasibleRate("slo " + std::to_string(slo_ms) + " ms leaves no transfer window after " +
                         std::to_string(infer_ms) + " ms of inference");
  return bytes / ((slo_ms - infer_ms) * kBytesPerMsPerGbps);
}

double RateDemand::slack_ms() const {
  const double rest = rate_least > 0.0 ? transfer_ms(remaining_bytes, rate_least) : 0.0;
  return slo_ms - elapsed_ms - rest;
}

RateDemand make_demand(OwnerId id, double bytes, double slo_ms, double infer_ms) {
  RateDemand d;
  d.id = id;
  d.bytes = bytes;
  d.slo_ms = slo_ms;
  d.infer_ms = infer_ms;
  d.rate_least = min_rate(bytes, slo_ms, infer_ms);
  d.remaining_bytes = bytes;
  return d;
}

double bw_all(const Topology& t, NodeId node) {
  double sum = 0.0;
  for (int r : t.roots_of_node(node)) sum += t.root_bandwidth(r);
  return sum;
}

double rate_idle(double bw_all_gbps, const std::vector<RateDemand>& demands) {
  double sum = 0.0;
  for (const auto& d : demands) sum += d.rate_least;
  return std::max(0.0, bw_all_gbps - sum);
}

std::vector<RateAssignment> partition(double bw_all_gbps, const std::vector<RateDemand>& demands) {
  std::vector<RateAssignment> out;
  if (demands.empty()) return out;
  double sum = 0.0;
  for (const auto& d : demands) {
    out.push_back({d.id, d.rate_least, false});
    sum += d.rate_least;
  }
  if (sum > bw_all_gbps) {
    const double scale = bw_all_gbps / sum;
    for (auto& a : out) {
      a.rate_gbps *= scale;
      a.slo_at_risk = true;
    }
    return out;
  }
  std::size_t tight = 0;
  for (std::size_t i = 1; i < demands.size(); ++i) {
    const double si = demands[i].slack_ms(), st = demands[tight].slack_ms();
    if (si < st || (si == st && demands[i].id < demands[tight].id)) tight = i;
  }
  out[tight].rate_gbps += bw_all_gbps - sum;
  return out;
}

std::vector<ChunkBatch> trigger_batches(double bytes, const PcieSchedConfig& cfg) {
  std::vector<ChunkBatch> out;
  if (bytes <= 0.0) return out;
  const auto chunks = static_cast<long>(std::ceil(bytes / cfg.chunk_bytes - 1e-9));
  long emitted = 0;
  double offset = 0.0;
  for (int index = 0; emitted < chunks; ++index) {
    const long n = std::min<long>(cfg.batch_chunks, chunks - emitted);
    const double len = std::min(bytes - offset, n * cfg.chunk_bytes);
    out.push_back({index, static_cast<int>(n), offset, len});
    emitted += n;
    offset += len;
  }
  return out;
}

double pinned_cost(double bytes, double warm_bytes, double ms_per_mb) {
  return ms_per_mb * std::max(0.0, bytes - warm_bytes) / kMB;
}

double pageable_transfer_ms(double bytes, double link_gbps, double pageable_gbps) {
  return transfer_ms(bytes, std::min(link_gbps, pageable_gbps));
}

double PinnedRing::stage(double bytes) {
  const double need = std::min(bytes, capacity_);
  const double cost = pinned_cost(need, warm_, ms_per_mb_);
  if (need > warm_) {
    allocated_ += need - warm_;
    warm_ = need;
  }
  return cost;
}

double default_ring_capacity(const PcieSchedConfig& cfg, int root_links) {
  if (cfg.ring_capacity_bytes > 0.0) return cfg.ring_capacity_bytes;
  return 2.0 * cfg.batch_bytes() * root_links;
}

}  // namespace faastube
