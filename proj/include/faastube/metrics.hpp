// SPDX-FileCopyrightText: Copyright (c) 2026 The FaaSTube-Sim Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "faastube/common.hpp"

namespace faastube {

enum class Phase { kQueuing, kHostToGfunc, kGfuncToGfunc, kCompute, kInternode };
inline constexpr int kPhaseCount = 5;

std::string_view to_string(Phase p);

/// Nearest-rank percentile: the ceil(p/100 * n)-th smallest sample.
double percentile(std::vector<double> samples, double p);

struct RequestRecord {
  std::uint64_t id = 0;
  std::string workflow;
  double arrival_ms = 0.0;
  double finish_ms = -1.0;
  double slo_ms = 0.0;
  std::array<double, kPhaseCount> phase_ms{};

  bool finished() const { return finish_ms >= 0.0; }
  /// Sum of the phases, added in canonical phase order.
  double latency_ms() const;
  bool slo_met() const { return finished() && latency_ms() <= slo_ms; }
};

struct Summary {
  std::size_t requests = 0;
  std::size_t completed = 0;
  double p50_ms = 0.0;
  double p99_ms = 0.0;
  double mean_ms = 0.0;
  double throughput_rps = 0.0;
  double slo_violation_rate = 0.0;
  double peak_pool_bytes = 0.0;
  double migrated_bytes = 0.0;
  std::array<double, kPhaseCount> phase_p99_ms{};
};

nlohmann::json to_json(const Summary& s);

/// Per-request latency bookkeeping.
class Metrics {
 public:
  void begin(std::uint64_t id, std::string workflow, double arrival_ms, double slo_ms);
  /// Adds `duration_ms` to a phase; throws MissingData for unknown requests.
  void record(std::uint64_t id, Phase phase, double duration_ms);
  void finish(std::uint64_t id, double finish_ms);

  const RequestRecord& request(std::uint64_t id) const;
  const std::map<std::uint64_t, RequestRecord>& requests() const { return records_; }
  bool empty() const { return records_.empty(); }

  /// Completed requests only; `workflow` filters when non-empty.
  std::vector<double> latencies(std::string_view workflow = {}) const;
  std::vector<double> phase_samples(Phase p, std::string_view workflow = {}) const;

  Summary summarize(double duration_ms, std::string_view workflow = {}) const;

  double peak_pool_bytes = 0.0;
  double migrated_bytes = 0.0;

  void write_csv(std::ostream& os) const;

 private:
  std::map<std::uint64_t, RequestRecord> records_;
};

/// Fixed-precision formatting shared by every text export so that identical
/// runs give identical bytes.
std::string fmt_num(double v);

}  // namespace faastube
