// SPDX-FileCopyrightText: Copyright (c) 2026 The FaaSTube-Sim Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "faastube/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace faastube {

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::kQueuing: return "queuing";
    case Phase::kHostToGfunc: return "host_to_gfunc";
    case Phase::kGfuncToGfunc: return "gfunc_to_gfunc";
    case Phase::kCompute: return "compute";
    case Phase::kInternode: return "internode";
  }
  return "?";
}

double percentile(std::vector<double> samples, double p) {
  if (samples.empty()) return 0.0;
  if (!(p > 0.0 && p <= 100.0)) throw Error("percentile must be in (0, 100]");
  std::sort(samples.begin(), samples.end());
  const auto n = static_cast<double>(samples.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, samples.size());
  return samples[rank - 1];
}

double RequestRecord::latency_ms() const {
  double sum = 0.0;
  for (double v : phase_ms) sum += v;
  return sum;
}

std::string fmt_num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

nlohmann::json to_json(const Summary& s) {
  // Round through the fixed formatter so the JSON text is stable.
  auto r = [](double v) { return std::stod(fmt_num(v)); };
  nlohmann::json phases;
  for (int i = 0; i < kPhaseCount; ++i)
    phases[std::string(to_string(static_cast<Phase>(i)))] = r(s.phase_p99_ms[i]);
  return {{"requests", s.requests},
          {"completed", s.completed},
          {"p50_ms", r(s.p50_ms)},
          {"p99_ms", r(s.p99_ms)},
          {"mean_ms", r(s.mean_ms)},
          {"throughput_rps", r(s.throughput_rps)},
          {"slo_violation_rate", r(s.slo_violation_rate)},
          {"peak_pool_bytes", r(s.peak_pool_bytes)},
          {"migrated_bytes", r(s.migrated_bytes)},
          {"phase_p99_ms", phases}};
}

void Metrics::begin(std::uint64_t id, std::string workflow, double arrival_ms, double slo_ms) {
  RequestRecord r;
  r.id = id;
  r.workflow = std::move(workflow);
  r.arrival_ms = arrival_ms;
  r.slo_ms = slo_ms;
  if (!records_.emplace(id, std::move(r)).second)
    throw Error("request " + std::to_string(id) + " registered twice");
}

void Metrics::record(std::uint64_t id, Phase phase, double duration_ms) {
  auto it = records_.find(id);
  if (it == records_.end()) throw MissingData("unknown request " + std::to_string(id));
  it->second.phase_ms[static_cast<int>(phase)] += duration_ms;
}

void Metrics::finish(std::uint64_t id, double finish_ms) {
  auto it = records_.find(id);
  if (it == records_.end()) throw MissingData("unknown request " + std::to_string(id));
  it->second.finish_ms = finish_ms;
}

const RequestRecord& Metrics::request(std::uint64_t id) const {
  auto it = records_.find(id);
  if (it == records_.end()) throw MissingData("unknown request " + std::to_string(id));
  return it->second;
}

std::vector<double> Metrics::latencies(std::string_view workflow) const {
  std::vector<double> out;
  for (const auto& [id, r] : records_)
    if (r.finished() && (workflow.empty() || r.workflow == workflow)) out.push_back(r.latency_ms());
  return out;
}

std::vector<double> Metrics::phase_samples(Phase p, std::string_view workflow) const {
  std::vector<double> out;
  for (const auto& [id, r] : records_)
    if (r.finished() && (workflow.empty() || r.workflow == workflow))
      out.push_back(r.phase_ms[static_cast<int>(p)]);
  return out;
}

Summary Metrics::summarize(double duration_ms, std::string_view workflow) const {
  Summary s;
  std::size_t violations = 0;
  for (const auto& [id, r] : records_) {
    if (!workflow.empty() && r.workflow != workflow) continue;
    ++s.requests;
    if (r.finished()) ++s.completed;
    if (!r.slo_met()) ++violations;
  }
  const auto lat = latencies(workflow);
  s.p50_ms = percentile(lat, 50);
  s.p99_ms = percentile(lat, 99);
  for (double v : lat) s.mean_ms += v;
  if (!lat.empty()) s.mean_ms /= static_cast<double>(lat.size());
  s.throughput_rps = duration_ms > 0.0 ? s.completed / (duration_ms / 1000.0) : 0.0;
  s.slo_violation_rate = s.requests ? static_cast<double>(violations) / s.requests : 0.0;
  s.peak_pool_bytes = peak_pool_bytes;
  s.migrated_bytes = migrated_bytes;
  for (int i = 0; i < kPhaseCount; ++i)
    s.phase_p99_ms[i] = percentile(phase_samples(static_cast<Phase>(i), workflow), 99);
  return s;
}

void Metrics::write_csv(std::ostream& os) const {
  os << "request_id,workflow,arrival_ms,finish_ms,latency_ms";
  for (int i = 0; i < kPhaseCount; ++i) os << ',' << to_string(static_cast<Phase>(i)) << "_ms";
  os << ",slo_ms,slo_met\n";
  for (const auto& [id, r] : records_) {
    os << id << ',' << r.workflow << ',' << fmt_num(r.arrival_ms) << ',' << fmt_num(r.finish_ms)
       << ',' << fmt_num(r.finished() ? r.latency_ms() : -1.0);
    for (double v : r.phase_ms) os << ',' << fmt_num(v);
    os << ',' << fmt_num(r.slo_ms) << ',' << (r.slo_met() ? 1 : 0) << '\n';
  }
}

}  // namespace faastube
