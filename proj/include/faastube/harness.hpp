// SPDX-FileCopyrightText: Copyright (c) 2026 The FaaSTube-Sim Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "faastube/runtime.hpp"

namespace faastube {

/// Raised with every problem found in a config, not just the first.
class ConfigErrors : public ConfigError {
 public:
  explicit ConfigErrors(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

// --- strategies ---------------------------------------------------------------

/// Baselines: infless_plus, deepplan_plus, faastube_star, faastube.
/// Ablation steps: ui, ui_ps, ui_ps_ns (ui_ps_ns_es is faastube).
StrategyConfig strategy_preset(std::string_view name);
std::vector<std::string> baseline_names();
std::vector<std::string> ablation_names();
/// A preset name, or {"preset": name, ...toggle overrides}.
StrategyConfig strategy_from_json(const nlohmann::json& j);
nlohmann::json to_json(const StrategyConfig& s);

// --- workloads ----------------------------------------------------------------

enum class ArrivalPattern { kSporadic, kPeriodic, kBursty };

ArrivalPattern arrival_pattern_from_string(std::string_view s);
std::string_view to_string(ArrivalPattern p);

struct BurstParams {
  double factor = 10.0;     ///< rate multiplier inside a burst
  double fraction = 0.05;   ///< share of the duration spent bursting
  int episodes = 4;
};

/// Request timestamps in [0, duration). Sporadic is Poisson; periodic uses a
/// fixed interval with +-5% jitter; bursty is Poisson with seeded burst episodes.
std::vector<double> gen_workload(ArrivalPattern p, double rate_rps, double duration_ms,
                                 std::uint64_t seed, const BurstParams& burst = {});

struct TraceRow {
  std::string workflow;
  double timestamp_ms = 0.0;
};

/// CSV with a `workflow,timestamp_ms` header. Rows are sorted by time; a
/// warning is appended when the input was out of order. Throws ConfigErrors
/// listing each bad line.
std::vector<TraceRow> ingest_trace(std::istream& in, std::vector<std::string>* warnings = nullptr);
std::vector<TraceRow> ingest_trace_file(const std::filesystem::path& p,
                                        std::vector<std::string>* warnings = nullptr);

// --- experiments ----------------------------------------------------------------

struct WorkloadSpec {
  Workflow workflow;
  double rate_rps = 10.0;
  double start_ms = 0.0;
  double slo_ms = 0.0;          ///< 0 derives it by calibration
  double slo_factor = 1.5;      ///< workflow SLO = factor x unloaded latency
  double stage_slo_factor = 1.5;
  std::string pattern;          ///< overrides the trace pattern when set
};

struct ExperimentConfig {
  std::string topology = "dgx_v100";
  int nodes = 1;
  std::vector<WorkloadSpec> workloads;
  PlacementOptions placement;
  StrategyConfig strategy = strategy_preset("faastube");
  ArrivalPattern pattern = ArrivalPattern::kPeriodic;
  BurstParams burst;
  std::string trace_file;
  PcieSchedConfig pcie;
  IndexConfig index;
  double duration_ms = 1000.0;
  double drain_ms = 10000.0;
  std::uint64_t seed = 1;
};

/// Sections: topology, workflows, placement, strategy, trace, limits, costs,
/// plus duration_ms and seed. Relative file paths resolve against `base_dir`.
ExperimentConfig config_from_json(const nlohmann::json& j,
                                  const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& p);

struct Report {
  Metrics metrics;
  Summary summary;
  std::map<std::string, Summary> per_workflow;
  std::map<std::string, double> workflow_slo_ms;
  std::vector<std::string> warnings;
  std::string strategy;
  std::string topology;

  std::string csv() const;
  nlohmann::json json() const;
  /// requests.csv and summary.json, each written to a temp file then renamed.
  void write(const std::filesystem::path& out_dir) const;
};

Topology build_topology(const ExperimentConfig& cfg);
std::vector<Arrival> build_arrivals(const ExperimentConfig& cfg,
                                    std::vector<std::string>* warnings = nullptr);
/// Engine setup shared by runs and calibration: placement and SLO calibration.
EngineConfig engine_config(const ExperimentConfig& cfg);
Report run_experiment(const ExperimentConfig& cfg);

struct ThroughputResult {
  double rps = 0.0;
  std::string diagnostic;
};

/// Highest offered rate (applied to every workload) whose P99 stays within
/// `slo_ms` with every request finished inside the drain window.
ThroughputResult max_throughput(const ExperimentConfig& cfg, double slo_ms);

struct CompareRow {
  std::string strategy;
  Summary summary;
  double p99_reduction_pct = 0.0;  ///< against the slowest row
};

/// Configs must differ only in strategy.
std::vector<CompareRow> compare(const std::vector<ExperimentConfig>& configs);
std::string format_compare(const std::vector<CompareRow>& rows);

}  // namespace faastube
