// SPDX-FileCopyrightText: Copyright (c) 2026 The FaaSTube-Sim Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "faastube/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

namespace faastube {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : "; ") + s;
  return out;
}

// Uniform in [0, 1) from raw engine bits, identical on every platform.
double unit(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t x = seed ^ (salt * 0x9e3779b97f4a7c15ULL);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

PinnedMode pinned_from_string(const std::string& s) {
  if (s == "none") return PinnedMode::kNone;
  if (s == "temporary") return PinnedMode::kTemporary;
  if (s == "ring") return PinnedMode::kRing;
  throw ConfigError("unknown pinned mode '" + s + "'");
}

std::string to_string(PinnedMode m) {
  switch (m) {
    case PinnedMode::kNone: return "none";
    case PinnedMode::kTemporary: return "temporary";
    case PinnedMode::kRing: return "ring";
  }
  return "?";
}

void write_atomic(const fs::path& p, const std::string& text) {
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot write " + tmp.string());
    os << text;
  }
  fs::rename(tmp, p);
}

}  // namespace

ConfigErrors::ConfigErrors(std::vector<std::string> errors)
    : ConfigError(join(errors)), errors_(std::move(errors)) {}

// --- strategies ---------------------------------------------------------------

StrategyConfig strategy_preset(std::string_view name) {
  StrategyConfig s;
  s.name = std::string(name);
  auto& p = s.planner;
  p.pinned = PinnedMode::kTemporary;
  s.pool = PoolMode::kNone;
  if (name == "infless_plus") return s;
  p.parallel_pcie = true;
  if (name == "deepplan_plus") return s;
  p.gpu_direct = true;
  p.pipelined_internode = true;
  if (name == "faastube_star") return s;
  s.unified_index = true;
  if (name == "ui") return s;
  s.pcie_sched = true;
  p.pinned = PinnedMode::kRing;
  if (name == "ui_ps") return s;
  p.multipath = true;
  if (name == "ui_ps_ns") return s;
  s.pool = PoolMode::kAutoscale;
  s.migration = true;
  s.policy = MigrationPolicy::kQueueAware;
  s.prefetch = true;
  if (name == "faastube" || name == "ui_ps_ns_es") {
    s.name = "faastube";
    return s;
  }
  throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

std::vector<std::string> baseline_names() {
  return {"infless_plus", "deepplan_plus", "faastube_star", "faastube"};
}

std::vector<std::string> ablation_names() { return {"ui", "ui_ps", "ui_ps_ns", "faastube"}; }

StrategyConfig strategy_from_json(const json& j) {
  if (j.is_string()) return strategy_preset(j.get<std::string>());
  if (!j.is_object()) throw ConfigError("strategy must be a name or an object");
  StrategyConfig s = strategy_preset(j.value("preset", std::string("faastube")));
  if (j.contains("name")) s.name = j.at("name").get<std::string>();
  auto& p = s.planner;
  p.parallel_pcie = j.value("parallel_pcie", p.parallel_pcie);
  p.gpu_direct = j.value("gpu_direct", p.gpu_direct);
  p.multipath = j.value("nvlink_sched", p.multipath);
  p.pipelined_internode = j.value("pipelined_internode", p.pipelined_internode);
  p.infinite_bandwidth = j.value("infinite_bandwidth", p.infinite_bandwidth);
  if (j.contains("pinned")) p.pinned = pinned_from_string(j.at("pinned").get<std::string>());
  s.unified_index = j.value("unified_interface", s.unified_index);
  s.pcie_sched = j.value("pcie_sched", s.pcie_sched);
  if (j.contains("elastic_store")) {
    const bool on = j.at("elastic_store").get<bool>();
    s.pool = on ? PoolMode::kAutoscale : PoolMode::kNone;
    s.migration = on;
    s.prefetch = on;
  }
  if (j.contains("pool")) s.pool = pool_mode_from_string(j.at("pool").get<std::string>());
  if (j.contains("migration")) {
    const auto m = j.at("migration").get<std::string>();
    if (m == "none") {
      s.migration = false;
    } else if (m == "queue_aware" || m == "lru") {
      s.migration = true;
      s.policy = m == "lru" ? MigrationPolicy::kLru : MigrationPolicy::kQueueAware;
    } else {
      throw ConfigError("unknown migration policy '" + m + "'");
    }
  }
  s.prefetch = j.value("prefetch", s.prefetch);
  if (j.contains("store_capacity_mb")) s.store_capacity_bytes = j.at("store_capacity_mb").get<double>() * kMB;
  if (j.contains("pool_floor_mb")) s.pool_floor_bytes = j.at("pool_floor_mb").get<double>() * kMB;
  return s;
}

json to_json(const StrategyConfig& s) {
  const auto& p = s.planner;
  return {{"name", s.name},
          {"parallel_pcie", p.parallel_pcie},
          {"gpu_direct", p.gpu_direct},
          {"nvlink_sched", p.multipath},
          {"pipelined_internode", p.pipelined_internode},
          {"infinite_bandwidth", p.infinite_bandwidth},
          {"pinned", to_string(p.pinned)},
          {"unified_interface", s.unified_index},
          {"pcie_sched", s.pcie_sched},
          {"pool", to_string(s.pool)},
          {"migration", !s.migration ? "none"
                        : s.policy == MigrationPolicy::kLru ? "lru" : "queue_aware"},
          {"prefetch", s.prefetch},
          {"store_capacity_mb", s.store_capacity_bytes / kMB},
          {"pool_floor_mb", s.pool_floor_bytes / kMB}};
}

// --- workloads ----------------------------------------------------------------

ArrivalPattern arrival_pattern_from_string(std::string_view s) {
  if (s == "sporadic") return ArrivalPattern::kSporadic;
  if (s == "periodic") return ArrivalPattern::kPeriodic;
  if (s == "bursty") return ArrivalPattern::kBursty;
  throw ConfigError("unknown arrival pattern '" + std::string(s) + "'");
}

std::string_view to_string(ArrivalPattern p) {
  switch (p) {
    case ArrivalPattern::kSporadic: return "sporadic";
    case ArrivalPattern::kPeriodic: return "periodic";
    case ArrivalPattern::kBursty: return "bursty";
  }
  return "?";
}

std::vector<double> gen_workload(ArrivalPattern p, double rate_rps, double duration_ms,
                                 std::uint64_t seed, const BurstParams& burst) {
  if (!(rate_rps > 0.0)) throw ConfigError("arrival rate must be positive");
  std::vector<double> out;
  if (!(duration_ms > 0.0)) return out;
  std::mt19937_64 g(seed);
  const double per_ms = rate_rps / 1000.0;

  if (p == ArrivalPattern::kPeriodic) {
    const double interval = 1.0 / per_ms;
    for (long k = 0;; ++k) {
      const double t = std::max(0.0, (k + 0.1 * (unit(g) - 0.5)) * interval);
      if (k * interval >= duration_ms) break;
      if (t < duration_ms) out.push_back(t);
    }
    return out;
  }

  // Burst windows: one per equal slot, at a seeded offset inside it.
  std::vector<std::pair<double, double>> windows;
  if (p == ArrivalPattern::kBursty && burst.episodes > 0 && burst.fraction > 0.0) {
    const double slot = duration_ms / burst.episodes;
    const double len = std::min(slot, duration_ms * burst.fraction / burst.episodes);
    for (int e = 0; e < burst.episodes; ++e) {
      const double start = e * slot + unit(g) * (slot - len);
      windows.emplace_back(start, start + len);
    }
  }
  auto in_burst = [&](double t) {
    for (const auto& [a, b] : windows)
      if (t >= a && t < b) return true;
    return false;
  };
  const double peak = windows.empty() ? per_ms : per_ms * burst.factor;
  // Thinning from a Poisson process at the peak rate.
  for (double t = 0.0;;) {
    t += -std::log(1.0 - unit(g)) / peak;
    if (t >= duration_ms) break;
    const double r = in_burst(t) ? peak : per_ms;
    if (unit(g) * peak < r) out.push_back(t);
  }
  return out;
}

std::vector<TraceRow> ingest_trace(std::istream& in, std::vector<std::string>* warnings) {
  std::vector<TraceRow> rows;
  std::vector<std::string> errors;
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (!header) {
      header = true;
      if (line == "workflow,timestamp_ms") continue;
      errors.push_back("line " + std::to_string(lineno) + ": expected header 'workflow,timestamp_ms'");
      continue;
    }
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      errors.push_back("line " + std::to_string(lineno) + ": expected two columns");
      continue;
    }
    TraceRow r;
    r.workflow = line.substr(0, comma);
    const std::string ts = line.substr(comma + 1);
    std::size_t used = 0;
    try {
      r.timestamp_ms = std::stod(ts, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != ts.size() || !std::isfinite(r.timestamp_ms)) {
      errors.push_back("line " + std::to_string(lineno) + ": timestamp '" + ts + "' is not a number");
      continue;
    }
    if (r.timestamp_ms < 0.0) {
      errors.push_back("line " + std::to_string(lineno) + ": negative timestamp");
      continue;
    }
    if (r.workflow.empty()) {
      errors.push_back("line " + std::to_string(lineno) + ": empty workflow name");
      continue;
    }
    rows.push_back(std::move(r));
  }
  if (!header) errors.push_back("trace is empty");
  if (!errors.empty()) throw ConfigErrors(errors);
  const bool sorted = std::is_sorted(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.timestamp_ms < b.timestamp_ms;
  });
  if (!sorted) {
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
      return a.timestamp_ms < b.timestamp_ms;
    });
    if (warnings) warnings->push_back("trace rows were out of order and have been sorted");
  }
  return rows;
}

std::vector<TraceRow> ingest_trace_file(const fs::path& p, std::vector<std::string>* warnings) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open trace file " + p.string());
  return ingest_trace(in, warnings);
}

// --- configuration --------------------------------------------------------------

ExperimentConfig config_from_json(const json& j, const fs::path& base_dir) {
  ExperimentConfig c;
  std::vector<std::string> errors;
  auto section = [&](const char* name, auto&& fn) {
    try {
      fn();
    } catch (const json::exception& e) {
      errors.push_back(std::string(name) + ": " + e.what());
    } catch (const Error& e) {
      errors.push_back(std::string(name) + ": " + e.what());
    }
  };
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_relative() && !base_dir.empty() ? (base_dir / path).string() : p;
  };
  if (!j.is_object()) throw ConfigErrors({"config must be a JSON object"});
  static const std::vector<std::string> known = {"topology", "workflows", "placement", "strategy",
                                                 "trace", "limits", "costs", "duration_ms", "seed"};
  for (const auto& [k, v] : j.items())
    if (std::find(known.begin(), known.end(), k) == known.end())
      errors.push_back("unknown section '" + k + "'");

  section("topology", [&] {
    if (!j.contains("topology")) throw ConfigError("missing");
    const auto& t = j.at("topology");
    if (t.is_string()) {
      c.topology = t.get<std::string>();
    } else {
      c.topology = t.contains("file") ? "custom:" + t.at("file").get<std::string>()
                                      : t.value("preset", std::string("dgx_v100"));
      c.nodes = t.value("nodes", 1);
      if (c.nodes < 1) throw ConfigError("nodes must be >= 1");
    }
    if (c.topology.rfind("custom:", 0) == 0 && c.topology.size() > 7 &&
        fs::path(c.topology.substr(7)).is_relative())
      c.topology = "custom:" + resolve(c.topology.substr(7));
    load_topology(c.topology);
  });
  section("workflows", [&] {
    if (!j.contains("workflows") || !j.at("workflows").is_array() || j.at("workflows").empty())
      throw ConfigError("needs a non-empty list");
    for (const auto& w : j.at("workflows")) {
      WorkloadSpec s;
      if (w.is_string()) {
        s.workflow = preset_workflow(w.get<std::string>());
      } else if (w.contains("file")) {
        std::ifstream in(resolve(w.at("file").get<std::string>()));
        if (!in) throw ConfigError("cannot open workflow file " + w.at("file").get<std::string>());
        s.workflow = workflow_from_json(json::parse(in));
      } else {
        s.workflow = preset_workflow(w.at("preset").get<std::string>(), w.value("overrides", json()));
      }
      if (w.is_object()) {
        s.rate_rps = w.value("rate_rps", s.rate_rps);
        s.start_ms = w.value("start_ms", s.start_ms);
        s.slo_ms = w.value("slo_ms", s.slo_ms);
        s.slo_factor = w.value("slo_factor", s.slo_factor);
        s.stage_slo_factor = w.value("stage_slo_factor", s.stage_slo_factor);
        s.pattern = w.value("pattern", std::string());
        if (!s.pattern.empty()) arrival_pattern_from_string(s.pattern);
        if (w.contains("name")) s.workflow.name = w.at("name").get<std::string>();
      }
      if (!(s.rate_rps > 0.0)) throw ConfigError(s.workflow.name + ": rate_rps must be positive");
      const auto problems = validate_dag(s.workflow);
      if (!problems.empty()) throw ConfigError(s.workflow.name + ": " + join(problems));
      for (const auto& o : c.workloads)
        if (o.workflow.name == s.workflow.name)
          throw ConfigError("workflow name '" + s.workflow.name + "' used twice");
      c.workloads.push_back(std::move(s));
    }
  });
  section("placement", [&] {
    if (!j.contains("placement")) return;
    c.placement.gpu_slots = j.at("placement").value("gpu_slots", c.placement.gpu_slots);
    if (c.placement.gpu_slots < 1) throw ConfigError("gpu_slots must be >= 1");
  });
  section("strategy", [&] {
    if (j.contains("strategy")) c.strategy = strategy_from_json(j.at("strategy"));
  });
  section("trace", [&] {
    if (!j.contains("trace")) return;
    const auto& t = j.at("trace");
    if (t.contains("pattern")) c.pattern = arrival_pattern_from_string(t.at("pattern").get<std::string>());
    if (t.contains("file")) c.trace_file = resolve(t.at("file").get<std::string>());
    c.burst.factor = t.value("burst_factor", c.burst.factor);
    c.burst.fraction = t.value("burst_fraction", c.burst.fraction);
    c.burst.episodes = t.value("burst_episodes", c.burst.episodes);
    if (c.burst.factor < 1.0 || c.burst.fraction < 0.0 || c.burst.fraction > 1.0)
      throw ConfigError("burst_factor must be >= 1 and burst_fraction in [0, 1]");
  });
  section("limits", [&] {
    if (!j.contains("limits")) return;
    c.drain_ms = j.at("limits").value("drain_ms", c.drain_ms);
    if (c.drain_ms < 0.0) throw ConfigError("drain_ms must be >= 0");
  });
  section("costs", [&] {
    if (!j.contains("costs")) return;
    const auto& k = j.at("costs");
    if (k.contains("pcie")) c.pcie = pcie_config_from_json(k.at("pcie"));
    if (k.contains("index")) {
      const auto& ix = k.at("index");
      c.index.sync_period_ms = ix.value("sync_period_ms", c.index.sync_period_ms);
      c.index.local_lookup_ms = ix.value("local_lookup_ms", c.index.local_lookup_ms);
      c.index.global_lookup_ms = ix.value("global_lookup_ms", c.index.global_lookup_ms);
      if (!(c.index.sync_period_ms > 0.0)) throw ConfigError("sync_period_ms must be positive");
    }
  });
  section("duration_ms", [&] {
    c.duration_ms = j.value("duration_ms", c.duration_ms);
    if (c.duration_ms < 0.0) throw ConfigError("must be >= 0");
  });
  section("seed", [&] { c.seed = j.value("seed", c.seed); });
  if (!errors.empty()) throw ConfigErrors(errors);
  return c;
}

ExperimentConfig load_config(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigErrors({"cannot open config " + p.string()});
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigErrors({p.string() + ": " + e.what()});
  }
  return config_from_json(j, p.parent_path());
}

// --- running --------------------------------------------------------------------

Topology build_topology(const ExperimentConfig& cfg) {
  Topology t = load_topology(cfg.topology);
  return cfg.nodes > 1 ? make_cluster(t, cfg.nodes) : t;
}

std::vector<Arrival> build_arrivals(const ExperimentConfig& cfg, std::vector<std::string>* warnings) {
  std::vector<Arrival> out;
  if (!cfg.trace_file.empty()) {
    for (const auto& row : ingest_trace_file(cfg.trace_file, warnings)) {
      if (row.timestamp_ms >= cfg.duration_ms) continue;
      int w = -1;
      for (std::size_t i = 0; i < cfg.workloads.size(); ++i)
        if (cfg.workloads[i].workflow.name == row.workflow) w = static_cast<int>(i);
      if (w < 0) throw ConfigError("trace names unknown workflow '" + row.workflow + "'");
      out.push_back({row.timestamp_ms, w});
    }
    return out;
  }
  for (std::size_t i = 0; i < cfg.workloads.size(); ++i) {
    const auto& s = cfg.workloads[i];
    const auto p = s.pattern.empty() ? cfg.pattern : arrival_pattern_from_string(s.pattern);
    const double span = cfg.duration_ms - s.start_ms;
    for (double t : gen_workload(p, s.rate_rps, span, mix(cfg.seed, i + 1), cfg.burst))
      out.push_back({t + s.start_ms, static_cast<int>(i)});
  }
  std::stable_sort(out.begin(), out.end(), [](const Arrival& a, const Arrival& b) {
    return a.time_ms != b.time_ms ? a.time_ms < b.time_ms : a.workflow < b.workflow;
  });
  return out;
}

EngineConfig engine_config(const ExperimentConfig& cfg) {
  EngineConfig e;
  e.topo = build_topology(cfg);
  e.strategy = cfg.strategy;
  e.pcie = cfg.pcie;
  e.index = cfg.index;
  e.seed = cfg.seed;
  std::vector<int> occupancy(e.topo.gpu_count, 0);
  for (const auto& s : cfg.workloads) {
    e.workflows.push_back(s.workflow);
    auto p = place(s.workflow, e.topo, occupancy, cfg.placement);
    for (const auto& [id, loc] : p.mapping)
      if (!loc.on_host()) ++occupancy[loc.gpu];
    e.placements.push_back(std::move(p));
  }
  e.workflow_slo_ms.assign(cfg.workloads.size(), 0.0);
  e.stage_slo.assign(cfg.workloads.size(), {});
  for (std::size_t i = 0; i < cfg.workloads.size(); ++i) {
    const auto& s = cfg.workloads[i];
    const auto cal = calibrate(e, static_cast<int>(i));
    e.workflow_slo_ms[i] = s.slo_ms > 0.0 ? s.slo_ms : s.slo_factor * cal.latency_ms;
    for (const auto& [f, ms] : cal.stage_ms) e.stage_slo[i][f] = s.stage_slo_factor * ms;
  }
  return e;
}

Report run_experiment(const ExperimentConfig& cfg) {
  Report r;
  r.strategy = cfg.strategy.name;
  r.topology = cfg.topology;
  auto ecfg = engine_config(cfg);
  for (std::size_t i = 0; i < cfg.workloads.size(); ++i)
    r.workflow_slo_ms[cfg.workloads[i].workflow.name] = ecfg.workflow_slo_ms[i];
  Engine engine(std::move(ecfg));
  engine.submit(build_arrivals(cfg, &r.warnings));
  r.metrics = engine.run_until(cfg.duration_ms + cfg.drain_ms);
  r.summary = r.metrics.summarize(cfg.duration_ms);
  for (const auto& s : cfg.workloads)
    r.per_workflow[s.workflow.name] = r.metrics.summarize(cfg.duration_ms, s.workflow.name);
  return r;
}

std::string Report::csv() const {
  std::ostringstream os;
  metrics.write_csv(os);
  return os.str();
}

json Report::json() const {
  nlohmann::json j;
  j["strategy"] = strategy;
  j["topology"] = topology;
  j["summary"] = to_json(summary);
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [name, s] : per_workflow) {
    per[name] = to_json(s);
    per[name]["slo_ms"] = std::stod(fmt_num(workflow_slo_ms.at(name)));
  }
  j["workflows"] = per;
  j["warnings"] = warnings;
  return j;
}

void Report::write(const fs::path& out_dir) const {
  fs::create_directories(out_dir);
  write_atomic(out_dir / "requests.csv", csv());
  write_atomic(out_dir / "summary.json", json().dump(2) + "\n");
}

ThroughputResult max_throughput(const ExperimentConfig& cfg, double slo_ms) {
  if (!(slo_ms > 0.0)) throw ConfigError("throughput SLO must be positive");
  if (!(cfg.duration_ms > 0.0)) throw ConfigError("throughput search needs a positive duration");
  auto ok = [&](double rps) {
    ExperimentConfig c = cfg;
    c.trace_file.clear();
    for (auto& w : c.workloads) w.rate_rps = rps;
    c.drain_ms = std::max(4.0 * slo_ms, 100.0);
    const auto rep = run_experiment(c);
    return rep.summary.requests > 0 && rep.summary.completed == rep.summary.requests &&
           rep.summary.p99_ms <= slo_ms;
  };
  double lo = 1000.0 / cfg.duration_ms;  // one request per run
  if (!ok(lo))
    return {0.0, "P99 exceeds " + fmt_num(slo_ms) + " ms even at the lowest offered rate"};
  double hi = lo * 2.0;
  while (ok(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) return {lo, "search stopped at the rate ceiling"};
  }
  for (int i = 0; i < 20 && hi - lo > 1e-3 * lo; ++i) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  return {lo, ""};
}

std::vector<CompareRow> compare(const std::vector<ExperimentConfig>& configs) {
  if (configs.size() < 2) throw ConfigErrors({"compare needs at least two configs"});
  std::vector<std::string> errors;
  const auto& a = configs.front();
  for (std::size_t i = 1; i < configs.size(); ++i) {
    const auto& b = configs[i];
    if (b.topology != a.topology || b.nodes != a.nodes)
      errors.push_back("config " + std::to_string(i) + " uses a different topology");
    bool same_trace = b.trace_file == a.trace_file && b.pattern == a.pattern &&
                      b.duration_ms == a.duration_ms && b.seed == a.seed &&
                      b.workloads.size() == a.workloads.size();
    for (std::size_t w = 0; same_trace && w < a.workloads.size(); ++w)
      same_trace = a.workloads[w].workflow.name == b.workloads[w].workflow.name &&
                   a.workloads[w].rate_rps == b.workloads[w].rate_rps &&
                   a.workloads[w].start_ms == b.workloads[w].start_ms;
    if (!same_trace) errors.push_back("config " + std::to_string(i) + " uses a different trace");
  }
  if (!errors.empty()) throw ConfigErrors(errors);
  std::vector<CompareRow> rows;
  double worst = 0.0;
  for (const auto& c : configs) {
    rows.push_back({c.strategy.name, run_experiment(c).summary, 0.0});
    worst = std::max(worst, rows.back().summary.p99_ms);
  }
  for (auto& r : rows)
    r.p99_reduction_pct = worst > 0.0 ? 100.0 * (worst - r.summary.p99_ms) / worst : 0.0;
  return rows;
}

std::string format_compare(const std::vector<CompareRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(16) << "strategy" << std::right << std::setw(12) << "p50_ms"
     << std::setw(12) << "p99_ms" << std::setw(12) << "slo_viol" << std::setw(14) << "p99_reduct_%"
     << '\n';
  os << std::fixed << std::setprecision(3);
  for (const auto& r : rows)
    os << std::left << std::setw(16) << r.strategy << std::right << std::setw(12) << r.summary.p50_ms
       << std::setw(12) << r.summary.p99_ms << std::setw(12) << r.summary.slo_violation_rate
       << std::setw(14) << r.p99_reduction_pct << '\n';
  return os.str();
}

}  // namespace faastube
