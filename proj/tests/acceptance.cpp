// SPDX-FileCopyrightText: Copyright (c) 2026 The FaaSTube-Sim Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "faastube/datastore.hpp"
#include "faastube/harness.hpp"
#include "faastube/nvlink_sched.hpp"
#include "test_util.hpp"

using namespace faastube;
using faastube::testing::engine_finish;
using faastube::testing::integrate;
using faastube::testing::OracleFlow;
using faastube::testing::run_plan_alone;
using faastube::testing::TestRng;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double plan_ms(const Topology& t, PlannerOptions opts, Location from, Location to, double bytes) {
  FluidSim sim;
  ResourceMap res(t, sim);
  std::vector<PinnedRing> rings;
  TransferPlanner planner(t, res, opts, &rings);
  BandwidthMatrix m(t);
  const auto plan = planner.plan(from, to, bytes, opts.multipath ? &m : nullptr, 1);
  return run_plan_alone(sim, plan);
}

std::string fmt(double v, int prec = 3) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(prec);
  os << v;
  return os.str();
}

// 1: staging through the host versus one direct NVLink hop.
Outcome criterion1() {
  const auto t = build_preset("dgx_v100");
  PlannerOptions infless;  // host staging, one root, pinning excluded from the ratio
  PlannerOptions direct;
  direct.gpu_direct = true;
  const double a = plan_ms(t, infless, {0, 0}, {0, 1}, kGB);
  const double b = plan_ms(t, direct, {0, 0}, {0, 1}, kGB);
  PlannerOptions multi = direct;
  multi.multipath = true;
  const double c = plan_ms(t, multi, {0, 0}, {0, 1}, kGB);
  const double ratio = a / b;
  return {std::abs(ratio - 4.0) <= 0.04,
          "infless " + fmt(a) + " ms, direct " + fmt(b) + " ms, ratio " + fmt(ratio) +
              " (multipath " + fmt(a / c) + "x, info)"};
}

// 2: host to GPU over one root versus all roots.
Outcome criterion2() {
  const auto t = build_preset("dgx_v100");
  PlannerOptions one;
  PlannerOptions par;
  par.parallel_pcie = true;
  const double a = plan_ms(t, one, {0, -1}, {0, 0}, kGB);
  const double b = plan_ms(t, par, {0, -1}, {0, 0}, kGB);
  const double speedup = a / b;
  return {speedup >= 3.5 * 0.95 && speedup <= 4.0 * 1.05,
          "single " + fmt(a) + " ms, parallel " + fmt(b) + " ms, speedup " + fmt(speedup)};
}

// 3: multipath aggregates on the cube mesh.
Outcome criterion3() {
  const auto t = build_preset("dgx_v100");
  auto aggregate = [&](GpuId u, GpuId v) {
    BandwidthMatrix m(t);
    double sum = 0.0;
    for (const auto& p : select_paths(m, {1, u, v})) sum += p.b_min_gbps;
    return sum;
  };
  const double none = aggregate(0, 5) / t.params.pcie_p2p_gbps;
  const double single = aggregate(0, 1) / t.nvlink_capacity(0, 1);
  const bool ok = none >= 5.5 && none <= 6.5 && std::abs(single - 2.0) <= 0.2;
  return {ok, "0->5 aggregate/p2p " + fmt(none) + ", 0->1 aggregate/direct " + fmt(single)};
}

std::string write_trace(const std::string& name, const std::vector<std::pair<std::string, double>>& rows) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream os(p);
  os << "workflow,timestamp_ms\n";
  for (const auto& [w, t] : rows) os << w << ',' << fmt(t, 6) << '\n';
  return p.string();
}

// 4: PCIe isolation of a latency-critical workflow.
Outcome criterion4() {
  const double period = 200.0;
  const int n = 20;
  std::vector<std::pair<std::string, double>> solo_rows, co_rows;
  for (int k = 0; k < n; ++k) {
    solo_rows.emplace_back("driving", k * period + 2.0);
    co_rows.emplace_back("video", k * period);
    co_rows.emplace_back("driving", k * period + 2.0);
  }
  const auto solo_trace = write_trace("faastube_c4_solo.csv", solo_rows);
  const auto co_trace = write_trace("faastube_c4_co.csv", co_rows);

  auto make = [&](bool sched, bool co) {
    ExperimentConfig c;
    c.topology = "dgx_v100";
    c.strategy = strategy_preset("faastube");
    c.strategy.pcie_sched = sched;
    WorkloadSpec d{preset_workflow("driving")};
    c.workloads.push_back(d);
    if (co) {
      WorkloadSpec v{preset_workflow("video")};
      v.slo_factor = 4.0;
      v.stage_slo_factor = 4.0;
      c.workloads.push_back(v);
    }
    c.trace_file = co ? co_trace : solo_trace;
    c.duration_ms = n * period;
    c.drain_ms = 5000.0;
    return c;
  };
  auto host_p99 = [](const Report& r) {
    return percentile(r.metrics.phase_samples(Phase::kHostToGfunc, "driving"), 99.0);
  };
  const auto fair_solo = run_experiment(make(false, false));
  const auto fair_co = run_experiment(make(false, true));
  const auto sched_solo = run_experiment(make(true, false));
  const auto sched_co = run_experiment(make(true, true));
  const double inflation = host_p99(fair_co) / host_p99(fair_solo);
  const auto& s_solo = sched_solo.per_workflow.at("driving");
  const auto& s_co = sched_co.per_workflow.at("driving");
  const double diff = std::abs(s_co.p99_ms - s_solo.p99_ms) / s_solo.p99_ms;
  const bool ok = inflation >= 2.0 && s_co.slo_violation_rate == 0.0 && diff <= 0.10 &&
                  s_co.completed == s_co.requests;
  return {ok, "fair-share host-phase inflation " + fmt(inflation) + "x; scheduled: violations " +
                  fmt(s_co.slo_violation_rate) + ", P99 solo " + fmt(s_solo.p99_ms) + " ms vs co-run " +
                  fmt(s_co.p99_ms) + " ms (" + fmt(100.0 * diff, 1) + "%)"};
}

// 5: pool elasticity. Four tenants take turns: each is silent except for
// one Poisson burst in its own slot, so load moves between GPUs over time.
Outcome criterion5() {
  const std::vector<std::string> tenants = {"traffic", "video", "driving", "image"};
  const double slot = 2500.0, burst = 800.0, rate = 60.0;
  std::vector<std::pair<std::string, double>> rows;
  for (std::size_t i = 0; i < tenants.size(); ++i)
    for (double t : gen_workload(ArrivalPattern::kSporadic, rate, burst, 200 + i))
      rows.emplace_back(tenants[i], t + slot * static_cast<double>(i) + slot / 4.0);
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  const auto trace = write_trace("faastube_c5.csv", rows);

  auto make = [&](PoolMode mode) {
    ExperimentConfig c;
    c.topology = "dgx_v100";
    c.strategy = strategy_preset("faastube");
    c.strategy.pool = mode;
    for (const auto& w : tenants) c.workloads.push_back({preset_workflow(w)});
    c.placement.gpu_slots = 2;
    c.trace_file = trace;
    c.duration_ms = slot * static_cast<double>(tenants.size());
    c.drain_ms = 5000.0;
    return c;
  };
  auto cache = make(PoolMode::kCacheAll);
  auto autos = make(PoolMode::kAutoscale);
  const auto rc = run_experiment(cache);
  Engine engine(engine_config(autos));
  engine.submit(build_arrivals(autos));
  const auto& ma = engine.run_until(autos.duration_ms + autos.drain_ms);
  double min_floor = kInf;
  for (double v : engine.min_pool_bytes()) min_floor = std::min(min_floor, v);
  const double ratio = rc.metrics.peak_pool_bytes / ma.peak_pool_bytes;
  const bool ok = ratio >= 2.0 && min_floor + 1.0 >= autos.strategy.pool_floor_bytes;
  return {ok, "cache_all peak " + fmt(rc.metrics.peak_pool_bytes / kGB) + " GB, autoscale peak " +
                  fmt(ma.peak_pool_bytes / kGB) + " GB, ratio " + fmt(ratio) +
                  ", smallest autoscale pool with an active window " + fmt(min_floor / kMB, 1) + " MB"};
}

std::vector<TraceStep> random_trace(std::uint64_t seed, bool mixed) {
  TestRng rng{seed};
  const double size = (1 + rng.below(8)) * 16.0 * kMB;
  std::vector<TraceStep> out;
  int pending = 0;
  const int steps = 10 + rng.below(40);
  for (int i = 0; i < steps; ++i) {
    const bool produce = pending == 0 || rng.uniform() < 0.55;
    if (produce) {
      out.push_back({true, mixed ? (1 + rng.below(8)) * 16.0 * kMB : size});
      ++pending;
    } else {
      out.push_back({false, 0.0});
      --pending;
    }
  }
  while (pending-- > 0) out.push_back({false, 0.0});
  return out;
}

// 6: queue-aware migration never reloads more than LRU.
Outcome criterion6() {
  auto count_worse = [](bool mixed) {
    int worse = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
      const auto trace = random_trace(seed, mixed);
      const double cap = (2 + static_cast<int>(seed % 6)) * 32.0 * kMB;
      for (bool prefetch : {true, false}) {
        const auto qa = simulate_fifo_trace(trace, cap, MigrationPolicy::kQueueAware, prefetch);
        const auto lru = simulate_fifo_trace(trace, cap, MigrationPolicy::kLru, prefetch);
        if (qa.demand_reload_bytes > lru.demand_reload_bytes + 1e-6) ++worse;
      }
    }
    return worse;
  };
  const int worse = count_worse(false);
  const int mixed_worse = count_worse(true);
  const auto tp = two_producer_trace();
  const auto qa = simulate_fifo_trace(tp, 100.0 * kMB, MigrationPolicy::kQueueAware, true);
  const auto lru = simulate_fifo_trace(tp, 100.0 * kMB, MigrationPolicy::kLru, true);
  const bool ok = worse == 0 && qa.demand_reload_bytes < lru.demand_reload_bytes;
  return {ok, "random traces where queue-aware reloads more: " + std::to_string(worse) +
                  "/200; two-producer reloads " + fmt(qa.demand_reload_bytes / kMB, 0) + " MB vs " +
                  fmt(lru.demand_reload_bytes / kMB, 0) + " MB; mixed-size traces worse: " +
                  std::to_string(mixed_worse) + "/200 (info)"};
}

// 7: event engine against a 1 us integrator.
Outcome criterion7() {
  double worst = 0.0;
  for (std::uint64_t c = 1; c <= 50; ++c) {
    TestRng rng{c * 7919};
    const int gpus = 2 + rng.below(3);
    // PCIe up/down per GPU plus a few NVLink-like pair links.
    std::vector<double> caps;
    for (int g = 0; g < 2 * gpus; ++g) caps.push_back(g % 2 ? 12.0 : 12.0 * (0.5 + rng.uniform()));
    const int nv = rng.below(gpus);
    for (int k = 0; k < nv; ++k) caps.push_back(24.0 * (1 + rng.below(2)));
    std::vector<OracleFlow> flows(1 + rng.below(3));
    for (auto& f : flows) {
      const int len = 1 + rng.below(std::min<int>(3, static_cast<int>(caps.size())));
      while (static_cast<int>(f.path.size()) < len) {
        const int r = rng.below(static_cast<int>(caps.size()));
        if (std::find(f.path.begin(), f.path.end(), r) == f.path.end()) f.path.push_back(r);
      }
      f.start = rng.below(20000) * 1e-3;
      f.bytes = (8.0 + rng.uniform() * 500.0) * kMB;
      if (rng.uniform() < 0.3) f.cap = 2.0 + rng.uniform() * 10.0;
    }
    const auto a = integrate(caps, flows);
    const auto b = engine_finish(caps, flows);
    for (std::size_t i = 0; i < flows.size(); ++i)
      worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(a[i], 1e-9));
  }
  return {worst <= 1e-6, "max relative error " + [&] {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.3e", worst);
            return std::string(buf);
          }() + " over 50 cases"};
}

std::vector<std::string> all_workflows() { return preset_workflow_names(); }

ExperimentConfig matrix_config(const std::string& wf, const std::string& topo, ArrivalPattern p,
                               const std::string& strategy, double duration) {
  ExperimentConfig c;
  c.topology = topo;
  c.workloads.push_back({preset_workflow(wf)});
  c.workloads.back().rate_rps = 10.0;
  c.strategy = strategy_preset(strategy);
  c.pattern = p;
  c.duration_ms = duration;
  c.drain_ms = 20000.0;
  c.seed = 3;
  return c;
}

const std::vector<std::string> kTopos = {"dgx_v100", "dgx_a100", "quad_a10"};
const std::vector<ArrivalPattern> kPatterns = {ArrivalPattern::kSporadic, ArrivalPattern::kPeriodic,
                                               ArrivalPattern::kBursty};

// 8: byte-identical reports for repeated runs.
Outcome criterion8() {
  int runs = 0, mismatches = 0;
  for (const auto& wf : all_workflows())
    for (const auto& topo : kTopos)
      for (auto p : kPatterns)
        for (const auto& s : baseline_names()) {
          const auto c = matrix_config(wf, topo, p, s, 500.0);
          const auto a = run_experiment(c), b = run_experiment(c);
          ++runs;
          if (a.csv() != b.csv() || a.json().dump() != b.json().dump()) ++mismatches;
        }
  return {mismatches == 0, std::to_string(runs) + " configs run twice, " + std::to_string(mismatches) +
                               " mismatches"};
}

// 9: P99 ordering faastube <= faastube_star <= infless_plus.
Outcome criterion9() {
  int cases = 0;
  std::vector<std::string> bad;
  for (const auto& wf : all_workflows())
    for (const auto& topo : kTopos)
      for (auto p : kPatterns) {
        const double a = run_experiment(matrix_config(wf, topo, p, "faastube", 2000.0)).summary.p99_ms;
        const double b = run_experiment(matrix_config(wf, topo, p, "faastube_star", 2000.0)).summary.p99_ms;
        const double c = run_experiment(matrix_config(wf, topo, p, "infless_plus", 2000.0)).summary.p99_ms;
        ++cases;
        if (!(a <= b && b <= c))
          bad.push_back(wf + "/" + topo + "/" + std::string(to_string(p)) + " (" + fmt(a) + ", " +
                        fmt(b) + ", " + fmt(c) + ")");
      }
  std::string detail = std::to_string(cases) + " cases, " + std::to_string(bad.size()) + " ordering violations";
  for (std::size_t i = 0; i < bad.size() && i < 5; ++i) detail += "; " + bad[i];
  return {bad.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> all = {
      {"1 gfunc-to-gfunc dominance (ratio 4.0 +-1%)", criterion1},
      {"2 parallel PCIe gain (>=3.5x at 1 GB, +-5%)", criterion2},
      {"3 parallel NVLink ratios ([5.5,6.5] and 2.0 +-10%)", criterion3},
      {"4 PCIe isolation", criterion4},
      {"5 memory elasticity (ratio >= 2, floor kept)", criterion5},
      {"6 queue-aware migration vs LRU", criterion6},
      {"7 oracle equivalence (<= 1e-6)", criterion7},
      {"8 determinism", criterion8},
      {"9 strategy monotonicity", criterion9},
  };
  std::string only = argc > 1 ? argv[1] : "";
  int failed = 0;
  for (const auto& [name, fn] : all) {
    if (!only.empty() && name.substr(0, only.size()) != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << name << ": " << o.detail << " ["
              << fmt(secs, 2) << " s]" << std::endl;
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
