// SPDX-FileCopyrightText: Copyright (c) 2026 The FaaSTube-Sim Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "faastube/dataplane.hpp"
#include "faastube/fluid.hpp"

namespace faastube::testing {

/// Executes a plan with nothing else on the links; returns its duration.
inline double run_plan_alone(FluidSim& sim, const TransferPlan& plan) {
  const double t0 = sim.now();
  for (const auto& stage : plan.stages) {
    sim.advance_to(sim.now() + stage.setup_ms);
    std::size_t left = 0;
    for (const auto& leg : stage.legs) {
      FlowSpec f;
      f.resources = leg.resources;
      f.bytes = leg.bytes;
      f.rate_cap = leg.rate_cap;
      f.tail_ms = leg.tail_ms;
      f.managed_rate = leg.managed_rate;
      sim.add_flow(f);
      ++left;
    }
    while (left > 0) {
      const double t = sim.next_event_time();
      left -= sim.advance_to(t).size();
    }
  }
  return sim.now() - t0;
}

/// Deterministic uniform source for test oracles.
struct TestRng {
  std::uint64_t s;
  double uniform() {
    s += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return static_cast<double>(z >> 11) * 0x1.0p-53;
  }
  int below(int n) { return static_cast<int>(uniform() * n); }
};

/// Bottleneck-first max-min allocation, written independently of water_fill.
inline std::vector<double> oracle_rates(std::vector<double> residual, const std::vector<std::vector<int>>& paths,
                                 const std::vector<double>& caps) {
  const std::size_t n = paths.size();
  std::vector<double> rate(n, 0.0);
  std::vector<bool> fixed(n, false);
  for (;;) {
    std::vector<int> users(residual.size(), 0);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i)
      if (!fixed[i]) {
        any = true;
        for (int r : paths[i]) ++users[r];
      }
    if (!any) break;
    int bottleneck = -1;
    double share = kInf;
    for (std::size_t r = 0; r < residual.size(); ++r)
      if (users[r] > 0 && residual[r] / users[r] < share) {
        share = residual[r] / users[r];
        bottleneck = static_cast<int>(r);
      }
    std::size_t capped = n;
    for (std::size_t i = 0; i < n; ++i)
      if (!fixed[i] && caps[i] < share) {
        share = caps[i];
        capped = i;
      }
    auto fix = [&](std::size_t i, double v) {
      rate[i] = v;
      fixed[i] = true;
      for (int r : paths[i]) residual[r] -= v;
    };
    if (capped < n) {
      fix(capped, caps[capped]);
      continue;
    }
    for (std::size_t i = 0; i < n; ++i)
      if (!fixed[i] && std::find(paths[i].begin(), paths[i].end(), bottleneck) != paths[i].end())
        fix(i, share);
  }
  return rate;
}

/// A flow for the brute-force integrator.
struct OracleFlow {
  std::vector<int> path;
  double start = 0.0;
  double bytes = 0.0;
  double cap = kInf;
};

inline std::vector<double> integrate(const std::vector<double>& caps, const std::vector<OracleFlow>& flows) {
  const double dt = 1e-3;  // 1 microsecond
  std::vector<double> left(flows.size()), finish(flows.size(), -1.0);
  for (std::size_t i = 0; i < flows.size(); ++i) left[i] = flows[i].bytes;
  double t = 0.0;
  for (;;) {
    std::vector<std::size_t> act;
    std::vector<std::vector<int>> paths;
    std::vector<double> fc;
    double next_start = kInf;
    bool pending = false;
    for (std::size_t i = 0; i < flows.size(); ++i) {
      if (finish[i] >= 0.0) continue;
      pending = true;
      if (flows[i].start <= t) {
        act.push_back(i);
        paths.push_back(flows[i].path);
        fc.push_back(flows[i].cap);
      } else {
        next_start = std::min(next_start, flows[i].start);
      }
    }
    if (!pending) break;
    const auto rates = oracle_rates(caps, paths, fc);
    double h = std::min(dt, next_start - t);
    for (std::size_t k = 0; k < act.size(); ++k)
      if (rates[k] > 0.0) h = std::min(h, left[act[k]] / (rates[k] * kBytesPerMsPerGbps));
    t += h;
    for (std::size_t k = 0; k < act.size(); ++k) {
      const auto i = act[k];
      left[i] -= rates[k] * kBytesPerMsPerGbps * h;
      if (left[i] <= flows[i].bytes * 1e-12) finish[i] = t;
    }
  }
  return finish;
}

inline std::vector<double> engine_finish(const std::vector<double>& caps, const std::vector<OracleFlow>& flows) {
  FluidSim sim;
  for (std::size_t r = 0; r < caps.size(); ++r) sim.add_resource("r" + std::to_string(r), caps[r]);
  std::vector<std::size_t> order(flows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return flows[a].start < flows[b].start; });
  std::map<FlowId, std::size_t> ids;
  std::vector<double> finish(flows.size(), -1.0);
  std::size_t next = 0;
  while (ids.size() < flows.size() || sim.flow_count() > 0) {
    const double ts = next < order.size() ? flows[order[next]].start : kInf;
    const double te = sim.next_event_time();
    const double t = std::min(ts, te);
    for (FlowId id : sim.advance_to(t)) finish[ids.at(id)] = sim.now();
    while (next < order.size() && flows[order[next]].start <= sim.now()) {
      const auto& f = flows[order[next]];
      FlowSpec s;
      s.resources = f.path;
      s.bytes = f.bytes;
      s.rate_cap = f.cap;
      ids[sim.add_flow(s)] = order[next];
      ++next;
    }
  }
  return finish;
}

inline bool rel_close(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b));
}

}  // namespace faastube::testing
