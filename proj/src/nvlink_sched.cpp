// SPDX-FileCopyrightText: Copyright (c) 2026 The FaaSTube-Sim Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "faastube/nvlink_sched.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace faastube {

namespace {

constexpr double kEps = 1e-9;

using Edge = std::pair<GpuId, GpuId>;

std::set<Edge> edges_of(const GpuPath& p) {
  std::set<Edge> out;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) out.insert({p[i], p[i + 1]});
  return out;
}

bool shares_edge(const GpuPath& p, const std::set<Edge>& edges) {
  for (std::size_t i = 0; i + 1 < p.size(); ++i)
    if (edges.count({p[i], p[i + 1]})) return true;
  return false;
}

bool all_idle(const BandwidthMatrix& m, const GpuPath& p) {
  for (std::size_t i = 0; i + 1 < p.size(); ++i)
    if (!m.idle(p[i], p[i + 1]) || m.residual(p[i], p[i + 1]) <= kEps) return false;
  return true;
}

double budget(const BandwidthMatrix& m, GpuId src, GpuId dst) {
  return std::min(m.egress_budget(src), m.ingress_budget(dst));
}

// Hop count ascending, larger current b_min, then GPU ids.
void rank(const BandwidthMatrix& m, std::vector<GpuPath>& paths) {
  std::vector<std::pair<double, GpuPath>> keyed;
  for (auto& p : paths) keyed.emplace_back(path_b_min(m, p), std::move(p));
  std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    if (a.second.size() != b.second.size()) return a.second.size() < b.second.size();
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  paths.clear();
  for (auto& [bm, p] : keyed) paths.push_back(std::move(p));
}

void check_query(const BandwidthMatrix& m, const PathQuery& q) {
  if (q.src < 0 || q.dst < 0 || q.src >= m.size() || q.dst >= m.size())
    throw SchedulingError("path query names an unknown gpu");
  if (q.src == q.dst) throw SchedulingError("path query needs distinct source and destination");
}

std::vector<HeldPath> holders_on(const BandwidthMatrix& m, Edge e, OwnerId except) {
  std::vector<HeldPath> out;
  for (const auto& h : m.holds()) {
    if (h.owner == except) continue;
    if (edges_of(h.gpus).count(e)) out.push_back(h);
  }
  return out;
}

const HeldPath* find_hold(const BandwidthMatrix& m, std::uint64_t id) {
  for (const auto& h : m.holds())
    if (h.id == id) return &h;
  return nullptr;
}

// Frees capacity on the saturated edges of `p` by moving or halving foreign
// holds. Leaves `trial` untouched on failure only in the sense that the
// caller discards it.
bool make_room(BandwidthMatrix& trial, const GpuPath& p, const PathQuery& q, int max_hops,
               std::vector<HoldChange>& changes, int& examined) {
  const auto ours = edges_of(p);
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    const Edge e{p[i], p[i + 1]};
    for (const auto& h : holders_on(trial, e, q.func)) {
      if (trial.residual(e.first, e.second) > kEps) break;
      const HeldPath* live = find_hold(trial, h.id);
      if (!live) continue;
      const HeldPath held = *live;
      const GpuId hs = held.gpus.front(), hd = held.gpus.back();

      BandwidthMatrix moved = trial;
      moved.release_hold(held.id);
      bool switched = false;
      auto alts = enumerate_paths(moved, hs, hd, max_hops);
      rank(moved, alts);
      for (const auto& alt : alts) {
        ++examined;
        if (alt == held.gpus || shares_edge(alt, ours)) continue;
        if (path_b_min(moved, alt) + kEps < held.rate_gbps) continue;
        if (budget(moved, hs, hd) + kEps < held.rate_gbps) continue;
        const auto nid = moved.hold(held.owner, alt, held.rate_gbps);
        changes.push_back({held.owner, held.id, nid, alt, held.rate_gbps});
        trial = std::move(moved);
        switched = true;
        break;
      }
      if (switched) continue;

      const double half = held.rate_gbps / 2.0;
      const double after = trial.aggregate(held.owner) - half;
      if (after + kEps < best_single_path(trial, hs, hd, max_hops)) return false;
      trial.set_rate(held.id, half);
      changes.push_back({held.owner, held.id, held.id, held.gpus, half});
    }
    if (trial.residual(e.first, e.second) <= kEps) return false;
  }
  return true;
}

}  // namespace

std::string SelectTrace::str() const {
  std::ostringstream os;
  auto path_str = [](const GpuPath& p) {
    std::string s;
    for (std::size_t i = 0; i < p.size(); ++i) s += (i ? "-" : "") + std::to_string(p[i]);
    return s;
  };
  os << "examined " << examined << "\n";
  os << "candidates";
  for (const auto& c : candidates) os << ' ' << path_str(c);
  os << "\nchosen";
  for (const auto& c : chosen) os << ' ' << path_str(c.gpus) << '@' << c.b_min_gbps;
  os << "\nchanges";
  for (const auto& c : changes)
    os << " owner" << c.owner << ':' << path_str(c.path) << '@' << c.rate_gbps;
  os << "\nbefore " << before.dump() << "\nafter " << after.dump() << "\n";
  return os.str();
}

std::vector<GpuPath> enumerate_paths(const BandwidthMatrix& m, GpuId src, GpuId dst,
                                     int max_hops) {
  std::vector<GpuPath> out;
  GpuPath cur{src};
  std::vector<bool> seen(m.size(), false);
  seen[src] = true;
  auto dfs = [&](auto&& self, GpuId u) -> void {
    if (u == dst) {
      out.push_back(cur);
      return;
    }
    if (static_cast<int>(cur.size()) > max_hops) return;
    for (GpuId v = 0; v < m.size(); ++v) {
      if (seen[v] || m.capacity(u, v) <= 0.0) continue;
      seen[v] = true;
      cur.push_back(v);
      self(self, v);
      cur.pop_back();
      seen[v] = false;
    }
  };
  dfs(dfs, src);
  std::stable_sort(out.begin(), out.end(), [](const GpuPath& a, const GpuPath& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  return out;
}

double path_b_min(const BandwidthMatrix& m, const GpuPath& p) {
  double b = kInf;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) b = std::min(b, m.residual(p[i], p[i + 1]));
  return p.size() < 2 ? 0.0 : b;
}

double path_capacity(const BandwidthMatrix& m, const GpuPath& p) {
  double b = kInf;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) b = std::min(b, m.capacity(p[i], p[i + 1]));
  return p.size() < 2 ? 0.0 : b;
}

double best_single_path(const BandwidthMatrix& m, GpuId src, GpuId dst, int max_hops) {
  double best = 0.0;
  for (const auto& p : enumerate_paths(m, src, dst, max_hops)) best = std::max(best, path_capacity(m, p));
  return std::min({best, m.egress_capacity(src), m.ingress_capacity(dst)});
}

std::vector<NvPath> select_paths(BandwidthMatrix& m, const PathQuery& q, SelectTrace* trace,
                                 const SelectOptions& opts) {
  check_query(m, q);
  if (trace) trace->before = m.to_json();
  const auto all = enumerate_paths(m, q.src, q.dst, opts.max_hops);
  if (trace) trace->candidates = all;

  std::vector<NvPath> chosen;
  std::set<Edge> own;
  int examined = 0;
  auto unused = [&](const GpuPath& p) { return !shares_edge(p, own); };
  auto take = [&](const GpuPath& p, double rate, std::uint64_t id) {
    chosen.push_back({p, rate, q.func, id});
    const auto e = edges_of(p);
    own.insert(e.begin(), e.end());
  };

  // Phase 1: idle paths, shortest first.
  while (budget(m, q.src, q.dst) > kEps && examined < opts.max_examined) {
    std::vector<GpuPath> cands;
    for (const auto& p : all)
      if (unused(p) && all_idle(m, p)) cands.push_back(p);
    examined += static_cast<int>(cands.size());
    if (cands.empty()) break;
    rank(m, cands);
    const auto& p = cands.front();
    const double rate = std::min(path_b_min(m, p), budget(m, q.src, q.dst));
    take(p, rate, m.hold(q.func, p, rate));
  }

  // Phase 2: contended paths, adopted only when nobody drops below its best
  // single-path bandwidth.
  std::vector<HoldChange> changes;
  const double best = best_single_path(m, q.src, q.dst, opts.max_hops);
  while (opts.phase2 && budget(m, q.src, q.dst) > kEps && examined < opts.max_examined) {
    std::vector<GpuPath> cands;
    for (const auto& p : all)
      if (unused(p)) cands.push_back(p);
    if (cands.empty()) break;
    rank(m, cands);
    bool progressed = false;
    for (const auto& p : cands) {
      if (++examined > opts.max_examined) break;
      BandwidthMatrix trial = m;
      std::vector<HoldChange> local;
      if (!make_room(trial, p, q, opts.max_hops, local, examined)) continue;
      const double rate = std::min(path_b_min(trial, p), budget(trial, q.src, q.dst));
      if (rate <= kEps) continue;
      const bool split = std::any_of(local.begin(), local.end(),
                                     [](const HoldChange& c) { return c.old_hold == c.new_hold; });
      if (split && m.aggregate(q.func) + rate + kEps < best) continue;
      const auto id = trial.hold(q.func, p, rate);
      m = std::move(trial);
      changes.insert(changes.end(), local.begin(), local.end());
      take(p, rate, id);
      progressed = true;
      break;
    }
    if (!progressed) break;
  }

  if (trace) {
    trace->chosen = chosen;
    trace->changes = changes;
    trace->examined = examined;
    trace->after = m.to_json();
  }
  return chosen;
}

std::vector<NvPath> select_direct(BandwidthMatrix& m, const PathQuery& q) {
  check_query(m, q);
  if (m.capacity(q.src, q.dst) <= 0.0) return {};
  const double rate = std::min(m.residual(q.src, q.dst), budget(m, q.src, q.dst));
  if (rate <= kEps) return {};
  const GpuPath p{q.src, q.dst};
  return {{p, rate, q.func, m.hold(q.func, p, rate)}};
}

ClaimResult claim_direct_for_workflow(BandwidthMatrix& m, OwnerId owner,
                                      const std::vector<std::pair<GpuId, GpuId>>& gpu_pairs) {
  ClaimResult out;
  std::vector<std::pair<OwnerId, Edge>> evictees;
  for (const auto& [u, v] : gpu_pairs) {
    if (u == v || m.capacity(u, v) <= 0.0) continue;
    for (OwnerId o : m.owners(u, v)) {
      if (o == owner) continue;
      const auto held = m.holds_of(o);
      evictees.push_back({o, {held.front().gpus.front(), held.front().gpus.back()}});
      out.evicted.push_back(o);
      m.release(o);
    }
    const double rate = std::min(m.residual(u, v), budget(m, u, v));
    if (rate <= kEps) continue;
    const GpuPath p{u, v};
    out.reservations.push_back({p, rate, owner, m.hold(owner, p, rate)});
  }
  for (const auto& [o, e] : evictees)
    out.replanned.push_back({o, select_paths(m, {o, e.first, e.second})});
  return out;
}

std::vector<int> distribute_chunks(const std::vector<double>& rates, int chunks) {
  std::vector<int> out(rates.size(), 0);
  if (rates.empty() || chunks <= 0) return out;
  const double total = std::accumulate(rates.begin(), rates.end(), 0.0);
  if (!(total > 0.0)) throw SchedulingError("chunk distribution needs positive path rates");
  std::vector<double> frac(rates.size());
  int given = 0;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    const double quota = chunks * rates[i] / total;
    out[i] = static_cast<int>(std::floor(quota + 1e-9));
    frac[i] = quota - out[i];
    given += out[i];
  }
  std::vector<std::size_t> order(rates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b] + 1e-12; });
  for (std::size_t k = 0; given < chunks; k = (k + 1) % order.size(), ++given) ++out[order[k]];
  return out;
}

std::vector<double> distribute_bytes(const std::vector<double>& rates, double bytes,
                                     double chunk_bytes) {
  std::vector<double> out(rates.size(), 0.0);
  if (rates.empty() || bytes <= 0.0) return out;
  const int chunks = static_cast<int>(std::ceil(bytes / chunk_bytes - 1e-9));
  const auto counts = distribute_chunks(rates, chunks);
  double sum = 0.0;
  int last = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out[i] = counts[i] * chunk_bytes;
    sum += out[i];
    if (counts[i] > 0) last = static_cast<int>(i);
  }
  out[last] -= sum - bytes;
  return out;
}

void release_paths(BandwidthMatrix& m, OwnerId func) { m.release(func); }

}  // namespace faastube
