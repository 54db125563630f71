// SPDX-FileCopyrightText: Copyright (c) 2026 The FaaSTube-Sim Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "faastube/fluid.hpp"

#include <numeric>

namespace faastube {

namespace {

constexpr double kRelTol = 1e-12;
// Rates below this (about one byte per second) are rounding residue.
constexpr double kMinRate = 1e-9;

double path_residual(const std::vector<double>& residual, const std::vector<int>& path) {
  double avail = kInf;
  for (int r : path) avail = std::min(avail, residual[r]);
  return std::max(avail, 0.0);
}

void consume(std::vector<double>& residual, const std::vector<int>& path, double rate) {
  for (int r : path) residual[r] = std::max(0.0, residual[r] - rate);
}

}  // namespace

std::vector<double> water_fill(std::vector<double> residual,
                               const std::vector<std::vector<int>>& paths,
                               const std::vector<double>& caps) {
  const std::size_t n = paths.size();
  std::vector<double> rate(n, 0.0);
  std::vector<bool> frozen(n, false);
  const std::vector<double> original = residual;
  for (std::size_t i = 0; i < n; ++i) {
    if (caps[i] <= 0.0) frozen[i] = true;
    if (paths[i].empty()) {
      rate[i] = caps[i];
      frozen[i] = true;
    }
  }
  std::vector<int> users(residual.size());
  for (;;) {
    std::fill(users.begin(), users.end(), 0);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (frozen[i]) continue;
      any = true;
      for (int r : paths[i]) ++users[r];
    }
    if (!any) break;
    double delta = kInf;
    for (std::size_t r = 0; r < residual.size(); ++r)
      if (users[r] > 0) delta = std::min(delta, residual[r] / users[r]);
    for (std::size_t i = 0; i < n; ++i)
      if (!frozen[i]) delta = std::min(delta, caps[i] - rate[i]);
    delta = std::max(delta, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (frozen[i]) continue;
      rate[i] += delta;
      for (int r : paths[i]) residual[r] -= delta;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (frozen[i]) continue;
      if (rate[i] >= caps[i] * (1.0 - kRelTol)) frozen[i] = true;
      for (int r : paths[i])
        if (residual[r] <= original[r] * kRelTol) frozen[i] = true;
    }
  }
  return rate;
}

std::vector<double> allocate_rates(const std::vector<double>& capacity,
                                   const std::vector<AllocInput>& flows) {
  std::vector<double> residual = capacity;
  std::vector<double> rate(flows.size(), 0.0);

  // Locked rates are a floor for the rest of the batch; such flows may
  // still pick up bandwidth in the managed and leftover passes.
  std::vector<std::size_t> managed;
  std::vector<std::size_t> fair;
  std::vector<std::size_t> locked_fair;
  for (std::size_t i = 0; i < flows.size(); ++i) {
    const auto& f = flows[i];
    if (f.locked_rate > 0.0) {
      rate[i] = f.locked_rate;
      consume(residual, f.resources, rate[i]);
    }
    if (f.managed_rate >= 0.0) {
      managed.push_back(i);
    } else if (f.locked_rate > 0.0) {
      locked_fair.push_back(i);
    } else {
      fair.push_back(i);
    }
  }
  std::stable_sort(managed.begin(), managed.end(), [&](std::size_t a, std::size_t b) {
    return flows[a].priority < flows[b].priority;
  });
  for (auto i : managed) {
    const auto& f = flows[i];
    const double want = std::min(f.managed_rate, f.rate_cap) - rate[i];
    const double add = std::min(want, path_residual(residual, f.resources));
    if (add <= 0.0) continue;
    rate[i] += add;
    consume(residual, f.resources, add);
  }

  std::vector<std::vector<int>> paths;
  std::vector<double> caps;
  for (auto i : fair) {
    paths.push_back(flows[i].resources);
    caps.push_back(flows[i].rate_cap);
  }
  const auto shares = water_fill(residual, paths, caps);
  for (std::size_t k = 0; k < fair.size(); ++k) {
    rate[fair[k]] = shares[k];
    consume(residual, flows[fair[k]].resources, shares[k]);
  }

  managed.insert(managed.end(), locked_fair.begin(), locked_fair.end());
  for (auto i : managed) {
    const auto& f = flows[i];
    if (f.resources.empty()) continue;
    const double extra = std::min(f.rate_cap - rate[i], path_residual(residual, f.resources));
    if (extra <= 0.0) continue;
    rate[i] += extra;
    consume(residual, f.resources, extra);
  }
  for (auto& r : rate)
    if (r < kMinRate) r = 0.0;
  return rate;
}

// --- FluidSim -----------------------------------------------------------------

int FluidSim::add_resource(std::string name, double capacity_gbps) {
  if (!(capacity_gbps > 0.0)) throw SchedulingError("resource '" + name + "' needs positive capacity");
  names_.push_back(std::move(name));
  capacity_.push_back(capacity_gbps);
  return static_cast<int>(capacity_.size()) - 1;
}

FlowId FluidSim::add_flow(FlowSpec spec) {
  for (int r : spec.resources)
    if (r < 0 || r >= resource_count()) throw SchedulingError("flow references unknown resource");
  if (spec.bytes < 0.0 || spec.tail_ms < 0.0) throw SchedulingError("negative flow size or tail");
  const FlowId id = next_id_++;
  flows_.emplace(id, Flow{std::move(spec)});
  dirty_ = true;
  return id;
}

void FluidSim::set_managed_rate(FlowId id, double gbps, int priority) {
  auto& f = flows_.at(id);
  f.spec.managed_rate = gbps;
  f.spec.priority = priority;
  dirty_ = true;
}

void FluidSim::reroute(FlowId id, std::vector<int> resources, double tail_ms) {
  for (int r : resources)
    if (r < 0 || r >= resource_count()) throw SchedulingError("flow references unknown resource");
  auto& f = flows_.at(id);
  f.spec.resources = std::move(resources);
  f.spec.tail_ms = tail_ms;
  f.lock_until = -1.0;
  dirty_ = true;
}

double FluidSim::rate(FlowId id) {
  if (dirty_) reallocate();
  return flows_.at(id).rate;
}

std::vector<FlowId> FluidSim::active_flows() const {
  std::vector<FlowId> out;
  for (const auto& [id, f] : flows_) out.push_back(id);
  return out;
}

double FluidSim::target_bytes(const Flow& f) const {
  return f.lock_until >= 0.0 ? f.lock_until : f.spec.bytes;
}

void FluidSim::reallocate() {
  dirty_ = false;
  ++reallocations_;
  std::vector<FlowId> ids;
  std::vector<AllocInput> inputs;
  for (const auto& [id, f] : flows_) {
    if (f.tail_end >= 0.0) continue;
    ids.push_back(id);
    AllocInput in;
    in.resources = f.spec.resources;
    in.rate_cap = f.spec.rate_cap;
    in.managed_rate = f.spec.managed_rate;
    in.priority = f.spec.priority;
    in.locked_rate = (f.lock_until >= 0.0 && f.rate > 0.0) ? f.rate : -1.0;
    inputs.push_back(std::move(in));
  }
  const auto rates = allocate_rates(capacity_, inputs);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    auto& f = flows_.at(ids[k]);
    f.rate = rates[k];
    if (f.rate <= 0.0) {
      f.lock_until = -1.0;
    } else if (f.spec.batch_bytes > 0.0 && f.lock_until < 0.0) {
      const double b = f.spec.batch_bytes;
      const double next = (std::floor(f.done / b * (1.0 + kRelTol)) + 1.0) * b;
      f.lock_until = std::min(next, f.spec.bytes);
    }
  }
}

double FluidSim::next_event_time() {
  if (dirty_) reallocate();
  double t = kInf;
  for (const auto& [id, f] : flows_) {
    if (f.tail_end >= 0.0) {
      t = std::min(t, f.tail_end);
    } else if (f.done >= f.spec.bytes) {
      t = std::min(t, now_);
    } else if (f.rate > 0.0) {
      if (std::isinf(f.rate)) return now_;
      t = std::min(t, now_ + (target_bytes(f) - f.done) / (f.rate * kBytesPerMsPerGbps));
    }
  }
  return std::max(t, now_);
}

std::vector<double> FluidSim::resource_load() {
  if (dirty_) reallocate();
  std::vector<double> load(capacity_.size(), 0.0);
  for (const auto& [id, f] : flows_) {
    if (f.tail_end >= 0.0) continue;
    for (int r : f.spec.resources) load[r] += f.rate;
  }
  return load;
}

std::vector<FlowId> FluidSim::advance_to(double t) {
  if (t < now_) throw SchedulingError("fluid simulation cannot move backwards in time");
  std::vector<FlowId> completed;
  auto step = [&](double to) {
    const double dt = to - now_;
    if (dt > 0.0) {
      for (auto& [id, f] : flows_) {
        if (f.tail_end >= 0.0 || f.rate <= 0.0 || std::isinf(f.rate)) continue;
        f.done = std::min(f.spec.bytes, f.done + f.rate * kBytesPerMsPerGbps * dt);
      }
    }
    now_ = std::max(now_, to);
  };
  for (;;) {
    const double te = next_event_time();
    if (te > t) break;
    step(te);
    std::vector<FlowId> finished;
    for (auto& [id, f] : flows_) {
      if (f.tail_end < 0.0) {
        const double target = target_bytes(f);
        const bool reached = std::isinf(f.rate) || f.done >= target ||
                             target - f.done <= std::max(1.0, target) * 1e-9;
        if (!reached) continue;
        f.done = target;
        if (f.lock_until >= 0.0) {
          f.lock_until = -1.0;
          dirty_ = true;
        }
        if (f.done < f.spec.bytes) continue;
        f.tail_end = now_ + f.spec.tail_ms;
        f.rate = 0.0;
        dirty_ = true;
      }
      if (f.tail_end <= now_) finished.push_back(id);
    }
    for (FlowId id : finished) {
      flows_.erase(id);
      completed.push_back(id);
      dirty_ = true;
    }
  }
  step(t);
  return completed;
}

double pipeline_latency(double size_bytes, const std::vector<double>& hop_gbps,
                        double chunk_bytes) {
  if (hop_gbps.empty()) throw SchedulingError("pipeline_latency needs at least one hop");
  for (double b : hop_gbps)
    if (!(b > 0.0)) throw SchedulingError("pipeline hop bandwidth must be positive");
  if (size_bytes <= 0.0) return 0.0;
  if (!(chunk_bytes > 0.0)) throw SchedulingError("chunk size must be positive");
  const double chunk = std::min(chunk_bytes, size_bytes);
  const auto slowest = std::min_element(hop_gbps.begin(), hop_gbps.end());
  double t = transfer_ms(size_bytes, *slowest);
  for (auto it = hop_gbps.begin(); it != hop_gbps.end(); ++it)
    if (it != slowest) t += transfer_ms(chunk, *it);
  return t;
}

}  // namespace faastube
