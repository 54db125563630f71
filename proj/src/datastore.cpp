// SPDX-FileCopyrightText: Copyright (c) 2026 The FaaSTube-Sim Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "faastube/datastore.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "faastube/metrics.hpp"

namespace faastube {

namespace {

constexpr double kByteEps = 1e-6;

void push_ring(std::deque<double>& ring, double v, std::size_t window) {
  ring.push_back(v);
  while (ring.size() > window) ring.pop_front();
}

}  // namespace

// --- histograms ---------------------------------------------------------------

double p99(const std::deque<double>& samples) {
  if (samples.empty()) return 0.0;
  if (samples.size() < 2) return samples.front();
  return percentile(std::vector<double>(samples.begin(), samples.end()), 99.0);
}

void FuncHistogram::record(double now_ms, double interval_ms, double size_bytes,
                           double concurrency) {
  if (size_bytes < 0.0 || concurrency < 0.0) throw Error("histogram samples must be >= 0");
  if (interval_ms >= 0.0) push_ring(intervals_, interval_ms, window_);
  push_ring(sizes_, size_bytes, window_);
  push_ring(cons_, concurrency, window_);
  r_window_ = p99(intervals_);
  r_size_ = p99(sizes_);
  r_con_ = p99(cons_);
  last_ = now_ms;
}

bool FuncHistogram::window_active(double now_ms) const {
  return !empty() && now_ms - last_ <= r_window_;
}

double reservation(const FuncHistogram& h) { return h.empty() ? 0.0 : h.r_size() * h.r_con(); }

double pool_target(const std::vector<const FuncHistogram*>& hists, double now_ms,
                   double floor_bytes) {
  double sum = 0.0;
  for (const auto* h : hists)
    if (h->window_active(now_ms)) sum += reservation(*h);
  return std::max(sum, floor_bytes);
}

PoolMode pool_mode_from_string(const std::string& s) {
  if (s == "autoscale") return PoolMode::kAutoscale;
  if (s == "cache_all") return PoolMode::kCacheAll;
  if (s == "none") return PoolMode::kNone;
  throw ConfigError("unknown pool mode '" + s + "'");
}

std::string to_string(PoolMode m) {
  switch (m) {
    case PoolMode::kAutoscale: return "autoscale";
    case PoolMode::kCacheAll: return "cache_all";
    case PoolMode::kNone: return "none";
  }
  return "?";
}

// --- MemoryPool ---------------------------------------------------------------

MemoryPool::MemoryPool(PoolConfig cfg) : cfg_(cfg) {
  if (cfg_.floor_bytes > cfg_.physical_bytes) throw MemoryError("pool floor exceeds physical GPU memory");
  hold_floor(true);
}

bool MemoryPool::hold_floor(bool on) {
  if (cfg_.mode != PoolMode::kAutoscale || !(cfg_.floor_bytes > 0.0)) return false;
  if (on && !floor_held_) {
    if (pool_ + cfg_.floor_bytes > cfg_.physical_bytes + kByteEps)
      throw MemoryError("pool floor exceeds physical GPU memory");
    pool_ += cfg_.floor_bytes;
    arena_free_ = cfg_.floor_bytes;
    floor_held_ = true;
    ++native_allocs_;
  } else if (!on && floor_held_ && arena_free_ + kByteEps >= cfg_.floor_bytes) {
    pool_ -= cfg_.floor_bytes;
    arena_free_ = 0.0;
    floor_held_ = false;
  }
  return floor_held_;
}

int MemoryPool::size_class(double bytes) {
  if (bytes <= kMB) return 0;
  return static_cast<int>(std::ceil(std::log2(bytes / kMB) - 1e-12));
}

std::uint64_t MemoryPool::grow(double bytes, bool in_use) {
  if (pool_ + bytes > cfg_.physical_bytes + kByteEps)
    throw MemoryError("pool growth of " + std::to_string(bytes / kMB) +
                      " MB exceeds physical GPU memory");
  const auto id = next_id_++;
  blocks_.push_back({id, bytes, size_class(bytes), in_use});
  pool_ += bytes;
  if (in_use) used_ += bytes;
  ++native_allocs_;
  return id;
}

Allocation MemoryPool::allocate(double bytes) {
  if (!(bytes > 0.0)) throw MemoryError("allocation size must be positive");
  if (cfg_.mode != PoolMode::kNone) {
    const int cls = size_class(bytes);
    for (auto& b : blocks_) {
      if (b.in_use || b.cls != cls || b.bytes + kByteEps < bytes) continue;
      b.in_use = true;
      used_ += b.bytes;
      return {b.id, 0.0, false};
    }
    if (arena_free_ + kByteEps >= bytes) {
      const auto id = next_id_++;
      blocks_.push_back({id, bytes, size_class(bytes), true, true});
      arena_free_ = std::max(0.0, arena_free_ - bytes);
      used_ += bytes;
      return {id, 0.0, false};
    }
  }
  return {grow(bytes, true), cfg_.native_alloc_ms, true};
}

void MemoryPool::release(std::uint64_t block, double target_bytes) {
  auto it = std::find_if(blocks_.begin(), blocks_.end(),
                         [&](const Block& b) { return b.id == block; });
  if (it == blocks_.end() || !it->in_use) throw MemoryError("release of a block that is not in use");
  it->in_use = false;
  used_ -= it->bytes;
  if (it->arena) {
    arena_free_ += it->bytes;
    blocks_.erase(it);
  } else if (cfg_.mode == PoolMode::kNone) {
    pool_ -= it->bytes;
    blocks_.erase(it);
    return;
  }
  if (cfg_.mode == PoolMode::kAutoscale) trim(target_bytes);
}

double MemoryPool::trim(double target_bytes) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < blocks_.size(); ++i)
    if (!blocks_[i].in_use && !blocks_[i].arena) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return blocks_[a].bytes > blocks_[b].bytes;
  });
  std::vector<std::uint64_t> drop;
  double freed = 0.0;
  for (auto i : order) {
    if (pool_ - freed - blocks_[i].bytes + kByteEps < target_bytes) continue;
    freed += blocks_[i].bytes;
    drop.push_back(blocks_[i].id);
  }
  std::erase_if(blocks_, [&](const Block& b) {
    return std::find(drop.begin(), drop.end(), b.id) != drop.end();
  });
  pool_ -= freed;
  return freed;
}

void MemoryPool::ensure_blocks(double bytes, int count) {
  if (cfg_.mode != PoolMode::kAutoscale || !(bytes > 0.0)) return;
  const int cls = size_class(bytes);
  int have = 0;
  for (const auto& b : blocks_)
    if (b.cls == cls && b.bytes + kByteEps >= bytes) ++have;
  for (; have < count; ++have) {
    if (pool_ + bytes > cfg_.physical_bytes) break;
    grow(bytes, false);
  }
}

// --- migration ----------------------------------------------------------------

MigrationPlan migration_plan(const std::vector<StoredObject>& objects, double pressure_bytes,
                             MigrationPolicy policy) {
  MigrationPlan plan;
  if (!(pressure_bytes > 0.0)) return plan;
  std::vector<const StoredObject*> dead, live;
  for (const auto& o : objects) {
    if (o.loc == ObjLoc::kHost) continue;
    (o.live ? live : dead).push_back(&o);
  }
  std::stable_sort(dead.begin(), dead.end(), [](auto* a, auto* b) { return a->id < b->id; });
  std::stable_sort(live.begin(), live.end(), [&](auto* a, auto* b) {
    if (policy == MigrationPolicy::kQueueAware) {
      if (a->queue_pos != b->queue_pos) return a->queue_pos > b->queue_pos;
      return a->id > b->id;
    }
    if (a->stored_ms != b->stored_ms) return a->stored_ms < b->stored_ms;
    return a->id < b->id;
  });
  for (auto* o : dead) {
    if (plan.freed_bytes + kByteEps >= pressure_bytes) break;
    plan.evictions.push_back({o->id, o->bytes, true});
    plan.freed_bytes += o->bytes;
  }
  for (auto* o : live) {
    if (plan.freed_bytes + kByteEps >= pressure_bytes) break;
    plan.evictions.push_back({o->id, o->bytes, false});
    plan.freed_bytes += o->bytes;
    if (o->loc == ObjLoc::kGpu) plan.transfer_bytes += o->bytes;
  }
  plan.hard_pressure = plan.freed_bytes + kByteEps < pressure_bytes;
  return plan;
}

std::vector<DataId> prefetch_back(const std::vector<StoredObject>& objects, double free_bytes) {
  std::vector<const StoredObject*> host;
  for (const auto& o : objects)
    if (o.live && o.loc == ObjLoc::kHost) host.push_back(&o);
  std::stable_sort(host.begin(), host.end(), [](auto* a, auto* b) {
    return a->queue_pos != b->queue_pos ? a->queue_pos < b->queue_pos : a->id < b->id;
  });
  std::vector<DataId> out;
  for (auto* o : host) {
    if (o->bytes > free_bytes + kByteEps) break;
    free_bytes -= o->bytes;
    out.push_back(o->id);
  }
  return out;
}

TraceOutcome simulate_fifo_trace(const std::vector<TraceStep>& trace, double capacity_bytes,
                                 MigrationPolicy policy, bool prefetch) {
  TraceOutcome out;
  std::map<DataId, StoredObject> pending;  // produced, not yet consumed
  double on_gpu = 0.0;
  DataId next_id = 0;
  double clock = 0.0;

  auto resident = [&](DataId except) {
    std::vector<StoredObject> v;
    for (const auto& [id, o] : pending)
      if (id != except && o.loc != ObjLoc::kHost) v.push_back(o);
    return v;
  };
  auto relieve = [&](double pressure, DataId except) {
    if (pressure <= kByteEps) return;
    const auto plan = migration_plan(resident(except), pressure, policy);
    for (const auto& e : plan.evictions) {
      pending.at(e.id).loc = ObjLoc::kHost;
      on_gpu -= e.bytes;
      out.migrated_bytes += e.bytes;
    }
  };

  for (const auto& step : trace) {
    clock += 1.0;
    if (step.produce) {
      const DataId id = next_id++;
      pending[id] = {id, step.bytes, static_cast<std::int64_t>(id), clock, true, ObjLoc::kGpu};
      on_gpu += step.bytes;
      relieve(on_gpu - capacity_bytes, ~DataId{0});
      continue;
    }
    if (pending.empty()) continue;
    auto it = pending.begin();
    StoredObject obj = it->second;
    if (obj.loc == ObjLoc::kHost) {
      out.demand_reload_bytes += obj.bytes;
      relieve(on_gpu + obj.bytes - capacity_bytes, obj.id);
    } else {
      on_gpu -= obj.bytes;
    }
    pending.erase(it);
    if (prefetch) {
      std::vector<StoredObject> all;
      for (const auto& [id, o] : pending) all.push_back(o);
      for (DataId id : prefetch_back(all, capacity_bytes - on_gpu)) {
        auto& o = pending.at(id);
        o.loc = ObjLoc::kGpu;
        o.stored_ms = clock;
        on_gpu += o.bytes;
        out.prefetch_bytes += o.bytes;
      }
    }
  }
  return out;
}

std::vector<TraceStep> two_producer_trace(double bytes) {
  return {{true, bytes}, {true, bytes}, {false, 0.0}, {false, 0.0}};
}

}  // namespace faastube
