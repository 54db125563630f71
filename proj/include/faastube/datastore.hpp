// SPDX-FileCopyrightText: Copyright (c) 2026 The FaaSTube-Sim Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include <json.hpp>

#include "faastube/common.hpp"

namespace faastube {

/// Rolling execution statistics of one function on one GPU.
class FuncHistogram {
 public:
  explicit FuncHistogram(std::size_t window = 1000) : window_(window) {}

  /// Appends one execution. `interval_ms` < 0 means "first request, no interval".
  void record(double now_ms, double interval_ms, double size_bytes, double concurrency);

  double r_window() const { return r_window_; }
  double r_size() const { return r_size_; }
  double r_con() const { return r_con_; }
  double last_request_ms() const { return last_; }
  bool empty() const { return sizes_.empty(); }
  std::size_t samples() const { return sizes_.size(); }
  /// The last request falls inside R_window of `now`.
  bool window_active(double now_ms) const;

 private:
  std::size_t window_;
  std::deque<double> intervals_, sizes_, cons_;
  double r_window_ = 0.0, r_size_ = 0.0, r_con_ = 0.0;
  double last_ = -kInf;
};

/// 99th percentile, nearest rank; the maximum when fewer than two samples.
double p99(const std::deque<double>& samples);

/// R_size x R_con, 0 for an empty history.
double reservation(const FuncHistogram& h);

/// Sum of reservations whose window is active, floored at `floor_bytes`.
double pool_target(const std::vector<const FuncHistogram*>& hists, double now_ms,
                   double floor_bytes = 300.0 * kMB);

enum class PoolMode { kAutoscale, kCacheAll, kNone };

PoolMode pool_mode_from_string(const std::string& s);
std::string to_string(PoolMode m);

struct PoolConfig {
  PoolMode mode = PoolMode::kAutoscale;
  double floor_bytes = 300.0 * kMB;
  double native_alloc_ms = 1.0;
  double physical_bytes = 32e9;
};

struct Allocation {
  std::uint64_t block = 0;
  double cost_ms = 0.0;
  bool grew = false;
};

/// GPU memory pool with power-of-two size classes (1 MB base). Blocks keep
/// the exact size they were created with; a cached block serves a request
/// only if it is in the same class and at least as large. An autoscale pool
/// holds `floor_bytes` as an arena that requests are carved from before any
/// native growth. Trimming never touches the arena; hold_floor(false) returns
/// it once nothing is carved from it.
class MemoryPool {
 public:
  explicit MemoryPool(PoolConfig cfg);

  static int size_class(double bytes);

  Allocation allocate(double bytes);
  /// Returns a block. Autoscale then trims towards `target_bytes`; the
  /// no-pool mode frees it; cache-all keeps it.
  void release(std::uint64_t block, double target_bytes = 0.0);
  /// Frees cached blocks, largest first, while the pool stays >= target.
  double trim(double target_bytes);
  /// Background growth so that `count` blocks able to serve `bytes` exist.
  void ensure_blocks(double bytes, int count);
  /// Acquires or returns the floor arena. Returning is deferred while any
  /// block is carved from it; the result says whether the arena is held.
  bool hold_floor(bool on);
  bool floor_held() const { return floor_held_; }

  double pool_bytes() const { return pool_; }
  double used_bytes() const { return used_; }
  double cached_bytes() const { return pool_ - used_; }
  std::uint64_t native_allocs() const { return native_allocs_; }
  const PoolConfig& config() const { return cfg_; }

 private:
  struct Block {
    std::uint64_t id;
    double bytes;
    int cls;
    bool in_use;
    bool arena = false;
  };

  std::uint64_t grow(double bytes, bool in_use);

  PoolConfig cfg_;
  std::vector<Block> blocks_;
  std::uint64_t next_id_ = 1;
  double pool_ = 0.0;
  double used_ = 0.0;
  double arena_free_ = 0.0;
  bool floor_held_ = false;
  std::uint64_t native_allocs_ = 0;
};

enum class ObjLoc { kGpu, kHost, kBoth };

struct StoredObject {
  DataId id = 0;
  double bytes = 0.0;
  std::int64_t queue_pos = 0;  ///< consumer's position in the request queue
  double stored_ms = 0.0;
  bool live = true;
  ObjLoc loc = ObjLoc::kGpu;
};

enum class MigrationPolicy { kQueueAware, kLru };

struct Eviction {
  DataId id = 0;
  double bytes = 0.0;
  bool dead = false;  ///< reclaimed without a transfer
};

struct MigrationPlan {
  std::vector<Eviction> evictions;
  double freed_bytes = 0.0;
  double transfer_bytes = 0.0;
  bool hard_pressure = false;  ///< could not free `pressure_bytes`
};

/// Dead GPU-resident objects first, then live ones farthest consumer first
/// (queue-aware) or oldest stored first (LRU), until `pressure_bytes` freed.
MigrationPlan migration_plan(const std::vector<StoredObject>& objects, double pressure_bytes,
                             MigrationPolicy policy = MigrationPolicy::kQueueAware);

/// Host-resident live objects to reload, nearest consumer first, stopping at
/// the first one that does not fit.
std::vector<DataId> prefetch_back(const std::vector<StoredObject>& objects, double free_bytes);

/// One step of a FIFO producer/consumer trace: produce an object of `bytes`
/// or consume the oldest unconsumed one.
struct TraceStep {
  bool produce = true;
  double bytes = 0.0;
};

struct TraceOutcome {
  double demand_reload_bytes = 0.0;  ///< reloads a consumer had to wait for
  double prefetch_bytes = 0.0;       ///< asynchronous reloads into free memory
  double migrated_bytes = 0.0;
};

/// Replays a FIFO trace against a GPU store of `capacity_bytes`. A consumer
/// whose input sits on the host reloads it on demand; with `prefetch`, host
/// objects are pulled back whenever memory frees up.
TraceOutcome simulate_fifo_trace(const std::vector<TraceStep>& trace, double capacity_bytes,
                                 MigrationPolicy policy, bool prefetch);

/// Two producers store equal outputs into a store that fits only one; their
/// consumers then run in production order.
std::vector<TraceStep> two_producer_trace(double bytes = 100.0 * kMB);

}  // namespace faastube
