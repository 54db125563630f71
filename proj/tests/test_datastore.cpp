// SPDX-FileCopyrightText: Copyright (c) 2026 The FaaSTube-Sim Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "faastube/datastore.hpp"
#include "test_util.hpp"

using namespace faastube;
using faastube::testing::TestRng;

namespace {

FuncHistogram with_sizes(std::initializer_list<double> mb, double concurrency = 1.0) {
  FuncHistogram h;
  double t = 0.0;
  bool first = true;
  for (double s : mb) {
    h.record(t, first ? -1.0 : 10.0, s * kMB, concurrency);
    t += 10.0;
    first = false;
  }
  return h;
}

StoredObject obj(DataId id, double mb, std::int64_t pos, double stored, bool live = true) {
  StoredObject o;
  o.id = id;
  o.bytes = mb * kMB;
  o.queue_pos = pos;
  o.stored_ms = stored;
  o.live = live;
  return o;
}

PoolConfig pool(PoolMode mode, double floor_mb = 0.0) {
  PoolConfig c;
  c.mode = mode;
  c.floor_bytes = floor_mb * kMB;
  return c;
}

}  // namespace

TEST_SUITE("datastore") {
  TEST_CASE("histogram statistics") {
    CHECK(with_sizes({100, 120, 110, 130}).r_size() == 130 * kMB);
    CHECK(with_sizes({50}).r_size() == 50 * kMB);
    CHECK(with_sizes({10, 20, 30, 40, 50}, 2.0).r_con() == 2.0);
    const auto h = with_sizes({10, 10, 10});
    CHECK(h.r_window() == 10.0);
    CHECK(h.window_active(25.0));
    CHECK(!h.window_active(30.5));
  }

  TEST_CASE("reservations and pool target") {
    CHECK(reservation(with_sizes({100, 120, 110, 130}, 2.0)) == 260 * kMB);
    CHECK(reservation(with_sizes({70})) == 70 * kMB);
    CHECK(reservation(FuncHistogram{}) == 0.0);

    CHECK(pool_target({}, 0.0) == 300 * kMB);
    const auto a = with_sizes({130, 130}, 2.0);
    const auto b = with_sizes({260, 260}, 2.0);
    CHECK(pool_target({&a}, 10.0) == 300 * kMB);
    CHECK(pool_target({&a, &b}, 10.0) == 780 * kMB);
    CHECK(pool_target({&a, &b}, 100.0) == 300 * kMB);
    CHECK(pool_target({&a, &b}, 100.0, 0.0) == 0.0);
  }

  TEST_CASE("pool allocation costs") {
    MemoryPool p(pool(PoolMode::kAutoscale));
    const auto first = p.allocate(100 * kMB);
    CHECK(first.grew);
    CHECK(first.cost_ms == p.config().native_alloc_ms);
    p.release(first.block, 200 * kMB);
    const auto reuse = p.allocate(90 * kMB);
    CHECK(reuse.cost_ms == 0.0);
    p.release(reuse.block, 200 * kMB);
    const auto bigger = p.allocate(120 * kMB);
    CHECK(bigger.grew);
    CHECK(p.native_allocs() == 2);
    CHECK_THROWS_AS(p.release(12345), MemoryError);
    CHECK(MemoryPool::size_class(1 * kMB) == 0);
    CHECK(MemoryPool::size_class(100 * kMB) == MemoryPool::size_class(120 * kMB));
  }

  TEST_CASE("the floor arena serves requests for free and never trims") {
    MemoryPool p(pool(PoolMode::kAutoscale, 300));
    CHECK(p.floor_held());
    CHECK(p.pool_bytes() == 300 * kMB);
    const auto a = p.allocate(200 * kMB);
    CHECK(a.cost_ms == 0.0);
    CHECK(!a.grew);
    const auto b = p.allocate(200 * kMB);
    CHECK(b.grew);
    p.release(b.block, 0.0);
    CHECK(p.pool_bytes() == 300 * kMB);
    // Returning the floor waits for the carved block.
    CHECK(p.hold_floor(false));
    p.release(a.block, 0.0);
    CHECK(!p.hold_floor(false));
    CHECK(p.pool_bytes() == 0.0);
    CHECK(p.hold_floor(true));
    CHECK(p.pool_bytes() == 300 * kMB);

    PoolConfig huge = pool(PoolMode::kAutoscale, 64000);
    CHECK_THROWS_AS(MemoryPool{huge}, MemoryError);
  }

  TEST_CASE("cache-all keeps and no-pool frees") {
    MemoryPool keep(pool(PoolMode::kCacheAll, 300));
    CHECK(!keep.floor_held());
    const auto a = keep.allocate(64 * kMB);
    keep.release(a.block);
    CHECK(keep.pool_bytes() == 64 * kMB);
    MemoryPool none(pool(PoolMode::kNone));
    const auto b = none.allocate(64 * kMB);
    none.release(b.block);
    CHECK(none.pool_bytes() == 0.0);
    CHECK(none.allocate(64 * kMB).grew);
  }

  TEST_CASE("pool never exceeds physical memory and keeps the floor") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      TestRng rng{seed};
      PoolConfig c = pool(PoolMode::kAutoscale, 300);
      c.physical_bytes = 4 * kGB;
      MemoryPool p(c);
      std::vector<std::uint64_t> live;
      for (int step = 0; step < 200; ++step) {
        if (!live.empty() && rng.uniform() < 0.5) {
          const int i = rng.below(static_cast<int>(live.size()));
          p.release(live[i], rng.uniform() * kGB);
          live.erase(live.begin() + i);
        } else {
          try {
            live.push_back(p.allocate((1 + rng.below(256)) * kMB).block);
          } catch (const MemoryError&) {
          }
        }
        CHECK(p.pool_bytes() <= c.physical_bytes + 1.0);
        CHECK(p.pool_bytes() >= c.floor_bytes - 1.0);
        CHECK(p.used_bytes() <= p.pool_bytes() + 1.0);
      }
    }
  }

  TEST_CASE("queue-aware eviction keeps the next consumer's input") {
    const std::vector<StoredObject> objs = {obj(1, 100, 0, 1.0), obj(2, 100, 1, 2.0)};
    auto plan = migration_plan(objs, 100 * kMB);
    REQUIRE(plan.evictions.size() == 1);
    CHECK(plan.evictions[0].id == 2);
    plan = migration_plan(objs, 100 * kMB, MigrationPolicy::kLru);
    REQUIRE(plan.evictions.size() == 1);
    CHECK(plan.evictions[0].id == 1);
  }

  TEST_CASE("dead objects go first and cost nothing") {
    const std::vector<StoredObject> dead = {obj(1, 50, 0, 0, false), obj(2, 50, 1, 0, false)};
    auto plan = migration_plan(dead, 100 * kMB);
    CHECK(plan.transfer_bytes == 0.0);
    CHECK(plan.freed_bytes == 100 * kMB);
    plan = migration_plan(dead, 200 * kMB);
    CHECK(plan.hard_pressure);
    CHECK(migration_plan(dead, 0.0).evictions.empty());
  }

  TEST_CASE("prefetch reloads nearest consumer first") {
    auto a = obj(1, 80, 5, 0), b = obj(2, 80, 2, 0);
    a.loc = b.loc = ObjLoc::kHost;
    CHECK(prefetch_back({a, b}, 100 * kMB) == std::vector<DataId>{2});
    CHECK(prefetch_back({a, b}, 200 * kMB) == std::vector<DataId>{2, 1});
    CHECK(prefetch_back({obj(3, 10, 0, 0)}, 100 * kMB).empty());
  }

  TEST_CASE("two-producer trace favours queue-aware migration") {
    const auto trace = two_producer_trace();
    const auto qa = simulate_fifo_trace(trace, 100 * kMB, MigrationPolicy::kQueueAware, false);
    const auto lru = simulate_fifo_trace(trace, 100 * kMB, MigrationPolicy::kLru, false);
    CHECK(qa.demand_reload_bytes < lru.demand_reload_bytes);
  }
}
