// SPDX-FileCopyrightText: Copyright (c) 2026 The FaaSTube-Sim Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <numeric>

#include "faastube/pcie_sched.hpp"
#include "test_util.hpp"

using namespace faastube;
using faastube::testing::TestRng;

namespace {

double total(const std::vector<RateAssignment>& a) {
  double s = 0.0;
  for (const auto& x : a) s += x.rate_gbps;
  return s;
}

}  // namespace

TEST_SUITE("pcie_sched") {
  TEST_CASE("min_rate examples") {
    CHECK(min_rate(480 * kMB, 100, 60) == doctest::Approx(12));
    CHECK(min_rate(0, 10, 5) == 0.0);
    CHECK(min_rate(96 * kMB, 20, 12) == doctest::Approx(12));
    CHECK_THROWS_AS(min_rate(1 * kMB, 10, 10), InfeasibleRate);
  }

  TEST_CASE("partition examples") {
    const auto tight = make_demand(1, 480 * kMB, 50, 10);  // 12 GB/s, slack 10
    const auto loose = make_demand(2, 240 * kMB, 100, 60);  // 6 GB/s, slack 60
    CHECK(rate_idle(48, {tight, loose}) == doctest::Approx(30));
    auto r = partition(48, {tight, loose});
    CHECK(r[0].rate_gbps == doctest::Approx(42));
    CHECK(r[1].rate_gbps == doctest::Approx(6));
    CHECK(!r[0].slo_at_risk);

    r = partition(48, {tight});
    CHECK(r[0].rate_gbps == doctest::Approx(48));

    const auto a = make_demand(3, 900 * kMB, 40, 10);  // 30 GB/s
    const auto b = make_demand(4, 600 * kMB, 30, 10);  // 30 GB/s
    r = partition(48, {a, b});
    CHECK(r[0].rate_gbps == doctest::Approx(24));
    CHECK(r[1].rate_gbps == doctest::Approx(24));
    CHECK(r[0].slo_at_risk);
    CHECK(r[1].slo_at_risk);
    CHECK(partition(48, {}).empty());
  }

  TEST_CASE("partition conserves work and is monotone in competition") {
    TestRng rng{21};
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<RateDemand> d;
      const int n = 1 + rng.below(5);
      for (int i = 0; i < n; ++i) {
        const double slo = 10 + 90 * rng.uniform();
        const double infer = slo * 0.8 * rng.uniform();
        d.push_back(make_demand(i + 1, (1 + 300 * rng.uniform()) * kMB, slo, infer));
      }
      const double bw = 48;
      const auto r = partition(bw, d);
      CHECK(total(r) == doctest::Approx(bw));
      for (std::size_t i = 0; i < r.size(); ++i) CHECK(r[i].id == d[i].id);
      if (n < 2) continue;
      const int drop = rng.below(n);
      auto fewer = d;
      fewer.erase(fewer.begin() + drop);
      const auto r2 = partition(bw, fewer);
      for (std::size_t i = 0, k = 0; i < d.size(); ++i) {
        if (static_cast<int>(i) == drop) continue;
        // Smallest slack keeps the idle share; everyone else keeps at least Rate_least.
        CHECK(r2[k].rate_gbps >= std::min(r[i].rate_gbps, d[i].rate_least) - 1e-9);
        ++k;
      }
    }
  }

  TEST_CASE("batches") {
    const PcieSchedConfig cfg;
    CHECK(cfg.batch_bytes() == 10 * kMB);
    auto b = trigger_batches(20 * kMB, cfg);
    REQUIRE(b.size() == 2);
    CHECK(b[0].chunks + b[1].chunks == 10);
    CHECK(b[1].first_byte == 10 * kMB);
    b = trigger_batches(1 * kMB, cfg);
    REQUIRE(b.size() == 1);
    CHECK(b[0].chunks == 1);
    CHECK(b[0].bytes == 1 * kMB);
    b = trigger_batches(23 * kMB, cfg);
    REQUIRE(b.size() == 3);
    CHECK(b[2].bytes == 3 * kMB);
    CHECK(b[2].chunks == 2);
  }

  TEST_CASE("pinned memory costs") {
    CHECK(pinned_cost(100 * kMB, 0) == doctest::Approx(70));
    CHECK(pinned_cost(100 * kMB, 100 * kMB) == 0.0);
    CHECK(pinned_cost(100 * kMB, 60 * kMB) == doctest::Approx(28));
    CHECK(pageable_transfer_ms(36 * kMB, 12) == doctest::Approx(12));
    CHECK(pageable_transfer_ms(36 * kMB, 2) == doctest::Approx(18));
  }

  TEST_CASE("a warm ring never allocates beyond its capacity") {
    const PcieSchedConfig cfg;
    const double cap = default_ring_capacity(cfg, 4);
    CHECK(cap == 80 * kMB);
    for (double size : {1 * kMB, 50 * kMB, 1 * kGB, 10 * kGB}) {
      PinnedRing ring(cap);
      ring.prewarm();
      double cost = 0.0;
      for (const auto& b : trigger_batches(size, cfg)) cost += ring.stage(b.bytes);
      CHECK(cost == 0.0);
      CHECK(ring.allocated_bytes() <= cap);
    }
    PinnedRing cold(cap);
    CHECK(cold.stage(10 * kMB) == doctest::Approx(7));
    CHECK(cold.stage(10 * kMB) == 0.0);
    CHECK(cold.stage(1 * kGB) > 0.0);
    CHECK(cold.allocated_bytes() <= cap);
  }

  TEST_CASE("bw_all counts pinned rate per root") {
    CHECK(bw_all(build_preset("dgx_v100"), 0) == doctest::Approx(48));
    CHECK(bw_all(build_preset("quad_a10"), 0) == doctest::Approx(48));
  }
}
