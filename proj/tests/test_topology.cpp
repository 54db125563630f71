// SPDX-FileCopyrightText: Copyright (c) 2026 The FaaSTube-Sim Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "faastube/topology.hpp"
#include "test_util.hpp"

using namespace faastube;
using faastube::testing::TestRng;

TEST_SUITE("topology") {
  TEST_CASE("dgx_v100 cube mesh statistics") {
    const auto t = build_preset("dgx_v100");
    CHECK(t.gpu_count == 8);
    CHECK(t.root_count() == 4);
    for (int r = 0; r < 4; ++r) CHECK(t.group(r).gpus.size() == 2);
    int full = 0, half = 0, none = 0;
    double max_pair = 0.0;
    for (int u = 0; u < 8; ++u)
      for (int v = u + 1; v < 8; ++v) max_pair = std::max(max_pair, t.nvlink_capacity(u, v));
    for (int u = 0; u < 8; ++u)
      for (int v = u + 1; v < 8; ++v) {
        const double c = t.nvlink_capacity(u, v);
        if (c == 0.0) ++none;
        else if (c == max_pair) ++full;
        else if (c == max_pair / 2) ++half;
      }
    CHECK(full == 8);
    CHECK(half == 8);
    CHECK(none == 12);
    for (int g = 0; g < 8; ++g) CHECK(t.nvlink_degree(g) == 6);
  }

  TEST_CASE("pair bandwidth examples") {
    const auto t = build_preset("dgx_v100");
    bool seen48 = false, seen24 = false, seen79 = false;
    for (int u = 0; u < 8; ++u)
      for (int v = 0; v < 8; ++v) {
        if (u == v) continue;
        const double b = pair_bandwidth(t, u, v);
        seen48 |= b == 48.0;
        seen24 |= b == 24.0;
        seen79 |= b == 7.9;
        CHECK((b == 48.0 || b == 24.0 || b == 7.9));
      }
    CHECK(seen48);
    CHECK(seen24);
    CHECK(seen79);
    CHECK_THROWS_AS(pair_bandwidth(t, 0, 8), TopologyError);
  }

  TEST_CASE("pair bandwidth is symmetric on every preset") {
    for (const auto& name : preset_topology_names()) {
      const auto t = build_preset(name);
      for (int u = 0; u < t.gpu_count; ++u)
        for (int v = 0; v < t.gpu_count; ++v)
          if (u != v) CHECK(pair_bandwidth(t, u, v) == pair_bandwidth(t, v, u));
    }
  }

  TEST_CASE("dgx_a100 and quad_a10 shapes") {
    const auto a = build_preset("dgx_a100");
    CHECK(a.gpu_count == 8);
    const double b01 = pair_bandwidth(a, 0, 1);
    CHECK(b01 > 0.0);
    for (int u = 0; u < 8; ++u)
      for (int v = 0; v < 8; ++v)
        if (u != v) CHECK(pair_bandwidth(a, u, v) == b01);
    const auto q = build_preset("quad_a10");
    CHECK(q.gpu_count == 4);
    CHECK(q.root_count() == 4);
    for (int u = 0; u < 4; ++u) CHECK(q.nvlink_degree(u) == 0);
    CHECK(pair_bandwidth(q, 0, 3) == q.params.pcie_p2p_gbps);
    CHECK_THROWS_AS(build_preset("dgx_h100"), TopologyError);
  }

  TEST_CASE("validate reports each violation") {
    for (const auto& name : preset_topology_names()) CHECK(validate(build_preset(name)).empty());
    auto t = build_preset("dgx_v100");
    t.links.push_back({LinkKind::kNvLink, Endpoint::gpu(0), Endpoint::gpu(9), 24.0, 1});
    CHECK(validate(t).size() == 1);
    auto u = build_preset("dgx_v100");
    u.pcie_groups[1].gpus.push_back(0);
    CHECK(validate(u).size() == 1);
  }

  TEST_CASE("json round trip keeps pair bandwidths") {
    for (const auto& name : preset_topology_names()) {
      const auto t = build_preset(name);
      const auto back = topology_from_json(to_json(t));
      REQUIRE(back.gpu_count == t.gpu_count);
      for (int u = 0; u < t.gpu_count; ++u)
        for (int v = 0; v < t.gpu_count; ++v)
          if (u != v) CHECK(pair_bandwidth(back, u, v) == pair_bandwidth(t, u, v));
    }
    CHECK_THROWS_AS(topology_from_json(nlohmann::json{{"gpus", "eight"}}), Error);
  }

  TEST_CASE("clusters replicate the server") {
    const auto c = make_cluster(build_preset("dgx_v100"), 2);
    CHECK(c.gpu_count == 16);
    CHECK(c.nodes.size() == 2);
    CHECK(c.node_of(9) == 1);
    CHECK(c.network_bandwidth(0, 1) == c.params.network_gbps);
    CHECK(c.nvlink_capacity(0, 9) == 0.0);
    CHECK(validate(c).empty());
  }

  TEST_CASE("fresh matrix equals capacity") {
    const auto t = build_preset("dgx_v100");
    const auto m = snapshot_matrix(t);
    int zero = 0;
    for (int u = 0; u < 8; ++u)
      for (int v = 0; v < 8; ++v) {
        if (u == v) continue;
        CHECK(m.residual(u, v) == m.capacity(u, v));
        CHECK(m.capacity(u, v) == t.nvlink_capacity(u, v));
        if (m.residual(u, v) == 0.0) ++zero;
      }
    CHECK(zero == 24);  // 12 unconnected pairs, both directions
    const auto a = snapshot_matrix(build_preset("dgx_a100"));
    for (int u = 1; u < 8; ++u) CHECK(a.residual(0, u) == a.residual(0, 1));
  }

  TEST_CASE("hold then release restores the snapshot") {
    const auto t = build_preset("dgx_v100");
    const auto fresh = snapshot_matrix(t);
    auto m = fresh;
    m.hold(7, {0, 1}, 10.0);
    CHECK(m.residual(0, 1) == doctest::Approx(m.capacity(0, 1) - 10.0));
    CHECK(!(m == fresh));
    m.release(7);
    CHECK(m == fresh);
    CHECK_THROWS_AS(m.release(7), SchedulingError);
    CHECK_THROWS_AS(m.hold(1, {0, 1}, 1000.0), SchedulingError);
  }

  TEST_CASE("residual stays within [0, capacity] under random holds") {
    const auto t = build_preset("dgx_v100");
    const auto fresh = snapshot_matrix(t);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      TestRng rng{seed};
      auto m = fresh;
      std::vector<OwnerId> live;
      for (int step = 0; step < 60; ++step) {
        if (!live.empty() && rng.uniform() < 0.4) {
          const int i = rng.below(static_cast<int>(live.size()));
          m.release(live[i]);
          live.erase(live.begin() + i);
        } else {
          const int u = rng.below(8);
          const auto nb = t.nvlink_neighbors(u);
          const int v = nb[rng.below(static_cast<int>(nb.size()))];
          const double room = std::min({m.residual(u, v), m.egress_budget(u), m.ingress_budget(v)});
          if (room <= 1e-9) continue;
          const OwnerId owner = 100 + step;
          m.hold(owner, {u, v}, room * (0.1 + 0.9 * rng.uniform()));
          live.push_back(owner);
        }
        for (int u = 0; u < 8; ++u)
          for (int v = 0; v < 8; ++v) {
            if (u == v) continue;
            CHECK(m.residual(u, v) >= -1e-9);
            CHECK(m.residual(u, v) <= m.capacity(u, v) + 1e-9);
          }
      }
      for (auto o : live) m.release(o);
      CHECK(m == fresh);
    }
  }
}
