// SPDX-FileCopyrightText: Copyright (c) 2026 The FaaSTube-Sim Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <functional>
#include <set>

#include "faastube/workflow.hpp"

using namespace faastube;
using nlohmann::json;

namespace {

std::vector<int> busy(int gpus, std::initializer_list<int> taken) {
  std::vector<int> occ(gpus, 0);
  for (int g : taken) occ[g] = 1;
  return occ;
}

// Fewest cross-node edges over every capacity-respecting assignment.
int best_cut(const Workflow& w, const std::vector<int>& free_per_node) {
  const int n = static_cast<int>(w.functions.size());
  const int k = static_cast<int>(free_per_node.size());
  std::map<std::string, NodeId> a;
  std::vector<int> left = free_per_node;
  int best = 1 << 30;
  std::function<void(int)> go = [&](int i) {
    if (i == n) {
      best = std::min(best, cross_node_edges(w, a));
      return;
    }
    const bool g = w.functions[i].kind == FuncKind::kGFunc;
    for (int node = 0; node < k; ++node) {
      if (g && left[node] == 0) continue;
      left[node] -= g;
      a[w.functions[i].id] = node;
      go(i + 1);
      left[node] += g;
    }
  };
  go(0);
  return best;
}

}  // namespace

TEST_SUITE("workflow") {
  TEST_CASE("presets carry their patterns and validate") {
    const std::map<std::string, Pattern> want = {
        {"traffic", Pattern::kCondition}, {"driving", Pattern::kSequence},
        {"video", Pattern::kFanIn},       {"image", Pattern::kFanOut},
        {"social", Pattern::kCondition},  {"yelp", Pattern::kSequence}};
    CHECK(preset_workflow_names().size() == want.size());
    for (const auto& name : preset_workflow_names()) {
      const auto w = preset_workflow(name);
      CHECK(w.pattern == want.at(name));
      CHECK(validate_dag(w).empty());
      CHECK(w.topo_order().size() == w.functions.size());
    }
    CHECK_THROWS_AS(preset_workflow("nope"), WorkflowError);
  }

  TEST_CASE("overrides change only the listed fields") {
    const auto base = preset_workflow("yelp");
    const auto w = preset_workflow("yelp", {{"functions", {{"bert_2", {{"compute_ms", 20}}}}}});
    CHECK(w.function("bert_2").compute_ms == 20.0);
    CHECK(w.function("bert_1").compute_ms == base.function("bert_1").compute_ms);
    CHECK_THROWS_AS(preset_workflow("yelp", {{"functions", {{"ghost", json::object()}}}}), WorkflowError);
  }

  TEST_CASE("validate_dag finds a cycle and an undeclared function") {
    auto w = preset_workflow("driving");
    w.edges.push_back({"yolo_seg", "denoise", 1.0});
    CHECK(validate_dag(w).size() == 1);
    auto u = preset_workflow("driving");
    u.edges.push_back({"denoise", "ghost", 1.0});
    CHECK(validate_dag(u).size() == 1);
  }

  TEST_CASE("json round trip") {
    for (const auto& name : preset_workflow_names()) {
      const auto w = preset_workflow(name);
      CHECK(to_json(workflow_from_json(to_json(w))) == to_json(w));
    }
  }

  TEST_CASE("yelp lands on a fastest pair") {
    const auto v100 = build_preset("dgx_v100");
    const auto p = place(preset_workflow("yelp"), v100, {});
    const auto a = p.at("bert_1").gpu, b = p.at("bert_2").gpu;
    CHECK(a != b);
    CHECK(pair_bandwidth(v100, a, b) == 48.0);

    const auto q = place(preset_workflow("yelp"), build_preset("dgx_a100"), {});
    CHECK(q.at("bert_1").gpu == 0);
    CHECK(q.at("bert_2").gpu == 1);
  }

  TEST_CASE("video on a fragmented server falls back to PCIe for some edge") {
    const auto t = build_preset("dgx_v100");
    const auto w = preset_workflow("video");
    const auto p = place(w, t, busy(8, {1, 3, 5, 7}));
    int slow = 0;
    for (const auto& e : w.edges) {
      const auto a = p.at(e.from), b = p.at(e.to);
      if (a.on_host() || b.on_host()) continue;
      CHECK(a.gpu % 2 == 0);
      CHECK(b.gpu % 2 == 0);
      if (!t.has_nvlink(a.gpu, b.gpu)) ++slow;
    }
    CHECK(slow >= 1);
  }

  TEST_CASE("placement properties") {
    const auto t = build_preset("dgx_v100");
    for (const auto& name : preset_workflow_names()) {
      const auto w = preset_workflow(name);
      const auto p = place(w, t, {});
      std::set<GpuId> gpus;
      for (const auto& f : w.functions) {
        const auto& loc = p.at(f.id);
        CHECK(loc.on_host() == (f.kind == FuncKind::kCFunc));
        if (!loc.on_host()) CHECK(gpus.insert(loc.gpu).second);
      }
      const auto again = place(w, t, {});
      CHECK(again.mapping == p.mapping);
    }
    CHECK_THROWS_AS(place(preset_workflow("video"), t, busy(8, {0, 1, 2, 3, 4, 5})), WorkflowError);
    CHECK_THROWS_AS(place(preset_workflow("yelp"), t, {}, {0, -1}), WorkflowError);
  }

  TEST_CASE("partition across nodes") {
    const auto server = build_preset("dgx_v100");
    const auto one = make_cluster(server, 1);
    CHECK(cross_node_edges(preset_workflow("traffic"),
                           partition_across_nodes(preset_workflow("traffic"), one, {})) == 0);

    const auto two = make_cluster(server, 2);
    std::vector<int> occ(16, 1);
    occ[0] = occ[8] = 0;
    const auto yelp = preset_workflow("yelp");
    CHECK(cross_node_edges(yelp, partition_across_nodes(yelp, two, occ)) == 1);

    const auto four = make_cluster(server, 4);
    std::vector<int> occ4(32, 1);
    for (int n = 0; n < 4; ++n) occ4[8 * n] = occ4[8 * n + 1] = occ4[8 * n + 2] = 0;
    for (const auto& name : preset_workflow_names()) {
      const auto w = preset_workflow(name);
      const int got = cross_node_edges(w, partition_across_nodes(w, four, occ4));
      const int opt = best_cut(w, {3, 3, 3, 3});
      CHECK(got >= opt);
      if (name == "traffic") {
        CHECK(got == opt);
        CHECK(got <= 1);
      }
      const auto p = place(w, four, occ4);
      std::set<GpuId> gpus;
      for (const auto& f : w.functions)
        if (!p.at(f.id).on_host()) CHECK(occ4[p.at(f.id).gpu] == 0);
    }
  }
}
