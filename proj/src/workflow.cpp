// SPDX-FileCopyrightText: Copyright (c) 2026 The FaaSTube-Sim Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "faastube/workflow.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <tuple>

namespace faastube {

std::string_view to_string(FuncKind k) { return k == FuncKind::kGFunc ? "gFunc" : "cFunc"; }

std::string_view to_string(Pattern p) {
  switch (p) {
    case Pattern::kSequence: return "sequence";
    case Pattern::kCondition: return "condition";
    case Pattern::kFanIn: return "fan-in";
    case Pattern::kFanOut: return "fan-out";
  }
  return "?";
}

Pattern pattern_from_string(std::string_view s) {
  if (s == "sequence") return Pattern::kSequence;
  if (s == "condition") return Pattern::kCondition;
  if (s == "fan-in") return Pattern::kFanIn;
  if (s == "fan-out") return Pattern::kFanOut;
  throw WorkflowError("unknown workflow pattern '" + std::string(s) + "'");
}

namespace {

FuncKind kind_from_string(std::string_view s) {
  if (s == "gFunc") return FuncKind::kGFunc;
  if (s == "cFunc") return FuncKind::kCFunc;
  throw WorkflowError("unknown function kind '" + std::string(s) + "'");
}

FunctionSpec gfunc(std::string id, double ms) { return {std::move(id), FuncKind::kGFunc, ms}; }
FunctionSpec cfunc(std::string id, double ms) { return {std::move(id), FuncKind::kCFunc, ms}; }

EdgeSpec edge(std::string a, std::string b, double mb, double p = 1.0, bool per_object = false) {
  return {std::move(a), std::move(b), mb * kMB, per_object, p};
}

}  // namespace

// --- Workflow -----------------------------------------------------------------

int Workflow::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < functions.size(); ++i)
    if (functions[i].id == id) return static_cast<int>(i);
  return -1;
}

const FunctionSpec& Workflow::function(std::string_view id) const {
  const int i = index_of(id);
  if (i < 0) throw WorkflowError("workflow '" + name + "' has no function '" + std::string(id) + "'");
  return functions[i];
}

std::vector<int> Workflow::predecessors(int f) const {
  std::vector<int> out;
  for (std::size_t e = 0; e < edges.size(); ++e)
    if (edges[e].to == functions.at(f).id) out.push_back(static_cast<int>(e));
  return out;
}

std::vector<int> Workflow::successors(int f) const {
  std::vector<int> out;
  for (std::size_t e = 0; e < edges.size(); ++e)
    if (edges[e].from == functions.at(f).id) out.push_back(static_cast<int>(e));
  return out;
}

std::vector<int> Workflow::topo_order() const {
  const int n = static_cast<int>(functions.size());
  std::vector<int> indeg(n, 0);
  for (const auto& e : edges) {
    const int to = index_of(e.to);
    if (to >= 0 && index_of(e.from) >= 0) ++indeg[to];
  }
  std::vector<int> order;
  std::vector<bool> done(n, false);
  // Smallest declared index first keeps the order stable.
  while (static_cast<int>(order.size()) < n) {
    int pick = -1;
    for (int i = 0; i < n && pick < 0; ++i)
      if (!done[i] && indeg[i] == 0) pick = i;
    if (pick < 0) throw WorkflowError("workflow '" + name + "' contains a cycle");
    done[pick] = true;
    order.push_back(pick);
    for (int e : successors(pick)) {
      const int to = index_of(edges[e].to);
      if (to >= 0) --indeg[to];
    }
  }
  return order;
}

double Workflow::expected_bytes(const EdgeSpec& e) const {
  const double objects = e.per_object ? 0.5 * (objects_min + objects_max) : 1.0;
  return e.bytes * objects * e.probability;
}

int Workflow::gfunc_count() const {
  return static_cast<int>(std::count_if(functions.begin(), functions.end(), [](const auto& f) {
    return f.kind == FuncKind::kGFunc;
  }));
}

// --- presets ------------------------------------------------------------------

std::vector<std::string> preset_workflow_names() {
  return {"traffic", "driving", "video", "image", "social", "yelp"};
}

Workflow preset_workflow(std::string_view name, const nlohmann::json& overrides) {
  Workflow w;
  w.name = std::string(name);
  if (name == "traffic") {
    w.pattern = Pattern::kCondition;
    w.functions = {cfunc("decode", 8), gfunc("prepost", 3), gfunc("yolo_det", 12),
                   gfunc("resnet_ped", 6), gfunc("resnet_veh", 6)};
    w.edges = {edge("decode", "prepost", 128), edge("prepost", "yolo_det", 128),
               edge("yolo_det", "resnet_ped", 4, 0.8, true),
               edge("yolo_det", "resnet_veh", 4, 0.6, true)};
    w.objects_min = 1;
    w.objects_max = 8;
  } else if (name == "driving") {
    w.pattern = Pattern::kSequence;
    w.functions = {cfunc("decode", 8), gfunc("denoise", 6), gfunc("yolo_seg", 12),
                   cfunc("bluring", 4)};
    w.edges = {edge("decode", "denoise", 256), edge("denoise", "yolo_seg", 256),
               edge("yolo_seg", "bluring", 256)};
  } else if (name == "video") {
    w.pattern = Pattern::kFanIn;
    w.functions = {cfunc("decode", 10), gfunc("yolo_face_1", 15), gfunc("yolo_face_2", 15),
                   gfunc("yolo_face_3", 15), gfunc("resnet", 8)};
    for (int i = 1; i <= 3; ++i) {
      const std::string det = "yolo_face_" + std::to_string(i);
      w.edges.push_back(edge("decode", det, 256));
      w.edges.push_back(edge(det, "resnet", 4, 1.0, true));
    }
    w.objects_min = 1;
    w.objects_max = 8;
  } else if (name == "image") {
    w.pattern = Pattern::kFanOut;
    w.functions = {cfunc("decode", 5), gfunc("denoise", 5), gfunc("resnet", 6),
                   gfunc("alexnet", 4), cfunc("aggregate", 1)};
    w.edges = {edge("decode", "denoise", 64), edge("denoise", "resnet", 64),
               edge("denoise", "alexnet", 64), edge("resnet", "aggregate", 1),
               edge("alexnet", "aggregate", 1)};
  } else if (name == "social") {
    w.pattern = Pattern::kCondition;
    w.functions = {cfunc("decode", 4), gfunc("preprocess", 3), gfunc("ocr", 10),
                   gfunc("bert", 8)};
    w.edges = {edge("decode", "preprocess", 64), edge("preprocess", "ocr", 32),
               edge("ocr", "bert", 1, 0.5)};
  } else if (name == "yelp") {
    w.pattern = Pattern::kSequence;
    w.functions = {gfunc("bert_1", 10), gfunc("bert_2", 14)};
    w.edges = {edge("bert_1", "bert_2", 64)};
    w.input_bytes = 16 * kMB;
  } else {
    throw WorkflowError("unknown workflow preset '" + std::string(name) + "'");
  }
  if (!overrides.is_null()) apply_overrides(w, overrides);
  return w;
}

void apply_overrides(Workflow& w, const nlohmann::json& o) {
  try {
    if (o.contains("input_mb")) w.input_bytes = o.at("input_mb").get<double>() * kMB;
    if (o.contains("response_mb")) w.response_bytes = o.at("response_mb").get<double>() * kMB;
    if (o.contains("objects")) {
      w.objects_min = o.at("objects").at(0).get<int>();
      w.objects_max = o.at("objects").at(1).get<int>();
    }
    if (o.contains("functions")) {
      for (const auto& [id, f] : o.at("functions").items()) {
        const int i = w.index_of(id);
        if (i < 0) throw WorkflowError("override names unknown function '" + id + "'");
        auto& spec = w.functions[i];
        spec.compute_ms = f.value("compute_ms", spec.compute_ms);
        spec.compute_jitter = f.value("compute_jitter", spec.compute_jitter);
        spec.slo_ms = f.value("slo_ms", spec.slo_ms);
        spec.infer_ms = f.value("infer_ms", spec.infer_ms);
      }
    }
    if (o.contains("edges")) {
      for (const auto& e : o.at("edges")) {
        const auto from = e.at("from").get<std::string>();
        const auto to = e.at("to").get<std::string>();
        auto it = std::find_if(w.edges.begin(), w.edges.end(),
                               [&](const EdgeSpec& x) { return x.from == from && x.to == to; });
        if (it == w.edges.end())
          throw WorkflowError("override names unknown edge " + from + "->" + to);
        if (e.contains("bytes_mb")) it->bytes = e.at("bytes_mb").get<double>() * kMB;
        it->probability = e.value("probability", it->probability);
        it->per_object = e.value("per_object", it->per_object);
      }
    }
  } catch (const nlohmann::json::exception& ex) {
    throw WorkflowError(std::string("malformed workflow override: ") + ex.what());
  }
}

std::vector<std::string> validate_dag(const Workflow& w) {
  std::vector<std::string> out;
  std::set<std::string> ids;
  for (const auto& f : w.functions) {
    if (!ids.insert(f.id).second) out.push_back("duplicate function id '" + f.id + "'");
    if (f.compute_ms < 0.0) out.push_back("function '" + f.id + "' has negative compute latency");
    if (f.kind == FuncKind::kGFunc && f.slo_ms > 0.0 && f.slo_ms <= f.infer_latency())
      out.push_back("function '" + f.id + "' has slo_ms <= infer latency");
  }
  for (const auto& e : w.edges) {
    const std::string tag = "edge " + e.from + "->" + e.to;
    if (!ids.count(e.from) || !ids.count(e.to))
      out.push_back(tag + " references an undeclared function");
    if (!(e.probability > 0.0 && e.probability <= 1.0))
      out.push_back(tag + " has probability outside (0,1]");
    if (e.bytes < 0.0) out.push_back(tag + " has negative size");
  }
  if (w.objects_min < 1 || w.objects_max < w.objects_min)
    out.push_back("object count range is empty or below 1");
  try {
    (void)w.topo_order();
  } catch (const WorkflowError&) {
    out.push_back("workflow contains a cycle");
  }
  return out;
}

Workflow workflow_from_json(const nlohmann::json& j) {
  Workflow w;
  try {
    w.name = j.value("name", "custom");
    w.pattern = pattern_from_string(j.value("pattern", "sequence"));
    for (const auto& f : j.at("functions")) {
      FunctionSpec s;
      s.id = f.at("id").get<std::string>();
      s.kind = kind_from_string(f.at("kind").get<std::string>());
      s.compute_ms = f.value("compute_ms", 0.0);
      s.compute_jitter = f.value("compute_jitter", 0.0);
      s.slo_ms = f.value("slo_ms", 0.0);
      s.infer_ms = f.value("infer_ms", -1.0);
      w.functions.push_back(std::move(s));
    }
    for (const auto& e : j.at("edges")) {
      w.edges.push_back({e.at("from").get<std::string>(), e.at("to").get<std::string>(),
                         e.value("bytes_mb", 0.0) * kMB, e.value("per_object", false),
                         e.value("probability", 1.0)});
    }
    w.input_bytes = j.value("input_mb", 0.0) * kMB;
    w.response_bytes = j.value("response_mb", 1.0) * kMB;
    if (j.contains("objects")) {
      w.objects_min = j.at("objects").at(0).get<int>();
      w.objects_max = j.at("objects").at(1).get<int>();
    }
  } catch (const nlohmann::json::exception& ex) {
    throw WorkflowError(std::string("malformed workflow document: ") + ex.what());
  }
  if (auto v = validate_dag(w); !v.empty()) throw WorkflowError("invalid workflow: " + v.front());
  return w;
}

nlohmann::json to_json(const Workflow& w) {
  nlohmann::json j;
  j["name"] = w.name;
  j["pattern"] = to_string(w.pattern);
  j["functions"] = nlohmann::json::array();
  for (const auto& f : w.functions) {
    nlohmann::json jf = {{"id", f.id}, {"kind", to_string(f.kind)}, {"compute_ms", f.compute_ms}};
    if (f.compute_jitter > 0.0) jf["compute_jitter"] = f.compute_jitter;
    if (f.slo_ms > 0.0) jf["slo_ms"] = f.slo_ms;
    if (f.infer_ms >= 0.0) jf["infer_ms"] = f.infer_ms;
    j["functions"].push_back(jf);
  }
  j["edges"] = nlohmann::json::array();
  for (const auto& e : w.edges) {
    j["edges"].push_back({{"from", e.from}, {"to", e.to}, {"bytes_mb", e.bytes / kMB},
                          {"per_object", e.per_object}, {"probability", e.probability}});
  }
  j["input_mb"] = w.input_bytes / kMB;
  j["response_mb"] = w.response_bytes / kMB;
  j["objects"] = {w.objects_min, w.objects_max};
  return j;
}

// --- placement ----------------------------------------------------------------

const Location& Placement::at(std::string_view id) const {
  auto it = mapping.find(std::string(id));
  if (it == mapping.end()) throw WorkflowError("function '" + std::string(id) + "' is not placed");
  return it->second;
}

namespace {

int occupancy_of(const std::vector<int>& occ, GpuId g) {
  return g < static_cast<int>(occ.size()) ? occ[g] : 0;
}

int free_slots(const Topology& t, NodeId n, const std::vector<int>& occ, int slots) {
  int sum = 0;
  for (GpuId g : t.nodes.at(n).gpus) sum += std::max(0, slots - occupancy_of(occ, g));
  return sum;
}

// Greedy placement of the functions in `members` onto node `node`.
void place_on_node(const Workflow& w, const std::set<int>& members, const Topology& t,
                   NodeId node, std::vector<int>& load, int slots, Placement& out) {
  const auto& gpus = t.nodes.at(node).gpus;
  std::map<int, GpuId> at;  // function index -> gpu
  std::set<GpuId> used;
  auto usable = [&](GpuId g, bool strict, int need) {
    return load[g] + need <= slots && !(strict && used.count(g));
  };
  auto score = [&](GpuId u, GpuId v) { return u == v ? kInf : pair_bandwidth(t, u, v); };
  auto put = [&](int f, GpuId g) {
    at[f] = g;
    used.insert(g);
    ++load[g];
  };

  std::vector<int> order;
  for (std::size_t e = 0; e < w.edges.size(); ++e) {
    const int a = w.index_of(w.edges[e].from), b = w.index_of(w.edges[e].to);
    if (!members.count(a) || !members.count(b)) continue;
    if (w.functions[a].kind != FuncKind::kGFunc || w.functions[b].kind != FuncKind::kGFunc) continue;
    order.push_back(static_cast<int>(e));
  }
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
    return w.expected_bytes(w.edges[x]) > w.expected_bytes(w.edges[y]);
  });

  for (int e : order) {
    const int a = w.index_of(w.edges[e].from), b = w.index_of(w.edges[e].to);
    const bool pa = at.count(a), pb = at.count(b);
    if (pa && pb) continue;
    for (bool strict : {true, false}) {
      double best = -1.0;
      GpuId bu = -1, bv = -1;
      if (!pa && !pb) {
        for (GpuId u : gpus) {
          for (GpuId v : gpus) {
            if (u == v ? (strict || !usable(u, false, 2))
                       : (!usable(u, strict, 1) || !usable(v, strict, 1)))
              continue;
            const double s = score(u, v);
            if (s > best) std::tie(best, bu, bv) = std::tuple(s, u, v);
          }
        }
        if (bu >= 0) {
          put(a, bu);
          put(b, bv);
          break;
        }
      } else {
        const GpuId fixed = pa ? at[a] : at[b];
        for (GpuId v : gpus) {
          if (!usable(v, strict, 1)) continue;
          const double s = score(fixed, v);
          if (s > best) std::tie(best, bv) = std::tuple(s, v);
        }
        if (bv >= 0) {
          put(pa ? b : a, bv);
          break;
        }
      }
    }
  }

  for (int f : members) {
    if (w.functions[f].kind != FuncKind::kGFunc || at.count(f)) continue;
    GpuId pick = -1;
    for (bool strict : {true, false}) {
      int most = 0;
      for (GpuId g : gpus) {
        if (!usable(g, strict, 1)) continue;
        if (slots - load[g] > most) std::tie(most, pick) = std::tuple(slots - load[g], g);
      }
      if (pick >= 0) break;
    }
    if (pick < 0)
      throw WorkflowError("insufficient GPU capacity on node " + std::to_string(node) +
                          " for workflow '" + w.name + "'");
    put(f, pick);
  }
  for (int f : members) {
    const auto& id = w.functions[f].id;
    out.mapping[id] = w.functions[f].kind == FuncKind::kGFunc ? Location{node, at[f]}
                                                               : Location{node, -1};
  }
}

}  // namespace

Placement place(const Workflow& w, const Topology& t, const std::vector<int>& occupancy,
                const PlacementOptions& opts) {
  if (opts.gpu_slots < 1) throw WorkflowError("gpu_slots must be >= 1");
  std::vector<int> load(t.gpu_count, 0);
  for (GpuId g = 0; g < t.gpu_count; ++g) load[g] = occupancy_of(occupancy, g);

  std::set<int> all;
  for (std::size_t i = 0; i < w.functions.size(); ++i) all.insert(static_cast<int>(i));

  Placement out;
  NodeId node = opts.node;
  if (node < 0) {
    for (const auto& n : t.nodes) {
      if (free_slots(t, n.id, occupancy, opts.gpu_slots) >= w.gfunc_count()) {
        node = n.id;
        break;
      }
    }
  }
  if (node >= 0) {
    place_on_node(w, all, t, node, load, opts.gpu_slots, out);
    return out;
  }
  const auto assignment = partition_across_nodes(w, t, occupancy, opts.gpu_slots);
  for (const auto& n : t.nodes) {
    std::set<int> members;
    for (const auto& [id, nid] : assignment)
      if (nid == n.id) members.insert(w.index_of(id));
    if (!members.empty()) place_on_node(w, members, t, n.id, load, opts.gpu_slots, out);
  }
  return out;
}

std::map<std::string, NodeId> partition_across_nodes(const Workflow& w, const Topology& cluster,
                                                     const std::vector<int>& occupancy,
                                                     int gpu_slots) {
  if (cluster.nodes.empty()) throw TopologyError("cluster has no nodes");
  std::map<std::string, NodeId> out;
  const int n = static_cast<int>(w.functions.size());
  if (cluster.nodes.size() == 1) {
    for (const auto& f : w.functions) out[f.id] = cluster.nodes[0].id;
    return out;
  }

  std::vector<int> cap;
  for (const auto& node : cluster.nodes) cap.push_back(free_slots(cluster, node.id, occupancy, gpu_slots));
  const int max_cap = *std::max_element(cap.begin(), cap.end());

  // Union-find over functions, merging along the heaviest edges while a group
  // still fits the largest node.
  std::vector<int> parent(n), gcount(n);
  std::iota(parent.begin(), parent.end(), 0);
  for (int i = 0; i < n; ++i) gcount[i] = w.functions[i].kind == FuncKind::kGFunc ? 1 : 0;
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<int> order(w.edges.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
    return w.expected_bytes(w.edges[x]) > w.expected_bytes(w.edges[y]);
  });
  for (int e : order) {
    const int a = find(w.index_of(w.edges[e].from)), b = find(w.index_of(w.edges[e].to));
    if (a == b || gcount[a] + gcount[b] > max_cap) continue;
    parent[std::max(a, b)] = std::min(a, b);
    gcount[std::min(a, b)] += gcount[std::max(a, b)];
  }

  std::vector<int> groups;
  for (int i = 0; i < n; ++i)
    if (find(i) == i) groups.push_back(i);
  std::stable_sort(groups.begin(), groups.end(),
                   [&](int x, int y) { return gcount[x] > gcount[y]; });

  auto roomiest = [&](int need) {
    int best = -1;
    for (std::size_t k = 0; k < cap.size(); ++k)
      if (cap[k] >= need && (best < 0 || cap[k] > cap[best])) best = static_cast<int>(k);
    return best;
  };
  for (int g : groups) {
    const int k = roomiest(gcount[g]);
    for (int i = 0; i < n; ++i) {
      if (find(i) != g) continue;
      int node = k;
      if (node < 0) node = roomiest(gcount[i]);
      if (node < 0) throw WorkflowError("insufficient GPU capacity in cluster for '" + w.name + "'");
      cap[node] -= gcount[i];
      out[w.functions[i].id] = cluster.nodes[node].id;
    }
  }
  return out;
}

int cross_node_edges(const Workflow& w, const std::map<std::string, NodeId>& assignment) {
  int count = 0;
  for (const auto& e : w.edges)
    if (assignment.at(e.from) != assignment.at(e.to)) ++count;
  return count;
}

}  // namespace faastube
