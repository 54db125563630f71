// SPDX-FileCopyrightText: Copyright (c) 2026 The FaaSTube-Sim Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "faastube/topology.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace faastube {

namespace {

constexpr double kV100LaneGbps = 24.0;
constexpr double kA100LaneGbps = 25.0;
constexpr int kA100LanesPerGpu = 12;

// DGX-1V hybrid cube-mesh: {u, v, lanes}.
constexpr int kCubeMesh[][3] = {
    {0, 1, 1}, {0, 2, 1}, {0, 3, 2}, {0, 4, 2}, {1, 2, 2}, {1, 3, 1},
    {1, 5, 2}, {2, 3, 2}, {2, 6, 1}, {3, 7, 1}, {4, 5, 1}, {4, 6, 1},
    {4, 7, 2}, {5, 6, 2}, {5, 7, 1}, {6, 7, 2},
};

void add_pcie_roots(Topology& t, const std::vector<std::vector<GpuId>>& groups,
                    double gbps) {
  for (const auto& gpus : groups) {
    const int root = static_cast<int>(t.pcie_groups.size());
    t.pcie_groups.push_back({root, gpus});
    t.links.push_back({LinkKind::kPcie, Endpoint::host(0), Endpoint::root(root), gbps, 1});
  }
}

Topology single_node(std::string name, int gpus) {
  Topology t;
  t.name = std::move(name);
  t.gpu_count = gpus;
  NodeDesc node;
  for (int g = 0; g < gpus; ++g) node.gpus.push_back(g);
  t.nodes.push_back(node);
  return t;
}

// Aggregate pair statistics of the DGX-1V wiring; the preset refuses to build
// if the encoded table drifts from them.
void check_cube_mesh(const Topology& t) {
  int doubles = 0, singles = 0, none = 0;
  for (GpuId u = 0; u < 8; ++u) {
    for (GpuId v = u + 1; v < 8; ++v) {
      switch (t.nvlink_lanes(u, v)) {
        case 0: ++none; break;
        case 1: ++singles; break;
        case 2: ++doubles; break;
        default: throw TopologyError("dgx_v100: unexpected lane count");
      }
    }
  }
  if (doubles != 8 || singles != 8 || none != 12)
    throw TopologyError("dgx_v100: pair statistics do not match the cube-mesh");
  for (GpuId g = 0; g < 8; ++g)
    if (t.nvlink_degree(g) != 6)
      throw TopologyError("dgx_v100: every GPU must carry 6 NVLink lanes");
}

}  // namespace

std::string_view to_string(LinkKind kind) {
  switch (kind) {
    case LinkKind::kPcie: return "pcie";
    case LinkKind::kNvLink: return "nvlink";
    case LinkKind::kNvSwitchPort: return "nvswitch_port";
    case LinkKind::kNetwork: return "network";
  }
  return "?";
}

LinkKind link_kind_from_string(std::string_view s) {
  if (s == "pcie") return LinkKind::kPcie;
  if (s == "nvlink") return LinkKind::kNvLink;
  if (s == "nvswitch_port") return LinkKind::kNvSwitchPort;
  if (s == "network") return LinkKind::kNetwork;
  throw TopologyError("unknown link kind '" + std::string(s) + "'");
}

std::string Endpoint::str() const {
  switch (kind) {
    case EndpointKind::kGpu: return "gpu" + std::to_string(index);
    case EndpointKind::kHost: return "host" + std::to_string(index);
    case EndpointKind::kPcieRoot: return "root" + std::to_string(index);
    case EndpointKind::kNvSwitch: return "nvswitch" + std::to_string(index);
  }
  return "?";
}

Endpoint Endpoint::parse(std::string_view s) {
  static constexpr std::pair<std::string_view, EndpointKind> kPrefixes[] = {
      {"nvswitch", EndpointKind::kNvSwitch},
      {"gpu", EndpointKind::kGpu},
      {"host", EndpointKind::kHost},
      {"root", EndpointKind::kPcieRoot},
  };
  for (const auto& [prefix, kind] : kPrefixes) {
    if (s.substr(0, prefix.size()) != prefix) continue;
    const auto digits = s.substr(prefix.size());
    int index = -1;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), index);
    if (ec != std::errc() || ptr != digits.data() + digits.size() || digits.empty())
      break;
    return {kind, index};
  }
  throw TopologyError("malformed endpoint '" + std::string(s) + "'");
}

// --- Topology ---------------------------------------------------------------

void Topology::finalize() {
  if (auto violations = validate(*this); !violations.empty()) {
    std::string msg = "invalid topology '" + name + "':";
    for (const auto& v : violations) msg += "\n  " + v;
    throw TopologyError(msg);
  }
  const auto n = static_cast<std::size_t>(gpu_count);
  node_of_.assign(n, -1);
  for (const auto& node : nodes)
    for (GpuId g : node.gpus) node_of_[g] = node.id;

  root_of_.assign(n, -1);
  root_node_.assign(pcie_groups.size(), 0);
  root_gbps_.assign(pcie_groups.size(), 0.0);
  for (std::size_t i = 0; i < pcie_groups.size(); ++i) {
    if (pcie_groups[i].root != static_cast<int>(i))
      throw TopologyError("pcie groups must be listed in root order");
    for (GpuId g : pcie_groups[i].gpus) root_of_[g] = static_cast<int>(i);
  }

  nv_capacity_.assign(n * n, 0.0);
  nv_lanes_.assign(n * n, 0);
  switch_port_gbps_.assign(n, 0.0);
  std::vector<int> switch_of(n, -1);
  for (const auto& l : links) {
    switch (l.kind) {
      case LinkKind::kPcie: {
        const auto& root = l.a.kind == EndpointKind::kPcieRoot ? l.a : l.b;
        const auto& host = l.a.kind == EndpointKind::kHost ? l.a : l.b;
        root_gbps_[root.index] = l.capacity_gbps();
        root_node_[root.index] = host.index;
        break;
      }
      case LinkKind::kNvLink: {
        const auto u = static_cast<std::size_t>(l.a.index);
        const auto v = static_cast<std::size_t>(l.b.index);
        nv_capacity_[u * n + v] += l.capacity_gbps();
        nv_capacity_[v * n + u] += l.capacity_gbps();
        nv_lanes_[u * n + v] += l.multiplicity;
        nv_lanes_[v * n + u] += l.multiplicity;
        break;
      }
      case LinkKind::kNvSwitchPort: {
        const auto& gpu = l.a.kind == EndpointKind::kGpu ? l.a : l.b;
        const auto& sw = l.a.kind == EndpointKind::kNvSwitch ? l.a : l.b;
        switch_port_gbps_[gpu.index] += l.capacity_gbps();
        switch_of[gpu.index] = sw.index;
        break;
      }
      case LinkKind::kNetwork: break;
    }
  }
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      if (u == v || switch_of[u] < 0 || switch_of[u] != switch_of[v]) continue;
      nv_capacity_[u * n + v] += std::min(switch_port_gbps_[u], switch_port_gbps_[v]);
    }
  }
}

NodeId Topology::node_of(GpuId g) const {
  if (!has_gpu(g)) throw TopologyError("unknown gpu " + std::to_string(g));
  return node_of_[g];
}

int Topology::root_of(GpuId g) const {
  if (!has_gpu(g)) throw TopologyError("unknown gpu " + std::to_string(g));
  return root_of_[g];
}

const PcieGroup& Topology::group(int root) const { return pcie_groups.at(root); }
NodeId Topology::root_node(int root) const { return root_node_.at(root); }
double Topology::root_bandwidth(int root) const { return root_gbps_.at(root); }

std::vector<int> Topology::roots_of_node(NodeId n) const {
  std::vector<int> out;
  for (int r = 0; r < root_count(); ++r)
    if (root_node_[r] == n) out.push_back(r);
  return out;
}

double Topology::nvlink_capacity(GpuId u, GpuId v) const {
  if (!has_gpu(u) || !has_gpu(v)) throw TopologyError("unknown gpu");
  if (u == v) return 0.0;
  return nv_capacity_[static_cast<std::size_t>(u) * gpu_count + v];
}

int Topology::nvlink_lanes(GpuId u, GpuId v) const {
  if (!has_gpu(u) || !has_gpu(v)) throw TopologyError("unknown gpu");
  return nv_lanes_[static_cast<std::size_t>(u) * gpu_count + v];
}

int Topology::nvlink_degree(GpuId g) const {
  int lanes = 0;
  for (GpuId v = 0; v < gpu_count; ++v) lanes += nvlink_lanes(g, v);
  return lanes;
}

std::vector<GpuId> Topology::nvlink_neighbors(GpuId g) const {
  std::vector<GpuId> out;
  for (GpuId v = 0; v < gpu_count; ++v)
    if (v != g && has_nvlink(g, v)) out.push_back(v);
  return out;
}

double Topology::max_pair_capacity(GpuId g) const {
  double best = 0.0;
  for (GpuId v = 0; v < gpu_count; ++v) best = std::max(best, nvlink_capacity(g, v));
  return best;
}

double Topology::nvlink_aggregate(GpuId g) const {
  if (on_nvswitch(g)) return switch_port_gbps(g);
  double sum = 0.0;
  for (GpuId v = 0; v < gpu_count; ++v) sum += nvlink_capacity(g, v);
  return sum;
}

double Topology::network_bandwidth(NodeId a, NodeId b) const {
  for (const auto& l : links) {
    if (l.kind != LinkKind::kNetwork) continue;
    if ((l.a.index == a && l.b.index == b) || (l.a.index == b && l.b.index == a))
      return l.capacity_gbps();
  }
  return params.network_gbps;
}

// --- presets ----------------------------------------------------------------

std::vector<std::string> preset_topology_names() {
  return {"dgx_v100", "dgx_a100", "quad_a10"};
}

Topology build_preset(std::string_view name) {
  if (name == "dgx_v100") {
    Topology t = single_node("dgx_v100", 8);
    t.params.gpu_memory_bytes = 32e9;
    add_pcie_roots(t, {{0, 1}, {2, 3}, {4, 5}, {6, 7}}, t.params.pcie_pinned_gbps);
    for (const auto& e : kCubeMesh)
      t.links.push_back({LinkKind::kNvLink, Endpoint::gpu(e[0]), Endpoint::gpu(e[1]),
                         kV100LaneGbps, e[2]});
    t.finalize();
    check_cube_mesh(t);
    return t;
  }
  if (name == "dgx_a100") {
    Topology t = single_node("dgx_a100", 8);
    t.params.gpu_memory_bytes = 40e9;
    add_pcie_roots(t, {{0, 1}, {2, 3}, {4, 5}, {6, 7}}, t.params.pcie_pinned_gbps);
    for (GpuId g = 0; g < 8; ++g)
      t.links.push_back({LinkKind::kNvSwitchPort, Endpoint::gpu(g), Endpoint::nvswitch(0),
                         kA100LaneGbps, kA100LanesPerGpu});
    t.finalize();
    return t;
  }
  if (name == "quad_a10") {
    Topology t = single_node("quad_a10", 4);
    t.params.gpu_memory_bytes = 24e9;
    add_pcie_roots(t, {{0}, {1}, {2}, {3}}, t.params.pcie_pinned_gbps);
    t.finalize();
    return t;
  }
  throw TopologyError("unknown topology preset '" + std::string(name) + "'");
}

Topology load_topology(std::string_view name_or_path) {
  std::string path(name_or_path);
  if (path.rfind("custom:", 0) == 0) {
    path = path.substr(7);
  } else if (path.find('/') == std::string::npos && path.find(".json") == std::string::npos) {
    return build_preset(path);
  }
  std::ifstream in(path);
  if (!in) throw TopologyError("cannot open topology file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw TopologyError("malformed topology file '" + path + "': " + e.what());
  }
  return topology_from_json(j);
}

// --- JSON ---------------------------------------------------------------------

Topology topology_from_json(const nlohmann::json& j) {
  Topology t;
  try {
    t.name = j.value("name", "custom");
    if (j.contains("params")) {
      const auto& p = j.at("params");
      t.params.pcie_pinned_gbps = p.value("pcie_pinned_gbps", t.params.pcie_pinned_gbps);
      t.params.pageable_gbps = p.value("pageable_gbps", t.params.pageable_gbps);
      t.params.pcie_p2p_gbps = p.value("pcie_p2p_gbps", t.params.pcie_p2p_gbps);
      t.params.network_gbps = p.value("network_gbps", t.params.network_gbps);
      t.params.gpu_memory_bytes = p.value("gpu_memory_bytes", t.params.gpu_memory_bytes);
    }
    for (const auto& n : j.at("nodes")) {
      NodeDesc node;
      node.id = n.at("id").get<int>();
      node.gpus = n.at("gpus").get<std::vector<int>>();
      t.gpu_count += static_cast<int>(node.gpus.size());
      t.nodes.push_back(std::move(node));
    }
    for (const auto& g : j.at("pcie_groups")) {
      PcieGroup group;
      group.root = Endpoint::parse(g.at("root").get<std::string>()).index;
      group.gpus = g.at("gpus").get<std::vector<int>>();
      t.pcie_groups.push_back(std::move(group));
    }
    for (const auto& l : j.at("links")) {
      Link link;
      link.kind = link_kind_from_string(l.at("kind").get<std::string>());
      const auto& ends = l.at("endpoints");
      if (!ends.is_array() || ends.size() != 2)
        throw TopologyError("link endpoints must be a pair");
      link.a = Endpoint::parse(ends[0].get<std::string>());
      link.b = Endpoint::parse(ends[1].get<std::string>());
      link.bandwidth_gbps = l.at("bandwidth_gbps").get<double>();
      link.multiplicity = l.value("multiplicity", 1);
      t.links.push_back(link);
    }
  } catch (const nlohmann::json::exception& e) {
    throw TopologyError(std::string("malformed topology document: ") + e.what());
  }
  t.finalize();
  return t;
}

nlohmann::json to_json(const Topology& t) {
  nlohmann::json j;
  j["name"] = t.name;
  j["params"] = {{"pcie_pinned_gbps", t.params.pcie_pinned_gbps},
                 {"pageable_gbps", t.params.pageable_gbps},
                 {"pcie_p2p_gbps", t.params.pcie_p2p_gbps},
                 {"network_gbps", t.params.network_gbps},
                 {"gpu_memory_bytes", t.params.gpu_memory_bytes}};
  j["nodes"] = nlohmann::json::array();
  for (const auto& n : t.nodes) j["nodes"].push_back({{"id", n.id}, {"gpus", n.gpus}});
  j["pcie_groups"] = nlohmann::json::array();
  for (const auto& g : t.pcie_groups)
    j["pcie_groups"].push_back({{"root", Endpoint::root(g.root).str()}, {"gpus", g.gpus}});
  j["links"] = nlohmann::json::array();
  for (const auto& l : t.links) {
    j["links"].push_back({{"kind", to_string(l.kind)},
                          {"endpoints", {l.a.str(), l.b.str()}},
                          {"bandwidth_gbps", l.bandwidth_gbps},
                          {"multiplicity", l.multiplicity}});
  }
  return j;
}

Topology make_cluster(const Topology& server, int nodes) {
  if (nodes < 1) throw TopologyError("cluster needs at least one node");
  if (server.nodes.size() != 1) throw TopologyError("make_cluster expects a single-node server");
  Topology t;
  t.name = server.name + "_x" + std::to_string(nodes);
  t.params = server.params;
  const int gpus = server.gpu_count;
  const int roots = server.root_count();
  for (int n = 0; n < nodes; ++n) {
    NodeDesc node{n, {}};
    for (GpuId g : server.nodes[0].gpus) node.gpus.push_back(g + n * gpus);
    t.nodes.push_back(node);
    for (const auto& grp : server.pcie_groups) {
      PcieGroup copy{grp.root + n * roots, {}};
      for (GpuId g : grp.gpus) copy.gpus.push_back(g + n * gpus);
      t.pcie_groups.push_back(copy);
    }
    for (Link l : server.links) {
      auto shift = [&](Endpoint& e) {
        switch (e.kind) {
          case EndpointKind::kGpu: e.index += n * gpus; break;
          case EndpointKind::kHost: e.index = n; break;
          case EndpointKind::kPcieRoot: e.index += n * roots; break;
          case EndpointKind::kNvSwitch: e.index += n; break;
        }
      };
      if (l.kind == LinkKind::kNetwork) continue;
      shift(l.a);
      shift(l.b);
      t.links.push_back(l);
    }
  }
  for (int a = 0; a < nodes; ++a)
    for (int b = a + 1; b < nodes; ++b)
      t.links.push_back({LinkKind::kNetwork, Endpoint::host(a), Endpoint::host(b),
                         server.params.network_gbps, 1});
  t.gpu_count = gpus * nodes;
  t.finalize();
  return t;
}

std::vector<std::string> validate(const Topology& t) {
  std::vector<std::string> out;
  const int n = t.gpu_count;
  std::set<int> node_ids;
  std::vector<int> node_hits(std::max(n, 0), 0);
  std::vector<int> node_of(std::max(n, 0), -1);
  for (const auto& node : t.nodes) {
    if (!node_ids.insert(node.id).second)
      out.push_back("duplicate node id " + std::to_string(node.id));
    for (GpuId g : node.gpus) {
      if (g < 0 || g >= n) {
        out.push_back("node " + std::to_string(node.id) + " lists unknown gpu" + std::to_string(g));
        continue;
      }
      ++node_hits[g];
      node_of[g] = node.id;
    }
  }
  for (GpuId g = 0; g < n; ++g) {
    if (node_hits[g] != 1)
      out.push_back("gpu" + std::to_string(g) + " belongs to " + std::to_string(node_hits[g]) +
                    " nodes");
  }

  std::set<int> roots;
  std::vector<int> group_hits(std::max(n, 0), 0);
  for (const auto& grp : t.pcie_groups) {
    roots.insert(grp.root);
    for (GpuId g : grp.gpus) {
      if (g < 0 || g >= n) {
        out.push_back("root" + std::to_string(grp.root) + " lists unknown gpu" + std::to_string(g));
        continue;
      }
      ++group_hits[g];
    }
  }
  for (GpuId g = 0; g < n; ++g) {
    if (group_hits[g] != 1)
      out.push_back("gpu" + std::to_string(g) + " is in " + std::to_string(group_hits[g]) +
                    " PCIe groups");
  }

  auto endpoint_ok = [&](const Endpoint& e) {
    switch (e.kind) {
      case EndpointKind::kGpu: return e.index >= 0 && e.index < n;
      case EndpointKind::kHost: return node_ids.count(e.index) > 0;
      case EndpointKind::kPcieRoot: return roots.count(e.index) > 0;
      case EndpointKind::kNvSwitch: return e.index >= 0;
    }
    return false;
  };
  std::map<int, int> root_links;
  for (std::size_t i = 0; i < t.links.size(); ++i) {
    const auto& l = t.links[i];
    const std::string tag = "link " + std::to_string(i) + " (" + l.a.str() + "-" + l.b.str() + ")";
    if (!endpoint_ok(l.a) || !endpoint_ok(l.b)) {
      out.push_back(tag + " references a missing endpoint");
      continue;
    }
    if (!(l.bandwidth_gbps > 0.0)) out.push_back(tag + " has non-positive bandwidth");
    if (l.multiplicity < 1) out.push_back(tag + " has multiplicity < 1");
    auto kinds = [&](EndpointKind x, EndpointKind y) {
      return (l.a.kind == x && l.b.kind == y) || (l.a.kind == y && l.b.kind == x);
    };
    switch (l.kind) {
      case LinkKind::kNvLink:
        if (!kinds(EndpointKind::kGpu, EndpointKind::kGpu) || l.a.index == l.b.index)
          out.push_back(tag + " nvlink must join two distinct gpus");
        else if (node_of[l.a.index] != node_of[l.b.index])
          out.push_back(tag + " nvlink crosses nodes");
        break;
      case LinkKind::kPcie:
        if (!kinds(EndpointKind::kHost, EndpointKind::kPcieRoot))
          out.push_back(tag + " pcie link must join a host and a root");
        else
          ++root_links[l.a.kind == EndpointKind::kPcieRoot ? l.a.index : l.b.index];
        break;
      case LinkKind::kNvSwitchPort:
        if (!kinds(EndpointKind::kGpu, EndpointKind::kNvSwitch))
          out.push_back(tag + " nvswitch port must join a gpu and a switch");
        break;
      case LinkKind::kNetwork:
        if (!kinds(EndpointKind::kHost, EndpointKind::kHost) || l.a.index == l.b.index)
          out.push_back(tag + " network link must join two hosts");
        break;
    }
  }
  for (int r : roots) {
    if (root_links[r] != 1)
      out.push_back("root" + std::to_string(r) + " has " + std::to_string(root_links[r]) +
                    " PCIe links");
  }
  return out;
}

double pair_bandwidth(const Topology& t, GpuId u, GpuId v) {
  if (!t.has_gpu(u) || !t.has_gpu(v))
    throw TopologyError("unknown gpu in pair (" + std::to_string(u) + "," + std::to_string(v) + ")");
  if (u == v) throw TopologyError("pair_bandwidth needs two distinct gpus");
  if (t.node_of(u) != t.node_of(v)) return t.network_bandwidth(t.node_of(u), t.node_of(v));
  const double nv = t.nvlink_capacity(u, v);
  return nv > 0.0 ? nv : t.params.pcie_p2p_gbps;
}

// --- BandwidthMatrix ----------------------------------------------------------

BandwidthMatrix::BandwidthMatrix(const Topology& t, BudgetMode mode) : n_(t.gpu_count) {
  const auto nn = static_cast<std::size_t>(n_) * n_;
  capacity_.assign(nn, 0.0);
  for (GpuId u = 0; u < n_; ++u)
    for (GpuId v = 0; v < n_; ++v)
      if (u != v && t.node_of(u) == t.node_of(v)) capacity_[at(u, v)] = t.nvlink_capacity(u, v);
  egress_cap_.resize(n_);
  for (GpuId g = 0; g < n_; ++g)
    egress_cap_[g] = mode == BudgetMode::kMaxPair ? t.max_pair_capacity(g) : t.nvlink_aggregate(g);
  ingress_cap_ = egress_cap_;
  recompute();
}

std::size_t BandwidthMatrix::at(GpuId u, GpuId v) const {
  if (u < 0 || v < 0 || u >= n_ || v >= n_)
    throw SchedulingError("gpu out of matrix range");
  return static_cast<std::size_t>(u) * n_ + v;
}

bool BandwidthMatrix::idle(GpuId u, GpuId v) const {
  if (capacity(u, v) <= 0.0) return false;
  for (const auto& h : holds_)
    for (std::size_t i = 0; i + 1 < h.gpus.size(); ++i)
      if (h.gpus[i] == u && h.gpus[i + 1] == v) return false;
  return true;
}

std::vector<OwnerId> BandwidthMatrix::owners(GpuId u, GpuId v) const {
  std::vector<OwnerId> out;
  for (const auto& h : holds_)
    for (std::size_t i = 0; i + 1 < h.gpus.size(); ++i)
      if (h.gpus[i] == u && h.gpus[i + 1] == v &&
          std::find(out.begin(), out.end(), h.owner) == out.end())
        out.push_back(h.owner);
  return out;
}

void BandwidthMatrix::recompute() {
  residual_ = capacity_;
  egress_ = egress_cap_;
  ingress_ = ingress_cap_;
  for (const auto& h : holds_) {
    for (std::size_t i = 0; i + 1 < h.gpus.size(); ++i) residual_[at(h.gpus[i], h.gpus[i + 1])] -= h.rate_gbps;
    egress_[h.gpus.front()] -= h.rate_gbps;
    ingress_[h.gpus.back()] -= h.rate_gbps;
  }
  // Rounding of repeated subtraction can leave -1e-15; clamp to the invariant.
  for (auto& r : residual_) r = std::max(r, 0.0);
  for (auto& r : egress_) r = std::max(r, 0.0);
  for (auto& r : ingress_) r = std::max(r, 0.0);
}

std::uint64_t BandwidthMatrix::hold(OwnerId owner, std::vector<GpuId> path, double rate) {
  constexpr double kSlack = 1e-9;
  if (path.size() < 2) throw SchedulingError("a held path needs at least one edge");
  if (!(rate >= 0.0)) throw SchedulingError("negative hold rate");
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const auto idx = at(path[i], path[i + 1]);
    if (capacity_[idx] <= 0.0) throw SchedulingError("path uses a missing NVLink edge");
    if (rate > residual_[idx] + kSlack) throw SchedulingError("hold exceeds edge residual");
  }
  if (rate > egress_.at(path.front()) + kSlack || rate > ingress_.at(path.back()) + kSlack)
    throw SchedulingError("hold exceeds gpu budget");
  const auto id = next_hold_++;
  holds_.push_back({id, owner, std::move(path), rate});
  recompute();
  return id;
}

void BandwidthMatrix::release(OwnerId owner) {
  const auto before = holds_.size();
  std::erase_if(holds_, [&](const HeldPath& h) { return h.owner == owner; });
  if (holds_.size() == before)
    throw SchedulingError("release of owner " + std::to_string(owner) + " that holds nothing");
  recompute();
}

void BandwidthMatrix::release_hold(std::uint64_t hold_id) {
  const auto before = holds_.size();
  std::erase_if(holds_, [&](const HeldPath& h) { return h.id == hold_id; });
  if (holds_.size() == before) throw SchedulingError("unknown hold id");
  recompute();
}

void BandwidthMatrix::set_rate(std::uint64_t hold_id, double rate) {
  for (auto& h : holds_) {
    if (h.id == hold_id) {
      h.rate_gbps = rate;
      recompute();
      return;
    }
  }
  throw SchedulingError("unknown hold id");
}

bool BandwidthMatrix::holds_any(OwnerId owner) const {
  return std::any_of(holds_.begin(), holds_.end(),
                     [&](const HeldPath& h) { return h.owner == owner; });
}

std::vector<HeldPath> BandwidthMatrix::holds_of(OwnerId owner) const {
  std::vector<HeldPath> out;
  for (const auto& h : holds_)
    if (h.owner == owner) out.push_back(h);
  return out;
}

double BandwidthMatrix::aggregate(OwnerId owner) const {
  double sum = 0.0;
  for (const auto& h : holds_)
    if (h.owner == owner) sum += h.rate_gbps;
  return sum;
}

bool BandwidthMatrix::operator==(const BandwidthMatrix& o) const {
  if (n_ != o.n_ || residual_ != o.residual_ || egress_ != o.egress_ || ingress_ != o.ingress_)
    return false;
  if (holds_.size() != o.holds_.size()) return false;
  for (std::size_t i = 0; i < holds_.size(); ++i) {
    if (holds_[i].owner != o.holds_[i].owner || holds_[i].gpus != o.holds_[i].gpus ||
        holds_[i].rate_gbps != o.holds_[i].rate_gbps)
      return false;
  }
  return true;
}

nlohmann::json BandwidthMatrix::to_json() const {
  nlohmann::json j;
  j["residual"] = nlohmann::json::array();
  for (GpuId u = 0; u < n_; ++u) {
    std::vector<double> row;
    for (GpuId v = 0; v < n_; ++v) row.push_back(residual(u, v));
    j["residual"].push_back(row);
  }
  j["egress"] = egress_;
  j["ingress"] = ingress_;
  return j;
}

}  // namespace faastube
