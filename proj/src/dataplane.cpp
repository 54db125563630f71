// SPDX-FileCopyrightText: Copyright (c) 2026 The FaaSTube-Sim Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "faastube/dataplane.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace faastube {

std::string_view to_string(TransferMethod m) {
  switch (m) {
    case TransferMethod::kIntraGpu: return "intra_gpu";
    case TransferMethod::kInterGpu: return "inter_gpu";
    case TransferMethod::kHostGpu: return "host_gpu";
    case TransferMethod::kInterNode: return "inter_node";
  }
  return "?";
}

TransferMethod dispatch(const Location& from, const Location& to) {
  if (from.node != to.node) return TransferMethod::kInterNode;
  if (from.on_host() && to.on_host()) return TransferMethod::kIntraGpu;
  if (from.on_host() != to.on_host()) return TransferMethod::kHostGpu;
  return from.gpu == to.gpu ? TransferMethod::kIntraGpu : TransferMethod::kInterGpu;
}

// --- DataIndex ----------------------------------------------------------------

DataIndex::DataIndex(int nodes, IndexConfig cfg) : cfg_(cfg), nodes_(nodes) {
  if (nodes < 1) throw ConfigError("index needs at least one node");
  if (!(cfg.sync_period_ms > 0.0)) throw ConfigError("index sync period must be positive");
}

void DataIndex::store(DataId id, const Location& loc, double bytes, double now_ms,
                      std::string producer, bool response) {
  if (id == 0 || id >= next_id_) throw Error("store of an id that was never allocated");
  if (loc.node < 0 || loc.node >= nodes_) throw Error("store at an unknown node");
  if (!entries_.emplace(id, DataIndexEntry{id, bytes, loc, now_ms, std::move(producer), response})
           .second)
    throw Error("duplicate store of data id " + std::to_string(id));
}

double DataIndex::published_at(double t) const {
  return std::ceil(t / cfg_.sync_period_ms - 1e-12) * cfg_.sync_period_ms;
}

Resolution DataIndex::resolve(DataId id, NodeId node, double now_ms, bool force_global) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw MissingData("data id " + std::to_string(id) + " not found");
  const auto& e = it->second;
  if (!force_global && e.loc.node == node) return {e, cfg_.local_lookup_ms, true};
  const double wait = std::max(0.0, published_at(e.created_ms) - now_ms);
  const double local = force_global ? 0.0 : cfg_.local_lookup_ms;
  return {e, local + cfg_.global_lookup_ms + wait, false};
}

void DataIndex::relocate(DataId id, const Location& loc) {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw MissingData("data id " + std::to_string(id) + " not found");
  it->second.loc = loc;
}

void DataIndex::erase(DataId id) {
  if (entries_.erase(id) == 0) throw MissingData("data id " + std::to_string(id) + " not found");
}

// --- ResourceMap --------------------------------------------------------------

int ResourceMap::add(FluidSim& sim, std::string name, double gbps) {
  caps_.push_back(gbps);
  return sim.add_resource(std::move(name), gbps);
}

ResourceMap::ResourceMap(const Topology& t, FluidSim& sim)
    : gpus_(t.gpu_count), nodes_(static_cast<int>(t.nodes.size())) {
  for (int r = 0; r < t.root_count(); ++r) {
    root_up_.push_back(add(sim, "root" + std::to_string(r) + ".up", t.root_bandwidth(r)));
    root_down_.push_back(add(sim, "root" + std::to_string(r) + ".down", t.root_bandwidth(r)));
  }
  nv_.assign(static_cast<std::size_t>(gpus_) * gpus_, -1);
  for (GpuId u = 0; u < gpus_; ++u)
    for (GpuId v = 0; v < gpus_; ++v)
      if (t.nvlink_lanes(u, v) > 0)
        nv_[u * gpus_ + v] = add(sim, "nv" + std::to_string(u) + "-" + std::to_string(v),
                                 t.nvlink_capacity(u, v));
  port_out_.assign(gpus_, -1);
  port_in_.assign(gpus_, -1);
  for (GpuId g = 0; g < gpus_; ++g) {
    if (!t.on_nvswitch(g)) continue;
    port_out_[g] = add(sim, "port" + std::to_string(g) + ".out", t.switch_port_gbps(g));
    port_in_[g] = add(sim, "port" + std::to_string(g) + ".in", t.switch_port_gbps(g));
  }
  net_.assign(static_cast<std::size_t>(nodes_) * nodes_, -1);
  for (NodeId a = 0; a < nodes_; ++a)
    for (NodeId b = 0; b < nodes_; ++b)
      if (a != b)
        net_[a * nodes_ + b] = add(sim, "net" + std::to_string(a) + "-" + std::to_string(b),
                                   t.network_bandwidth(a, b));
}

int ResourceMap::net(NodeId a, NodeId b) const {
  const int r = net_.at(static_cast<std::size_t>(a) * nodes_ + b);
  if (r < 0) throw TopologyError("no network link between the nodes");
  return r;
}

std::vector<int> ResourceMap::hop(GpuId u, GpuId v) const {
  const int r = nv_.at(static_cast<std::size_t>(u) * gpus_ + v);
  if (r >= 0) return {r};
  if (port_out_.at(u) >= 0 && port_in_.at(v) >= 0) return {port_out_[u], port_in_[v]};
  throw TopologyError("gpus " + std::to_string(u) + " and " + std::to_string(v) +
                      " share no NVLink fabric");
}

std::vector<int> ResourceMap::path(const GpuPath& p) const {
  std::vector<int> out;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    const auto h = hop(p[i], p[i + 1]);
    out.insert(out.end(), h.begin(), h.end());
  }
  return out;
}

// --- TransferPlanner ----------------------------------------------------------

TransferPlanner::TransferPlanner(const Topology& t, const ResourceMap& res, PlannerOptions opts,
                                 std::vector<PinnedRing>* rings)
    : topo_(&t), res_(&res), opts_(opts), rings_(rings), idle_(t) {
  if (opts_.pinned == PinnedMode::kRing && !rings_)
    throw ConfigError("ring pinning needs a ring per node");
}

FlowLeg TransferPlanner::make_leg(std::vector<int> resources, const std::vector<double>& hop_gbps,
                                  double bytes, bool pcie) const {
  FlowLeg leg;
  leg.resources = std::move(resources);
  leg.bytes = bytes;
  leg.pcie = pcie;
  leg.tail_ms = pipeline_latency(bytes, hop_gbps, opts_.chunk_bytes) -
                transfer_ms(bytes, *std::min_element(hop_gbps.begin(), hop_gbps.end()));
  leg.tail_ms = std::max(0.0, leg.tail_ms);
  return leg;
}

std::vector<FlowLeg> TransferPlanner::pcie_legs(GpuId g, double bytes, bool to_gpu,
                                                const BandwidthMatrix* m) const {
  const auto& t = *topo_;
  const int own = t.root_of(g);
  auto root_res = [&](int r) { return to_gpu ? res_->root_down(r) : res_->root_up(r); };
  if (!opts_.parallel_pcie)
    return {make_leg({root_res(own)}, {t.root_bandwidth(own)}, bytes, true)};

  struct Route {
    int root;
    GpuPath path;  // staging GPU to g (or g to staging GPU)
    double rate;
  };
  std::vector<Route> routes;
  for (int r : t.roots_of_node(t.node_of(g))) {
    const double rb = t.root_bandwidth(r);
    if (r == own) {
      routes.push_back({r, {}, rb});
      continue;
    }
    std::optional<Route> best;
    for (GpuId n : t.group(r).gpus) {
      const auto paths = to_gpu ? enumerate_paths(idle_, n, g, 2) : enumerate_paths(idle_, g, n, 2);
      for (const auto& p : paths) {
        if (m) {
          bool idle = true;
          for (std::size_t i = 0; i + 1 < p.size(); ++i) idle = idle && m->idle(p[i], p[i + 1]);
          if (!idle) continue;
        }
        const double rate = std::min(rb, path_capacity(idle_, p));
        const bool better = !best || rate > best->rate ||
                            (rate == best->rate && p.size() < best->path.size());
        if (better) best = Route{r, p, rate};
      }
    }
    if (best) routes.push_back(*best);
  }
  std::vector<double> rates;
  for (const auto& r : routes) rates.push_back(r.rate);
  const auto split = distribute_bytes(rates, bytes, opts_.chunk_bytes);

  std::vector<FlowLeg> legs;
  for (std::size_t i = 0; i < routes.size(); ++i) {
    if (split[i] <= 0.0) continue;
    const auto& route = routes[i];
    std::vector<int> resources;
    std::vector<double> hops;
    const auto nv = res_->path(route.path);
    std::vector<double> nv_hops;
    for (std::size_t k = 0; k + 1 < route.path.size(); ++k)
      nv_hops.push_back(t.nvlink_capacity(route.path[k], route.path[k + 1]));
    if (to_gpu) {
      resources.push_back(root_res(route.root));
      resources.insert(resources.end(), nv.begin(), nv.end());
      hops.push_back(t.root_bandwidth(route.root));
      hops.insert(hops.end(), nv_hops.begin(), nv_hops.end());
    } else {
      resources = nv;
      resources.push_back(root_res(route.root));
      hops = nv_hops;
      hops.push_back(t.root_bandwidth(route.root));
    }
    legs.push_back(make_leg(std::move(resources), hops, split[i], true));
  }
  return legs;
}

double TransferPlanner::pinned_setup(NodeId node, double bytes) {
  switch (opts_.pinned) {
    case PinnedMode::kNone: return 0.0;
    case PinnedMode::kTemporary: return pinned_cost(bytes, 0.0, opts_.pinned_ms_per_mb);
    case PinnedMode::kRing: return rings_->at(node).stage(bytes);
  }
  return 0.0;
}

TransferPlan TransferPlanner::plan(const Location& from, const Location& to, double bytes,
                                   BandwidthMatrix* matrix, OwnerId owner) {
  const auto& t = *topo_;
  TransferPlan p;
  p.method = dispatch(from, to);
  p.bytes = bytes;
  if (opts_.infinite_bandwidth || bytes <= 0.0) return p;

  auto p2p = [&](GpuId u, GpuId v) {
    return make_leg({res_->root_up(t.root_of(u)), res_->root_down(t.root_of(v))},
                    {t.params.pcie_p2p_gbps}, bytes, true);
  };

  switch (p.method) {
    case TransferMethod::kIntraGpu:
      p.stages.push_back({opts_.intra_gpu_ms, {}});
      break;

    case TransferMethod::kHostGpu: {
      const bool to_gpu = !to.on_host();
      const GpuId g = to_gpu ? to.gpu : from.gpu;
      p.pcie_node = from.node;
      p.stages.push_back(
          {pinned_setup(from.node, bytes), pcie_legs(g, bytes, to_gpu, opts_.multipath ? matrix : nullptr)});
      break;
    }

    case TransferMethod::kInterGpu: {
      const GpuId u = from.gpu, v = to.gpu;
      if (!opts_.gpu_direct) {
        p.pcie_node = from.node;
        p.stages.push_back({pinned_setup(from.node, bytes), pcie_legs(u, bytes, false, nullptr)});
        p.stages.push_back({0.0, pcie_legs(v, bytes, true, nullptr)});
        break;
      }
      if (opts_.multipath && matrix) {
        SelectTrace trace;
        const auto paths = select_paths(*matrix, {owner, u, v}, &trace);
        if (!paths.empty()) {
          std::vector<double> rates;
          for (const auto& np : paths) rates.push_back(np.b_min_gbps);
          const auto split = distribute_bytes(rates, bytes, opts_.chunk_bytes);
          TransferStage stage;
          for (std::size_t i = 0; i < paths.size(); ++i) {
            if (split[i] <= 0.0) continue;
            std::vector<double> hops;
            for (std::size_t k = 0; k + 1 < paths[i].gpus.size(); ++k)
              hops.push_back(t.nvlink_capacity(paths[i].gpus[k], paths[i].gpus[k + 1]));
            auto leg = make_leg(res_->path(paths[i].gpus), hops, split[i], false);
            leg.managed_rate = paths[i].b_min_gbps;
            leg.hold_id = paths[i].hold_id;
            stage.legs.push_back(std::move(leg));
          }
          p.stages.push_back(std::move(stage));
          p.nv_owner = owner;
          p.changes = trace.changes;
          break;
        }
      } else if (t.has_nvlink(u, v)) {
        p.stages.push_back({0.0, {make_leg(res_->hop(u, v), {t.nvlink_capacity(u, v)}, bytes, false)}});
        break;
      }
      p.pcie_node = from.node;
      p.stages.push_back({0.0, {p2p(u, v)}});
      break;
    }

    case TransferMethod::kInterNode: {
      const NodeId a = from.node, b = to.node;
      const double setup_a = from.on_host() ? 0.0 : pinned_setup(a, bytes);
      const double setup_b = to.on_host() ? 0.0 : pinned_setup(b, bytes);
      const int net = res_->net(a, b);
      const double net_gbps = t.network_bandwidth(a, b);
      if (opts_.pipelined_internode) {
        std::vector<int> resources;
        std::vector<double> hops;
        if (!from.on_host()) {
          resources.push_back(res_->root_up(t.root_of(from.gpu)));
          hops.push_back(t.root_bandwidth(t.root_of(from.gpu)));
        }
        resources.push_back(net);
        hops.push_back(net_gbps);
        if (!to.on_host()) {
          resources.push_back(res_->root_down(t.root_of(to.gpu)));
          hops.push_back(t.root_bandwidth(t.root_of(to.gpu)));
        }
        p.stages.push_back({setup_a + setup_b, {make_leg(resources, hops, bytes, false)}});
        break;
      }
      if (!from.on_host()) {
        const int r = t.root_of(from.gpu);
        p.stages.push_back({setup_a, {make_leg({res_->root_up(r)}, {t.root_bandwidth(r)}, bytes, true)}});
      }
      p.stages.push_back({0.0, {make_leg({net}, {net_gbps}, bytes, false)}});
      if (!to.on_host()) {
        const int r = t.root_of(to.gpu);
        p.stages.push_back({setup_b, {make_leg({res_->root_down(r)}, {t.root_bandwidth(r)}, bytes, true)}});
      }
      break;
    }
  }
  return p;
}

double TransferPlanner::uncontended_ms(const TransferPlan& p) const {
  double total = 0.0;
  for (const auto& s : p.stages) {
    double slowest = 0.0;
    for (const auto& leg : s.legs) {
      double b = leg.rate_cap;
      for (int r : leg.resources) b = std::min(b, res_->capacity(r));
      slowest = std::max(slowest, transfer_ms(leg.bytes, b) + leg.tail_ms);
    }
    total += s.setup_ms + slowest;
  }
  return total;
}

}  // namespace faastube
