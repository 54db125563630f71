// SPDX-FileCopyrightText: Copyright (c) 2026 The FaaSTube-Sim Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "faastube/runtime.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>

namespace faastube {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Per-request stream so every strategy sees the same draws for request i.
struct Rng {
  std::uint64_t s;
  double uniform() {
    s = splitmix(s);
    return static_cast<double>(s >> 11) * 0x1.0p-53;
  }
};

enum class EvKind { kArrival, kStageStart, kComputeDone, kStoreDone, kPoolTrim };

struct Ev {
  EvKind kind = EvKind::kArrival;
  std::uint64_t a = 0;
  int b = 0;
};

constexpr int kHostInput = -1;
constexpr int kResponse = -2;

struct Task {
  bool active = false;
  int waiting = 0;
  Location loc;
  double compute_ms = 0.0;
  double ready = -1.0, start = -1.0, fetch_end = -1.0, compute_end = -1.0, store_end = -1.0;
  double done = -1.0;
  int fetches_left = 0;
  Phase fetch_phase = Phase::kGfuncToGfunc;
  DataId input = 0;
  std::vector<std::uint64_t> buffers;
  std::vector<DataId> outputs;
};

struct Request {
  std::uint64_t id = 0;
  int wf = 0;
  double arrival = 0.0;
  int objects = 1;
  std::vector<char> edge_on;
  std::vector<Task> tasks;
  std::vector<DataId> edge_data;
  int sinks_left = 0;
};

struct Object {
  DataId id = 0;
  std::uint64_t req = 0;
  double bytes = 0.0;
  GpuId home = -1;
  Location loc;
  std::uint64_t block = 0;
  double stored_ms = 0.0;
  int readers = 0;
  int producer = -1;  ///< histogram key of the producing gFunc
};

struct Fetch {
  std::uint64_t req = 0;
  int func = 0;
  int edge = 0;
  DataId data = 0;
  TransferPlan plan;
  std::size_t stage = 0;
  int legs_left = 0;
  Phase phase = Phase::kGfuncToGfunc;
  std::vector<FlowId> flows;
  bool demand = false;
};

}  // namespace

struct Engine::Impl {
  EngineConfig cfg;
  FluidSim sim;
  ResourceMap res;
  BandwidthMatrix matrix;
  std::vector<PinnedRing> rings;
  std::unique_ptr<TransferPlanner> planner;
  DataIndex index;
  std::vector<MemoryPool> pools;
  std::vector<double> live_bytes;
  std::map<int, FuncHistogram> hists;
  std::map<int, double> last_start;
  std::map<int, int> pending_outputs;  ///< unconsumed outputs per producing gFunc
  std::vector<std::vector<int>> gpu_funcs;
  std::vector<std::deque<std::pair<std::uint64_t, int>>> queues;
  std::vector<char> busy;
  EventQueue<Ev> events;
  Metrics metrics;
  std::map<std::uint64_t, Request> requests;
  std::map<std::uint64_t, Fetch> fetches;
  std::map<DataId, Object> objects;
  std::map<FlowId, std::uint64_t> flow_fetch;
  std::set<FlowId> background;
  std::map<std::uint64_t, FlowId> hold_flow;
  std::map<std::uint64_t, std::uint64_t> hold_alias;
  std::vector<std::map<std::uint64_t, RateDemand>> demands;
  std::map<std::uint64_t, double> demand_start;
  std::uint64_t next_request = 0;
  std::uint64_t next_fetch = 1;
  std::vector<double> min_pool;
  double trim_at = kInf;
  static constexpr double kTrimPeriodMs = 10.0;

  explicit Impl(EngineConfig c)
      : cfg(std::move(c)), index(static_cast<int>(cfg.topo.nodes.size()), cfg.index) {
    const auto& t = cfg.topo;
    if (cfg.placements.size() != cfg.workflows.size())
      throw ConfigError("engine needs one placement per workflow");
    res = ResourceMap(t, sim);
    matrix = BandwidthMatrix(t);
    for (const auto& n : t.nodes) {
      const int roots = static_cast<int>(t.roots_of_node(n.id).size());
      rings.emplace_back(default_ring_capacity(cfg.pcie, roots), cfg.pcie.pinned_cost_ms_per_mb);
      if (cfg.strategy.planner.pinned == PinnedMode::kRing) rings.back().prewarm();
    }
    auto popts = cfg.strategy.planner;
    popts.chunk_bytes = cfg.pcie.chunk_bytes;
    popts.pinned_ms_per_mb = cfg.pcie.pinned_cost_ms_per_mb;
    planner = std::make_unique<TransferPlanner>(t, res, popts, &rings);
    live_bytes.assign(t.gpu_count, 0.0);
    gpu_funcs.resize(t.gpu_count);
    queues.resize(t.gpu_count);
    busy.assign(t.gpu_count, 0);
    demands.resize(t.nodes.size());
    for (std::size_t w = 0; w < cfg.workflows.size(); ++w) {
      const auto& wf = cfg.workflows[w];
      for (std::size_t f = 0; f < wf.functions.size(); ++f) {
        const auto& loc = cfg.placements[w].at(wf.functions[f].id);
        if (!loc.on_host()) gpu_funcs.at(loc.gpu).push_back(key(static_cast<int>(w), static_cast<int>(f)));
      }
    }
    // Only GPUs hosting functions keep a pool floor.
    for (int g = 0; g < t.gpu_count; ++g) {
      const double floor = gpu_funcs[g].empty() ? 0.0 : cfg.strategy.pool_floor_bytes;
      pools.emplace_back(PoolConfig{cfg.strategy.pool, floor, 1.0, t.params.gpu_memory_bytes});
      pools.back().hold_floor(false);
      min_pool.push_back(kInf);
    }
    cfg.workflow_slo_ms.resize(cfg.workflows.size(), 0.0);
    cfg.stage_slo.resize(cfg.workflows.size());
    note_pool();
  }

  static int key(int wf, int f) { return wf * 4096 + f; }
  bool infinite() const { return cfg.strategy.planner.infinite_bandwidth; }
  double now() const { return sim.now(); }
  const Workflow& wf(const Request& r) const { return cfg.workflows[r.wf]; }

  double total_pool() const {
    double s = 0.0;
    for (const auto& p : pools) s += p.pool_bytes();
    return s;
  }
  void note_pool() { metrics.peak_pool_bytes = std::max(metrics.peak_pool_bytes, total_pool()); }

  std::vector<const FuncHistogram*> gpu_hists(GpuId g) const {
    std::vector<const FuncHistogram*> hs;
    for (int k : gpu_funcs[g]) {
      auto it = hists.find(k);
      if (it != hists.end()) hs.push_back(&it->second);
    }
    return hs;
  }
  bool window_active(GpuId g) const {
    for (const auto* h : gpu_hists(g))
      if (h->window_active(now())) return true;
    return false;
  }
  // The floor applies only while a window on the GPU is active.
  double pool_target(GpuId g) const {
    const double floor = window_active(g) ? cfg.strategy.pool_floor_bytes : 0.0;
    return faastube::pool_target(gpu_hists(g), now(), floor);
  }
  void update_floor(GpuId g) {
    pools[g].hold_floor(window_active(g));
    note_pool();
  }

  std::uint64_t gpu_alloc(GpuId g, double bytes, double& cost) {
    const auto a = pools[g].allocate(bytes);
    cost += infinite() ? 0.0 : a.cost_ms;
    note_pool();
    return a.block;
  }
  void gpu_free(GpuId g, std::uint64_t block) {
    pools[g].release(block, pool_target(g));
    if (!window_active(g)) pools[g].hold_floor(false);
    note_min(g);
    schedule_trim();
  }

  // Lowest pool size seen while a window on the GPU was active.
  void note_min(GpuId g) {
    if (window_active(g)) min_pool[g] = std::min(min_pool[g], pools[g].pool_bytes());
  }

  // Autoscale pools also shrink between releases: cached blocks above the
  // target are trimmed every kTrimPeriodMs and floors go when windows lapse.
  double next_trim_time() const {
    if (cfg.strategy.pool != PoolMode::kAutoscale) return kInf;
    double t = kInf;
    for (int g = 0; g < static_cast<int>(pools.size()); ++g) {
      const auto& p = pools[g];
      const double floor = p.floor_held() ? p.config().floor_bytes : 0.0;
      if (p.cached_bytes() - floor > 0.0 && p.pool_bytes() > pool_target(g)) t = std::min(t, now() + kTrimPeriodMs);
      if (!p.floor_held()) continue;
      for (const auto* h : gpu_hists(g))
        if (h->window_active(now())) t = std::min(t, std::nextafter(h->last_request_ms() + h->r_window(), kInf));
    }
    return t;
  }
  void schedule_trim() {
    const double t = next_trim_time();
    if (t >= trim_at) return;
    trim_at = t;
    events.push(t, {EvKind::kPoolTrim, 0, 0});
  }
  void pool_trim() {
    if (now() >= trim_at) trim_at = kInf;
    for (int g = 0; g < static_cast<int>(pools.size()); ++g) {
      pools[g].trim(pool_target(g));
      if (!window_active(g)) pools[g].hold_floor(false);
      note_min(g);
    }
    schedule_trim();
  }

  double stage_slo(int w, int f) const {
    const auto& fn = cfg.workflows[w].functions[f];
    if (fn.slo_ms > 0.0) return fn.slo_ms;
    auto it = cfg.stage_slo[w].find(fn.id);
    if (it != cfg.stage_slo[w].end() && it->second > 0.0) return it->second;
    if (cfg.workflow_slo_ms[w] > 0.0) return cfg.workflow_slo_ms[w];
    return 1000.0;
  }

  // --- arrivals -------------------------------------------------------------

  void arrive(std::uint64_t id, int w) {
    const auto& W = cfg.workflows.at(w);
    Request r;
    r.id = id;
    r.wf = w;
    r.arrival = now();
    Rng rng{splitmix(cfg.seed ^ splitmix(id + 1))};
    const double u_obj = rng.uniform();
    r.objects = cfg.all_edges ? W.objects_max
                              : W.objects_min + std::min(W.objects_max - W.objects_min,
                                                         static_cast<int>(u_obj * (W.objects_max - W.objects_min + 1)));
    r.edge_on.resize(W.edges.size());
    for (std::size_t e = 0; e < W.edges.size(); ++e) {
      const double u = rng.uniform();
      r.edge_on[e] = cfg.all_edges || u < W.edges[e].probability;
    }
    r.tasks.resize(W.functions.size());
    for (std::size_t f = 0; f < W.functions.size(); ++f) {
      const double u = rng.uniform();
      const auto& fn = W.functions[f];
      const double jitter = cfg.no_jitter ? 0.0 : fn.compute_jitter * (2.0 * u - 1.0);
      r.tasks[f].compute_ms = std::max(0.0, fn.compute_ms * (1.0 + jitter));
      r.tasks[f].loc = cfg.placements[w].at(fn.id);
    }
    r.edge_data.assign(W.edges.size(), 0);
    for (int f : W.topo_order()) {
      auto& task = r.tasks[f];
      const auto preds = W.predecessors(f);
      if (preds.empty()) {
        task.active = true;
        continue;
      }
      for (int e : preds) {
        const int from = W.index_of(W.edges[e].from);
        if (!r.edge_on[e] || !r.tasks[from].active) {
          r.edge_on[e] = 0;
          continue;
        }
        task.active = true;
        ++task.waiting;
      }
    }
    for (std::size_t e = 0; e < W.edges.size(); ++e)
      if (!r.tasks[W.index_of(W.edges[e].from)].active) r.edge_on[e] = 0;
    for (std::size_t f = 0; f < W.functions.size(); ++f) {
      if (!r.tasks[f].active) continue;
      bool sink = true;
      for (int e : W.successors(static_cast<int>(f))) sink = sink && !r.edge_on[e];
      if (sink) ++r.sinks_left;
    }
    metrics.begin(id, W.name, r.arrival, cfg.workflow_slo_ms[w]);
    auto& req = requests.emplace(id, std::move(r)).first->second;

    for (std::size_t f = 0; f < W.functions.size(); ++f) {
      auto& task = req.tasks[f];
      if (!task.active || !W.predecessors(static_cast<int>(f)).empty()) continue;
      if (W.functions[f].kind == FuncKind::kGFunc && W.input_bytes > 0.0) {
        task.input = new_object(req, -1, {task.loc.node, -1}, W.input_bytes, 0);
        index.store(task.input, {task.loc.node, -1}, W.input_bytes, now(), "host");
        objects.at(task.input).stored_ms = now();
      }
      make_ready(req, static_cast<int>(f));
    }
  }

  DataId new_object(const Request& r, GpuId home, Location loc, double bytes, std::uint64_t block) {
    const DataId id = index.unique_id();
    objects[id] = Object{id, r.id, bytes, home, loc, block, now(), 0};
    return id;
  }

  // --- task lifecycle -------------------------------------------------------

  void make_ready(Request& r, int f) {
    auto& task = r.tasks[f];
    task.ready = now();
    if (task.loc.on_host()) {
      start_task(r, f);
      return;
    }
    queues[task.loc.gpu].emplace_back(r.id, f);
    try_start(task.loc.gpu);
  }

  void try_start(GpuId g) {
    if (busy[g] || queues[g].empty()) return;
    const auto [rid, f] = queues[g].front();
    queues[g].pop_front();
    busy[g] = 1;
    start_task(requests.at(rid), f);
  }

  void start_task(Request& r, int f) {
    const auto& W = wf(r);
    auto& task = r.tasks[f];
    task.start = now();
    std::vector<std::pair<int, DataId>> inputs;
    double in_bytes = 0.0;
    if (task.input) inputs.emplace_back(kHostInput, task.input);
    for (int e : W.predecessors(f))
      if (r.edge_on[e]) inputs.emplace_back(e, r.edge_data[e]);
    for (const auto& [e, d] : inputs) in_bytes += objects.at(d).bytes;

    const int k = key(r.wf, f);
    if (!task.loc.on_host()) {
      auto lit = last_start.find(k);
      const double interval = lit == last_start.end() ? -1.0 : now() - lit->second;
      last_start[k] = now();
      // Size: data this execution holds on the GPU. Concurrency: this
      // execution's output plus outputs still waiting for consumers.
      double out_bytes = 0.0;
      for (int e : W.successors(f))
        if (r.edge_on[e]) out_bytes += W.edges[e].per_object ? W.edges[e].bytes * r.objects : W.edges[e].bytes;
      hists[k].record(now(), interval, in_bytes + out_bytes, 1.0 + pending_outputs[k]);
      update_floor(task.loc.gpu);
      note_min(task.loc.gpu);
      schedule_trim();
    }
    task.fetches_left = static_cast<int>(inputs.size());
    if (inputs.empty()) {
      task.fetch_end = now();
      events.push(now() + task.compute_ms, {EvKind::kComputeDone, r.id, f});
      return;
    }
    for (const auto& [e, d] : inputs) launch_fetch(r, f, e, d, task.loc);
  }

  void launch_fetch(Request& r, int f, int edge, DataId data, const Location& to) {
    const std::uint64_t fid = next_fetch++;
    Fetch fe;
    fe.req = r.id;
    fe.func = f;
    fe.edge = edge;
    fe.data = data;
    auto& obj = objects.at(data);
    ++obj.readers;
    // Without the unified index every fetch is one query to a remote store.
    const auto rs = index.resolve(data, to.node, now());
    const double lookup = cfg.strategy.unified_index ? rs.cost_ms : index.config().global_lookup_ms;
    double setup = infinite() ? 0.0 : lookup;
    const Location from = obj.loc;
    if (!to.on_host() && !(from == to)) r.tasks[f].buffers.push_back(gpu_alloc(to.gpu, obj.bytes, setup));
    auto* m = cfg.strategy.planner.multipath ? &matrix : nullptr;
    fe.plan = planner->plan(from, to, obj.bytes, m, fid);
    apply_changes(fe.plan.changes);
    switch (fe.plan.method) {
      case TransferMethod::kHostGpu: fe.phase = Phase::kHostToGfunc; break;
      case TransferMethod::kInterNode: fe.phase = Phase::kInternode; break;
      default: fe.phase = Phase::kGfuncToGfunc; break;
    }
    if (edge == kResponse) fe.phase = Phase::kHostToGfunc;
    if (fe.plan.stages.empty()) fe.plan.stages.push_back({});
    fe.plan.stages[0].setup_ms += setup;
    const double t0 = now() + fe.plan.stages[0].setup_ms;
    fetches.emplace(fid, std::move(fe));
    events.push(t0, {EvKind::kStageStart, fid, 0});
  }

  std::uint64_t resolve_hold(std::uint64_t h) const {
    for (auto it = hold_alias.find(h); it != hold_alias.end(); it = hold_alias.find(h)) h = it->second;
    return h;
  }

  const HeldPath* find_hold(std::uint64_t h) const {
    for (const auto& hp : matrix.holds())
      if (hp.id == h) return &hp;
    return nullptr;
  }

  void apply_changes(const std::vector<HoldChange>& changes) {
    for (const auto& c : changes) {
      if (c.new_hold != c.old_hold) hold_alias[c.old_hold] = c.new_hold;
      auto it = hold_flow.find(c.old_hold);
      if (it == hold_flow.end()) continue;
      const FlowId fl = it->second;
      if (!sim.active(fl)) continue;
      if (c.new_hold != c.old_hold) {
        sim.reroute(fl, res.path(c.path), sim.spec(fl).tail_ms);
        hold_flow.erase(it);
        hold_flow[c.new_hold] = fl;
      }
      sim.set_managed_rate(fl, c.rate_gbps, 0);
    }
  }

  void stage_start(std::uint64_t fid) {
    auto& fe = fetches.at(fid);
    const auto& stage = fe.plan.stages[fe.stage];
    fe.flows.clear();
    if (stage.legs.empty()) {
      stage_done(fid);
      return;
    }
    const bool sched = cfg.strategy.pcie_sched && fe.plan.pcie_node >= 0;
    bool any_pcie = false;
    for (const auto& leg : stage.legs) {
      FlowSpec spec;
      spec.resources = leg.resources;
      spec.bytes = leg.bytes;
      spec.rate_cap = leg.rate_cap;
      spec.tail_ms = leg.tail_ms;
      spec.owner = fid;
      std::uint64_t hold = 0;
      if (leg.hold_id) {
        hold = resolve_hold(leg.hold_id);
        if (const auto* hp = find_hold(hold)) {
          spec.resources = res.path(hp->gpus);
          spec.managed_rate = hp->rate_gbps;
        }
      }
      if (leg.pcie && sched) {
        spec.managed_rate = 0.0;
        spec.batch_bytes = cfg.pcie.batch_bytes();
        any_pcie = true;
      }
      const FlowId fl = sim.add_flow(std::move(spec));
      flow_fetch[fl] = fid;
      if (hold) hold_flow[hold] = fl;
      fe.flows.push_back(fl);
    }
    fe.legs_left = static_cast<int>(fe.flows.size());
    if (any_pcie) {
      const NodeId node = fe.plan.pcie_node;
      if (!fe.demand) {
        fe.demand = true;
        const auto& r = requests.at(fe.req);
        const double slo = stage_slo(r.wf, fe.func);
        const double infer =
            fe.edge == kResponse ? 0.0 : cfg.workflows[r.wf].functions[fe.func].infer_latency();
        RateDemand d;
        d.id = fid;
        d.bytes = fe.plan.bytes;
        d.slo_ms = slo;
        d.infer_ms = infer;
        d.rate_least = d.bytes / (std::max(slo - infer, 0.1 * slo) * kBytesPerMsPerGbps);
        d.remaining_bytes = d.bytes;
        demands[node][fid] = d;
        demand_start[fid] = now();
      }
      repartition(node);
    }
  }

  void repartition(NodeId node) {
    auto& ds = demands[node];
    if (ds.empty()) return;
    std::vector<RateDemand> list;
    for (auto& [fid, d] : ds) {
      const auto& fe = fetches.at(fid);
      double remaining = 0.0;
      for (std::size_t s = fe.stage; s < fe.plan.stages.size(); ++s)
        for (const auto& leg : fe.plan.stages[s].legs)
          if (leg.pcie) remaining += leg.bytes;
      for (FlowId fl : fe.flows)
        if (sim.active(fl) && sim.spec(fl).batch_bytes > 0.0) remaining -= sim.bytes_done(fl);
      d.elapsed_ms = now() - demand_start.at(fid);
      d.remaining_bytes = std::max(0.0, remaining);
      list.push_back(d);
    }
    const auto rates = partition(bw_all(cfg.topo, node), list);
    std::vector<std::size_t> order(list.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double sa = list[a].slack_ms(), sb = list[b].slack_ms();
      return sa != sb ? sa < sb : list[a].id < list[b].id;
    });
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      const std::size_t i = order[rank];
      const auto& fe = fetches.at(list[i].id);
      std::vector<FlowId> legs;
      for (FlowId fl : fe.flows)
        if (sim.active(fl) && sim.spec(fl).batch_bytes > 0.0) legs.push_back(fl);
      for (FlowId fl : legs)
        sim.set_managed_rate(fl, rates[i].rate_gbps / static_cast<double>(legs.size()),
                             static_cast<int>(rank));
    }
  }

  void flow_done(FlowId fl) {
    if (background.erase(fl)) return;
    auto it = flow_fetch.find(fl);
    if (it == flow_fetch.end()) return;
    const std::uint64_t fid = it->second;
    flow_fetch.erase(it);
    auto& fe = fetches.at(fid);
    if (--fe.legs_left == 0) stage_done(fid);
  }

  void stage_done(std::uint64_t fid) {
    auto& fe = fetches.at(fid);
    ++fe.stage;
    if (fe.stage < fe.plan.stages.size()) {
      events.push(now() + fe.plan.stages[fe.stage].setup_ms, {EvKind::kStageStart, fid, 0});
      return;
    }
    fetch_done(fid);
  }

  void fetch_done(std::uint64_t fid) {
    Fetch fe = std::move(fetches.at(fid));
    if (matrix.holds_any(fid)) {
      for (const auto& h : matrix.holds_of(fid)) hold_flow.erase(h.id);
      matrix.release(fid);
    }
    if (fe.demand) {
      demands[fe.plan.pcie_node].erase(fid);
      demand_start.erase(fid);
    }
    fetches.erase(fid);
    if (fe.demand) repartition(fe.plan.pcie_node);
    release_object(fe.data);

    auto& r = requests.at(fe.req);
    auto& task = r.tasks[fe.func];
    if (fe.edge == kResponse) {
      sink_done(r, fe.func);
      return;
    }
    task.fetch_phase = fe.phase;
    if (--task.fetches_left == 0) {
      task.fetch_end = now();
      events.push(now() + task.compute_ms, {EvKind::kComputeDone, r.id, fe.func});
    }
  }

  void compute_done(std::uint64_t rid, int f) {
    auto& r = requests.at(rid);
    const auto& W = wf(r);
    auto& task = r.tasks[f];
    task.compute_end = now();
    if (!task.loc.on_host())
      for (auto b : task.buffers) gpu_free(task.loc.gpu, b);
    task.buffers.clear();
    double cost = 0.0;
    for (int e : W.successors(f)) {
      if (!r.edge_on[e]) continue;
      const auto& edge = W.edges[e];
      const double bytes = edge.per_object ? edge.bytes * r.objects : edge.bytes;
      std::uint64_t block = 0;
      if (!task.loc.on_host() && bytes > 0.0) block = gpu_alloc(task.loc.gpu, bytes, cost);
      r.edge_data[e] = new_object(r, task.loc.gpu, task.loc, bytes, block);
      if (!task.loc.on_host()) {
        objects.at(r.edge_data[e]).producer = key(r.wf, f);
        ++pending_outputs[key(r.wf, f)];
      }
    }
    events.push(now() + cost, {EvKind::kStoreDone, rid, f});
  }

  void store_done(std::uint64_t rid, int f) {
    auto& r = requests.at(rid);
    const auto& W = wf(r);
    auto& task = r.tasks[f];
    task.store_end = now();
    const auto& fn = W.functions[f];
    bool sink = true;
    for (int e : W.successors(f)) {
      if (!r.edge_on[e]) continue;
      sink = false;
      auto& obj = objects.at(r.edge_data[e]);
      obj.stored_ms = now();
      index.store(obj.id, obj.loc, obj.bytes, now(), fn.id);
      if (!obj.loc.on_host()) live_bytes[obj.loc.gpu] += obj.bytes;
    }
    if (!task.loc.on_host()) {
      migrate(task.loc.gpu);
      busy[task.loc.gpu] = 0;
    }
    for (int e : W.successors(f)) {
      if (!r.edge_on[e]) continue;
      const int to = W.index_of(W.edges[e].to);
      if (--r.tasks[to].waiting == 0) make_ready(r, to);
    }
    if (sink) {
      if (task.loc.on_host() || W.response_bytes <= 0.0) {
        sink_done(r, f);
      } else {
        const DataId d = new_object(r, -1, task.loc, W.response_bytes, 0);
        index.store(d, task.loc, W.response_bytes, now(), fn.id, true);
        launch_fetch(r, f, kResponse, d, {task.loc.node, -1});
      }
    }
    if (!task.loc.on_host()) try_start(task.loc.gpu);
  }

  // --- object store ---------------------------------------------------------

  void release_object(DataId id) {
    auto it = objects.find(id);
    if (it == objects.end()) throw MissingData("object " + std::to_string(id) + " already reclaimed");
    Object obj = it->second;
    objects.erase(it);
    if (obj.producer >= 0) --pending_outputs[obj.producer];
    index.erase(id);
    if (!obj.loc.on_host() && obj.block) {
      live_bytes[obj.loc.gpu] -= obj.bytes;
      gpu_free(obj.loc.gpu, obj.block);
      if (cfg.strategy.prefetch) prefetch(obj.loc.gpu);
    }
  }

  void background_flow(std::vector<int> resources, double bytes) {
    if (infinite() || bytes <= 0.0) return;
    FlowSpec spec;
    spec.resources = std::move(resources);
    spec.bytes = bytes;
    background.insert(sim.add_flow(std::move(spec)));
  }

  void migrate(GpuId g) {
    if (!cfg.strategy.migration) return;
    const double pressure = live_bytes[g] - cfg.strategy.store_capacity_bytes;
    if (pressure <= 0.0) return;
    std::vector<StoredObject> list;
    for (const auto& [id, o] : objects) {
      if (o.loc.on_host() || o.loc.gpu != g || o.readers > 0 || !o.block) continue;
      list.push_back({id, o.bytes, static_cast<std::int64_t>(o.req), o.stored_ms, true, ObjLoc::kGpu});
    }
    const auto plan = migration_plan(list, pressure, cfg.strategy.policy);
    const NodeId node = cfg.topo.node_of(g);
    for (const auto& ev : plan.evictions) {
      auto& o = objects.at(ev.id);
      live_bytes[g] -= o.bytes;
      gpu_free(g, o.block);
      o.block = 0;
      o.loc = {node, -1};
      index.relocate(o.id, o.loc);
      metrics.migrated_bytes += o.bytes;
      background_flow({res.root_up(cfg.topo.root_of(g))}, o.bytes);
    }
  }

  void prefetch(GpuId g) {
    std::vector<StoredObject> list;
    for (const auto& [id, o] : objects) {
      if (o.home != g || !o.loc.on_host() || o.readers > 0) continue;
      list.push_back({id, o.bytes, static_cast<std::int64_t>(o.req), o.stored_ms, true, ObjLoc::kHost});
    }
    if (list.empty()) return;
    const double room = cfg.strategy.store_capacity_bytes - live_bytes[g];
    for (DataId id : prefetch_back(list, room)) {
      auto& o = objects.at(id);
      double cost = 0.0;
      o.block = gpu_alloc(g, o.bytes, cost);
      o.loc = {cfg.topo.node_of(g), g};
      o.stored_ms = now();
      live_bytes[g] += o.bytes;
      index.relocate(id, o.loc);
      background_flow({res.root_down(cfg.topo.root_of(g))}, o.bytes);
    }
  }

  // --- completion -----------------------------------------------------------

  void sink_done(Request& r, int f) {
    r.tasks[f].done = now();
    if (--r.sinks_left > 0) return;
    const auto& W = wf(r);
    int cur = -1;
    for (std::size_t i = 0; i < r.tasks.size(); ++i) {
      const auto& t = r.tasks[i];
      if (t.done >= 0.0 && (cur < 0 || t.done > r.tasks[cur].done)) cur = static_cast<int>(i);
    }
    const auto id = r.id;
    metrics.record(id, Phase::kHostToGfunc, r.tasks[cur].done - r.tasks[cur].store_end);
    while (cur >= 0) {
      const auto& t = r.tasks[cur];
      metrics.record(id, Phase::kGfuncToGfunc, t.store_end - t.compute_end);
      metrics.record(id, Phase::kCompute, t.compute_end - t.fetch_end);
      metrics.record(id, t.fetch_phase, t.fetch_end - t.start);
      metrics.record(id, Phase::kQueuing, t.start - t.ready);
      int pred = -1;
      for (int e : W.predecessors(cur)) {
        if (!r.edge_on[e]) continue;
        const int p = W.index_of(W.edges[e].from);
        if (pred < 0 || r.tasks[p].store_end > r.tasks[pred].store_end) pred = p;
      }
      cur = pred;
    }
    metrics.finish(id, now());
  }

  // --- loop -----------------------------------------------------------------

  void handle(const Ev& ev) {
    switch (ev.kind) {
      case EvKind::kArrival: arrive(ev.a, ev.b); break;
      case EvKind::kStageStart: stage_start(ev.a); break;
      case EvKind::kComputeDone: compute_done(ev.a, ev.b); break;
      case EvKind::kStoreDone: store_done(ev.a, ev.b); break;
      case EvKind::kPoolTrim: pool_trim(); break;
    }
  }

  void run_until(double end_ms) {
    for (;;) {
      const double tq = events.top_time();
      const double tf = sim.next_event_time();
      const double t = std::min(tq, tf);
      if (std::isinf(t) || t > end_ms) break;
      const auto done = sim.advance_to(t);
      for (FlowId fl : done) flow_done(fl);
      if (!done.empty()) continue;
      if (events.top_time() <= t) handle(events.pop().payload);
    }
    if (std::isfinite(end_ms) && end_ms > sim.now())
      for (FlowId fl : sim.advance_to(end_ms)) flow_done(fl);
  }
};

Engine::Engine(EngineConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}
Engine::~Engine() = default;

void Engine::submit(const std::vector<Arrival>& arrivals) {
  for (const auto& a : arrivals) {
    if (a.workflow < 0 || a.workflow >= static_cast<int>(impl_->cfg.workflows.size()))
      throw ConfigError("arrival names an unknown workflow");
    impl_->events.push(a.time_ms, {EvKind::kArrival, impl_->next_request++, a.workflow});
  }
}

const Metrics& Engine::run_until(double end_ms) {
  impl_->run_until(end_ms);
  return impl_->metrics;
}

const Metrics& Engine::metrics() const { return impl_->metrics; }
double Engine::now() const { return impl_->now(); }
double Engine::pool_bytes() const { return impl_->total_pool(); }
std::vector<double> Engine::min_pool_bytes() const { return impl_->min_pool; }
const FluidSim& Engine::fluid() const { return impl_->sim; }

std::map<std::string, double> Engine::stage_times(std::uint64_t request) const {
  const auto& r = impl_->requests.at(request);
  const auto& W = impl_->cfg.workflows[r.wf];
  std::map<std::string, double> out;
  for (std::size_t f = 0; f < r.tasks.size(); ++f) {
    const auto& t = r.tasks[f];
    if (t.active && t.compute_end >= 0.0) out[W.functions[f].id] = t.compute_end - t.start;
  }
  return out;
}

Calibration calibrate(const EngineConfig& cfg, int workflow) {
  EngineConfig c = cfg;
  c.all_edges = true;
  c.no_jitter = true;
  c.strategy.pcie_sched = false;
  Engine e(std::move(c));
  e.submit({{0.0, workflow}});
  const auto& m = e.run_until(kInf);
  const auto& rec = m.request(0);
  if (!rec.finished()) throw SchedulingError("calibration request did not finish");
  return {rec.finish_ms - rec.arrival_ms, e.stage_times(0)};
}

}  // namespace faastube
