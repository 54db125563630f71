// SPDX-FileCopyrightText: Copyright (c) 2026 The FaaSTube-Sim Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "faastube/common.hpp"

namespace faastube {

/// Min-heap of timed events; equal timestamps pop in insertion order.
template <class T>
class EventQueue {
 public:
  struct Entry {
    double time = 0.0;
    std::uint64_t seq = 0;
    T payload;
  };

  std::uint64_t push(double time, T payload) {
    if (!(time >= 0.0)) throw SchedulingError("event scheduled at negative or NaN time");
    heap_.push_back({time, next_seq_, std::move(payload)});
    std::push_heap(heap_.begin(), heap_.end(), later);
    return next_seq_++;
  }

  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  double top_time() const { return heap_.empty() ? kInf : heap_.front().time; }

  Entry pop() {
    std::pop_heap(heap_.begin(), heap_.end(), later);
    Entry e = std::move(heap_.back());
    heap_.pop_back();
    return e;
  }

 private:
  static bool later(const Entry& a, const Entry& b) {
    return a.time != b.time ? a.time > b.time : a.seq > b.seq;
  }

  std::vector<Entry> heap_;
  std::uint64_t next_seq_ = 0;
};

/// One flow as seen by the rate allocator.
struct AllocInput {
  std::vector<int> resources;
  double rate_cap = kInf;
  double managed_rate = -1.0;  ///< scheduler-assigned rate; < 0 means fair share
  int priority = 0;            ///< managed flows are served in ascending priority
  double locked_rate = -1.0;   ///< rate frozen until a batch boundary; < 0 when free
};

/// Max-min fair water-filling of `residual` among flows with per-flow caps.
/// Flows with an empty resource list get their cap.
std::vector<double> water_fill(std::vector<double> residual,
                               const std::vector<std::vector<int>>& paths,
                               const std::vector<double>& caps);

/// Rates for one allocation round: locked flows keep at least their rate, managed flows
/// receive their assignment (clipped to availability) in priority order, the
/// rest share what is left max-min fairly, and any leftover tops up managed
/// flows.
std::vector<double> allocate_rates(const std::vector<double>& capacity,
                                   const std::vector<AllocInput>& flows);

using FlowId = std::uint64_t;

struct FlowSpec {
  std::vector<int> resources;
  double bytes = 0.0;
  double rate_cap = kInf;
  double managed_rate = -1.0;
  int priority = 0;
  double batch_bytes = 0.0;  ///< > 0 locks the rate for each batch of this many bytes
  double tail_ms = 0.0;      ///< pipeline drain added after the last byte
  OwnerId owner = 0;
};

/// Fluid-flow transfer model: rates are piecewise constant and change only
/// when a flow starts, finishes, crosses a batch boundary or is re-assigned.
class FluidSim {
 public:
  int add_resource(std::string name, double capacity_gbps);
  int resource_count() const { return static_cast<int>(capacity_.size()); }
  const std::string& resource_name(int r) const { return names_.at(r); }
  double capacity(int r) const { return capacity_.at(r); }

  double now() const { return now_; }
  FlowId add_flow(FlowSpec spec);
  /// New managed rate; applies immediately if the flow is between batches.
  void set_managed_rate(FlowId id, double gbps, int priority);
  /// Moves an unfinished flow onto other resources.
  void reroute(FlowId id, std::vector<int> resources, double tail_ms);
  bool active(FlowId id) const { return flows_.count(id) > 0; }
  double rate(FlowId id);
  double bytes_done(FlowId id) const { return flows_.at(id).done; }
  const FlowSpec& spec(FlowId id) const { return flows_.at(id).spec; }
  std::vector<FlowId> active_flows() const;
  std::size_t flow_count() const { return flows_.size(); }

  /// Time of the next completion or batch boundary; kInf when idle.
  double next_event_time();
  /// Advances to `t` (not earlier than now). Returns flows whose last byte and
  /// tail finished at or before `t`, in completion order.
  std::vector<FlowId> advance_to(double t);

  /// Sum of current rates over each resource; used by conservation checks.
  std::vector<double> resource_load();
  std::uint64_t reallocations() const { return reallocations_; }

 private:
  struct Flow {
    FlowSpec spec;
    double done = 0.0;
    double rate = 0.0;
    double lock_until = -1.0;  ///< byte mark ending the locked batch; < 0 when free
    double tail_end = -1.0;    ///< set once all bytes moved
  };

  void reallocate();
  double target_bytes(const Flow& f) const;

  std::vector<std::string> names_;
  std::vector<double> capacity_;
  std::map<FlowId, Flow> flows_;
  FlowId next_id_ = 1;
  double now_ = 0.0;
  bool dirty_ = false;
  std::uint64_t reallocations_ = 0;
};

/// Store-and-forward chunked transfer over hops with the given bandwidths:
/// size / b_min plus one chunk time on every hop except the slowest.
double pipeline_latency(double size_bytes, const std::vector<double>& hop_gbps,
                        double chunk_bytes);

}  // namespace faastube
