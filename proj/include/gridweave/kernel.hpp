/*
 * Copyright 2026 The Gridweave Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "gridweave/bus.hpp"
#include "gridweave/federate.hpp"
#include "gridweave/plan.hpp"
#include "gridweave/scenario.hpp"
#include "gridweave/trace.hpp"

namespace gridweave {

struct TimeGrant {
  TimeUs granted_until_us = 0;

  bool operator==(const TimeGrant&) const = default;
};

/// Lower bound on timestamp: min of every lab's local minimum and the
/// pending inter-lab delivery minimum. All-infinite inputs grant the run
/// duration (the run then terminates).
TimeGrant lbts(const std::vector<TimeUs>& local_minima, TimeUs pending_inter_lab_min, TimeUs duration_us);

/// Per-lab grant that reproduces the single-process order (time, lab,
/// component) with zero lookahead: lab L may run every step at t <= grant
/// where grant = min over other labs K of (t_K if L < K else t_K - 1),
/// capped at the run duration.
TimeGrant lab_grant(const std::string& lab, const std::map<std::string, TimeUs>& local_minima,
                    TimeUs duration_us);

/// A pending delivery, ordered by (t_deliver_us, route_id, seq).
struct PendingEntry {
  TimeUs t_deliver_us = 0;
  std::int64_t route_id = 0;
  std::int64_t seq = 0;
  Envelope envelope;

  bool operator<(const PendingEntry& other) const {
    return std::tie(t_deliver_us, route_id, seq) < std::tie(other.t_deliver_us, other.route_id, other.seq);
  }
};

/// Deterministic single-threaded co-simulation kernel for the components of
/// one or more labs. Routes whose destination is not hosted here go to the
/// outbox for the federation layer.
class Kernel {
 public:
  Kernel(const ScenarioModel& model, const CompiledScenario& compiled, const std::vector<std::string>& hosted_labs,
         const ModelRegistry& registry);
  ~Kernel();

  Kernel(const Kernel&) = delete;
  Kernel& operator=(const Kernel&) = delete;

  /// Instantiates and initializes every hosted component at t0 = 0.
  /// Throws Error("UnknownModel") or Error("InitFailure").
  void start();

  /// Component with the smallest next step, ties by (lab id, component id).
  std::optional<std::string> next_component() const;
  /// Time of next_component(), kTimeInfinity when idle.
  TimeUs next_time() const;
  /// Next scheduled step of a component; nullopt once it is Done.
  std::optional<TimeUs> next_step(const std::string& component) const;

  /// Steps `component`, which must equal next_component(). Throws
  /// Error("StepFailure") after stopping every component with
  /// component_failure, or Error("CausalityViolation") on a kernel bug.
  void advance(const std::string& component);

  /// Advances while the next step is at or before min(limit, duration).
  void run_until(TimeUs limit);

  /// Enqueues an envelope that arrived from another lab.
  void ingest(const Envelope& envelope);
  /// Envelopes produced for other labs since the last call, in send order.
  std::vector<Envelope> take_outbox();

  /// Records and forwards stop to every component; later calls are no-ops.
  void stop_all(StopReason reason, TimeUs t_us);
  bool stopped() const { return stopped_; }

  /// Caps step times in federated mode; advance() refuses to step past it.
  void set_grant(TimeUs granted_until_us);

  TimeUs t_global() const { return t_global_; }
  TimeUs duration() const { return run_.duration_us; }
  const RunConfig& run() const { return run_; }
  const Trace& trace() const { return trace_; }
  Trace& trace() { return trace_; }
  std::size_t pending_count() const;
  const ChannelState* channel_state(std::int64_t route_id) const;
  /// Destination lab of a route known to this kernel.
  const std::string& route_destination_lab(std::int64_t route_id) const;

 private:
  struct Component;
  struct OutRoute;

  void reschedule(Component& c, std::optional<TimeUs> next);
  [[noreturn]] void fail(Component& c, const std::string& what);

  RunConfig run_;
  const ModelRegistry& registry_;
  std::vector<std::unique_ptr<Component>> components_;  // (lab, id) order
  std::map<std::string, Component*, std::less<>> by_id_;
  std::set<std::tuple<TimeUs, std::string, std::string>> schedule_;  // (next, lab, id)
  std::map<std::int64_t, std::unique_ptr<OutRoute>> routes_;
  std::map<std::int64_t, std::string> route_destination_;
  std::map<std::int64_t, Component*> receivers_;  // hosted receiver per route
  std::vector<Envelope> outbox_;
  TimeUs t_global_ = 0;
  TimeUs grant_ = kTimeInfinity;
  bool started_ = false;
  bool stopped_ = false;
  Trace trace_;
};

/// Drives a started single-process kernel to the end of the run: loops
/// next_component/advance until every component is Done or the next step
/// lies beyond the duration, then stops everything with "completed". With
/// rt_factor set, sleeps so simulated time runs at rt_factor x wall clock.
/// A component failure yields an aborted trace.
Trace run_to_completion(Kernel& kernel, const RunConfig& run);

}  // namespace gridweave
