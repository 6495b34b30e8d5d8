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

#include "gridweave/kernel.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

namespace gridweave {

TimeGrant lbts(const std::vector<TimeUs>& local_minima, TimeUs pending_inter_lab_min, TimeUs duration_us) {
  TimeUs bound = pending_inter_lab_min;
  for (TimeUs t : local_minima) bound = std::min(bound, t);
  if (bound == kTimeInfinity) return {duration_us};
  return {bound};
}

TimeGrant lab_grant(const std::string& lab, const std::map<std::string, TimeUs>& local_minima,
                    TimeUs duration_us) {
  TimeUs bound = kTimeInfinity;
  for (const auto& [other, t] : local_minima) {
    if (other == lab || t == kTimeInfinity) continue;
    bound = std::min(bound, lab < other ? t : t - 1);
  }
  return {std::min(bound, duration_us)};
}

struct Kernel::OutRoute {
  Route route;
  std::string quantity;
  std::string unit;
  ChannelState channel;
  std::int64_t next_seq = 0;
  bool local = false;
};

struct Kernel::Component {
  std::string id;
  std::string lab;
  Launch launch;
  std::unique_ptr<Federate> federate;
  std::optional<TimeUs> next;
  std::optional<TimeUs> last_step;
  std::set<PendingEntry> pending;
  std::vector<OutRoute*> out_routes;  // route_id order
  std::map<std::int64_t, std::string> in_port_of_route;
};

Kernel::Kernel(const ScenarioModel& model, const CompiledScenario& compiled,
               const std::vector<std::string>& hosted_labs, const ModelRegistry& registry)
    : run_(model.run), registry_(registry) {
  for (const auto& lab : hosted_labs) {
    const auto& plan = compiled.plans.at(lab);
    for (const auto& launch : plan.launches) {
      auto c = std::make_unique<Component>();
      c->id = launch.component;
      c->lab = lab;
      c->launch = launch;
      components_.push_back(std::move(c));
    }
  }
  std::sort(components_.begin(), components_.end(), [](const auto& a, const auto& b) {
    return std::tie(a->lab, a->id) < std::tie(b->lab, b->id);
  });
  for (auto& c : components_) by_id_.emplace(c->id, c.get());

  auto consider = [&](const Route& r) {
    if (const auto* to = model.find_component(r.to.component)) route_destination_[r.route_id] = to->lab;
    if (auto it = by_id_.find(r.to.component); it != by_id_.end()) {
      it->second->in_port_of_route[r.route_id] = r.to.port;
      receivers_[r.route_id] = it->second;
    }
    auto from = by_id_.find(r.from.component);
    if (from == by_id_.end() || routes_.contains(r.route_id)) return;
    auto out = std::make_unique<OutRoute>();
    out->route = r;
    const auto* decl = model.find_component(r.from.component);
    if (const PortDecl* port = decl ? decl->find_port(r.from.port) : nullptr) {
      out->quantity = port->quantity;
      out->unit = port->unit;
    }
    out->channel = ChannelState::seeded(r.channel.seed ^ run_.seed, r.route_id);
    out->local = by_id_.contains(r.to.component);
    routes_.emplace(r.route_id, std::move(out));
  };
  for (const auto& lab : hosted_labs) {
    const auto& plan = compiled.plans.at(lab);
    for (const auto& r : plan.local_routes) consider(r);
    for (const auto& r : plan.egress_routes) consider(r);
    for (const auto& r : plan.ingress_routes) consider(r);
  }
  for (auto& [id, out] : routes_) by_id_.at(out->route.from.component)->out_routes.push_back(out.get());
}

Kernel::~Kernel() = default;

void Kernel::start() {
  for (auto& c : components_) {
    c->federate = registry_.create(c->launch.model);
    if (!c->federate) {
      throw Error("UnknownModel", "UnknownModel: component '" + c->id + "' names model '" + c->launch.model + "'");
    }
  }
  for (auto& c : components_) {
    std::optional<TimeUs> first;
    try {
      first = c->federate->init(0, c->launch.params);
    } catch (const std::exception& e) {
      throw Error("InitFailure", "InitFailure: component '" + c->id + "': " + e.what());
    }
    if (c->launch.kind == ComponentKind::Continuous) {
      first = c->launch.step_us.value_or(1);
    } else if (first && *first < 0) {
      throw Error("InitFailure", "InitFailure: component '" + c->id + "' scheduled before t0");
    }
    reschedule(*c, first);
  }
  t_global_ = 0;
  started_ = true;
}

void Kernel::reschedule(Component& c, std::optional<TimeUs> next) {
  if (c.next) schedule_.erase({*c.next, c.lab, c.id});
  c.next = next;
  if (c.next) schedule_.emplace(*c.next, c.lab, c.id);
}

std::optional<std::string> Kernel::next_component() const {
  if (schedule_.empty() || stopped_) return std::nullopt;
  return std::get<2>(*schedule_.begin());
}

TimeUs Kernel::next_time() const {
  if (schedule_.empty() || stopped_) return kTimeInfinity;
  return std::get<0>(*schedule_.begin());
}

std::optional<TimeUs> Kernel::next_step(const std::string& component) const {
  auto it = by_id_.find(component);
  if (it == by_id_.end()) return std::nullopt;
  return it->second->next;
}

void Kernel::set_grant(TimeUs granted_until_us) {
  if (granted_until_us < grant_ && grant_ != kTimeInfinity) {
    throw Error("KernelError", "time grants must be nondecreasing");
  }
  grant_ = granted_until_us;
}

void Kernel::fail(Component& c, const std::string& what) {
  const std::string message = "StepFailure: component '" + c.id + "' at t=" + std::to_string(t_global_) + ": " + what;
  trace_.aborted = true;
  trace_.failure = message;
  stop_all(StopReason::ComponentFailure, t_global_);
  throw Error("StepFailure", message);
}

void Kernel::advance(const std::string& component) {
  if (!started_ || stopped_) throw Error("KernelError", "advance() outside a running kernel");
  auto next = next_component();
  if (!next || *next != component) throw Error("KernelError", "advance() must step next_component()");
  Component& c = *by_id_.at(component);
  const TimeUs t = *c.next;
  if (t > grant_) throw Error("KernelError", "step at " + std::to_string(t) + " exceeds time grant");
  if (t < t_global_) throw Error("CausalityViolation", "CausalityViolation: global time would decrease");
  t_global_ = t;

  std::vector<PortValue> inputs;
  while (!c.pending.empty() && c.pending.begin()->t_deliver_us <= t) {
    auto node = c.pending.extract(c.pending.begin());
    const auto& entry = node.value();
    const std::string& port = c.in_port_of_route.at(entry.route_id);
    trace_.records.push_back({entry.t_deliver_us, TraceKind::Deliver, c.id, port, entry.envelope.value,
                              entry.route_id, entry.seq, std::nullopt});
    auto it = std::find_if(inputs.begin(), inputs.end(), [&](const PortValue& pv) { return pv.port == port; });
    if (it == inputs.end()) {
      inputs.push_back({port, entry.envelope.value});
    } else {
      it->value = entry.envelope.value;
    }
  }
  trace_.records.push_back({t, TraceKind::Step, c.id, std::nullopt, std::nullopt, std::nullopt, std::nullopt,
                            std::nullopt});

  StepResult result;
  try {
    result = c.federate->step(t, inputs);
  } catch (const std::exception& e) {
    fail(c, e.what());
  }
  c.last_step = t;
  if (c.launch.kind == ComponentKind::Continuous) {
    result.next_step = t + c.launch.step_us.value_or(1);
  } else if (result.next_step && *result.next_step <= t) {
    fail(c, "next step " + std::to_string(*result.next_step) + " is not after " + std::to_string(t));
  }

  for (OutRoute* out : c.out_routes) {
    auto produced = std::find_if(result.outputs.rbegin(), result.outputs.rend(),
                                 [&](const PortValue& pv) { return pv.port == out->route.from.port; });
    if (produced == result.outputs.rend()) continue;

    Envelope env;
    env.route_id = out->route.route_id;
    env.seq = out->next_seq++;
    env.t_send_us = t;
    env.experiment_id = run_.experiment_id;
    env.quantity = out->quantity;
    env.unit = out->unit;
    env.value = produced->value;
    if (out->route.adapter) {
      try {
        auto adapted = adapt(env.value, env.unit, env.quantity, *out->route.adapter);
        env.value = adapted.value;
        env.unit = adapted.unit;
        env.quantity = adapted.quantity;
      } catch (const Error& e) {
        fail(c, e.what());
      }
    }
    env.t_deliver_us = env.t_send_us;
    auto outcome = route(env, out->route.channel, out->channel);
    if (outcome.dropped) continue;
    env.t_deliver_us = outcome.t_deliver_us;
    if (env.t_deliver_us < t_global_) {
      throw Error("CausalityViolation", "CausalityViolation: delivery before current time");
    }
    if (out->local) {
      auto& dest = *by_id_.at(out->route.to.component);
      dest.pending.insert({env.t_deliver_us, env.route_id, env.seq, env});
    } else {
      outbox_.push_back(std::move(env));
    }
  }
  reschedule(c, result.next_step);
}

void Kernel::run_until(TimeUs limit) {
  const TimeUs bound = std::min({limit, grant_, run_.duration_us});
  while (auto c = next_component()) {
    if (next_time() > bound) break;
    advance(*c);
  }
}

void Kernel::ingest(const Envelope& envelope) {
  auto receiver = receivers_.find(envelope.route_id);
  if (receiver == receivers_.end()) {
    throw Error("KernelError", "envelope for route " + std::to_string(envelope.route_id) + " has no local receiver");
  }
  Component* dest = receiver->second;
  if (dest->last_step && envelope.t_deliver_us < *dest->last_step) {
    throw Error("CausalityViolation", "CausalityViolation: remote delivery at " +
                                          std::to_string(envelope.t_deliver_us) + " after receiver stepped at " +
                                          std::to_string(*dest->last_step));
  }
  dest->pending.insert({envelope.t_deliver_us, envelope.route_id, envelope.seq, envelope});
}

std::vector<Envelope> Kernel::take_outbox() { return std::exchange(outbox_, {}); }

void Kernel::stop_all(StopReason reason, TimeUs t_us) {
  if (stopped_) return;
  stopped_ = true;
  for (auto& c : components_) {
    if (c->federate) {
      try {
        c->federate->stop(reason);
      } catch (const std::exception&) {
        // A failing stop must not prevent the others from being told.
      }
    }
    trace_.records.push_back({t_us, TraceKind::Stop, c->id, std::nullopt, std::nullopt, std::nullopt, std::nullopt,
                              std::string(to_string(reason))});
  }
}

std::size_t Kernel::pending_count() const {
  std::size_t n = 0;
  for (const auto& c : components_) n += c->pending.size();
  return n;
}

const ChannelState* Kernel::channel_state(std::int64_t route_id) const {
  auto it = routes_.find(route_id);
  return it == routes_.end() ? nullptr : &it->second->channel;
}

const std::string& Kernel::route_destination_lab(std::int64_t route_id) const {
  auto it = route_destination_.find(route_id);
  if (it == route_destination_.end()) throw Error("KernelError", "unknown route " + std::to_string(route_id));
  return it->second;
}

Trace run_to_completion(Kernel& kernel, const RunConfig& run) {
  using Clock = std::chrono::steady_clock;
  const auto wall_start = Clock::now();
  try {
    while (auto c = kernel.next_component()) {
      const TimeUs t = kernel.next_time();
      if (t > run.duration_us) break;
      if (run.rt_factor) {
        const auto target = wall_start + std::chrono::duration_cast<Clock::duration>(
                                             std::chrono::duration<double, std::micro>(static_cast<double>(t) /
                                                                                       *run.rt_factor));
        std::this_thread::sleep_until(target);
      }
      kernel.advance(*c);
    }
    kernel.stop_all(StopReason::Completed, run.duration_us);
  } catch (const Error& e) {
    if (e.code() != "StepFailure") throw;
  }
  return kernel.trace();
}

}  // namespace gridweave
