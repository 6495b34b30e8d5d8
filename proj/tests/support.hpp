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

// Helpers shared by the unit tests and the acceptance binary.
#pragma once

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "gridweave/federation.hpp"
#include "gridweave/kernel.hpp"
#include "gridweave/plan.hpp"
#include "gridweave/scenario.hpp"

namespace gwtest {

using namespace gridweave;

inline std::string fixture_path(const std::string& name) { return std::string(GRIDWEAVE_FIXTURES) + "/" + name; }

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Code of the gridweave::Error thrown by `f`, empty when nothing is thrown.
template <class F>
std::string error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

inline ScenarioModel load_fixture(const std::string& name) { return parse_scenario(read_text(fixture_path(name))); }

// Test model. Emits its own step time (as a double) on every out-port named
// in params.outputs, so a delivered value is the envelope's send time.
//   interval_us  DiscreteEvent period (default 1 s)
//   first_us     first step (default interval_us)
//   fail_at_us   throw when stepped at this time
//   until_us     Done after this time
class Relay final : public Federate {
 public:
  using Log = std::vector<std::tuple<TimeUs, std::vector<PortValue>>>;
  explicit Relay(std::shared_ptr<Log> log = nullptr) : log_(std::move(log)) {}

  std::optional<TimeUs> init(TimeUs t0_us, const Json& params) override {
    interval_ = params.value("interval_us", TimeUs{1'000'000});
    if (interval_ < 1) throw Error("BadParams", "interval_us must be >= 1");
    if (params.contains("outputs")) outputs_ = params.at("outputs").get<std::vector<std::string>>();
    if (params.contains("fail_at_us")) fail_at_ = params.at("fail_at_us").get<TimeUs>();
    if (params.contains("until_us")) until_ = params.at("until_us").get<TimeUs>();
    return t0_us + params.value("first_us", interval_);
  }

  StepResult step(TimeUs t_us, const std::vector<PortValue>& inputs) override {
    if (fail_at_ && *fail_at_ == t_us) throw std::runtime_error("relay told to fail");
    if (log_) log_->emplace_back(t_us, inputs);
    StepResult result;
    for (const auto& port : outputs_) result.outputs.push_back({port, static_cast<double>(t_us)});
    if (!until_ || t_us + interval_ <= *until_) result.next_step = t_us + interval_;
    return result;
  }

  void stop(StopReason reason) override {
    ++stops_;
    last_reason_ = reason;
  }

  int stops_ = 0;
  StopReason last_reason_ = StopReason::Completed;

 private:
  std::shared_ptr<Log> log_;
  TimeUs interval_ = 1'000'000;
  std::vector<std::string> outputs_;
  std::optional<TimeUs> fail_at_;
  std::optional<TimeUs> until_;
};

inline ModelRegistry test_registry() {
  ModelRegistry registry = ModelRegistry::builtin();
  registry.add("relay", [] { return std::make_unique<Relay>(); });
  return registry;
}

// ---------------------------------------------------------------------------
// Scenario builders

inline PortDecl port(std::string name, PortDirection dir, std::string quantity = "signal", std::string unit = "1") {
  return {std::move(name), dir, std::move(quantity), std::move(unit)};
}

inline ComponentDecl relay(std::string id, std::string lab, Json params, std::vector<PortDecl> ports,
                           std::optional<TimeUs> continuous_step = std::nullopt) {
  ComponentDecl c;
  c.id = std::move(id);
  c.lab = std::move(lab);
  c.kind = continuous_step ? ComponentKind::Continuous : ComponentKind::DiscreteEvent;
  c.step_us = continuous_step;
  c.model = {"relay", params.is_null() ? Json::object() : std::move(params)};
  c.ports = std::move(ports);
  return c;
}

inline LinkDecl link(std::string from, std::string from_port, std::string to, std::string to_port,
                     ChannelModel channel = {}) {
  return {{std::move(from), std::move(from_port)}, {std::move(to), std::move(to_port)}, channel};
}

inline ScenarioModel scenario(std::vector<std::string> labs, std::vector<ComponentDecl> components,
                              std::vector<LinkDecl> links, TimeUs duration_us, std::string experiment = "exp") {
  ScenarioModel m;
  m.id = experiment;
  std::uint16_t port_no = 7841;
  for (auto& id : labs) m.labs.push_back({id, "127.0.0.1:" + std::to_string(port_no++), ""});
  m.components = std::move(components);
  m.links = std::move(links);
  m.run.duration_us = duration_us;
  m.run.experiment_id = std::move(experiment);
  return m;
}

struct RandomOptions {
  int max_labs = 3;
  bool impaired_channels = true;
};

// Valid random scenario built from relays. Retries until validate() passes.
inline ScenarioModel random_scenario(std::mt19937_64& rng, const RandomOptions& opt = {}) {
  static const std::vector<std::string> kLabs{"alpha", "beta", "gamma"};
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto chance = [&](double p) { return std::bernoulli_distribution(p)(rng); };
  while (true) {
    const int n_labs = pick(1, opt.max_labs);
    std::vector<std::string> labs(kLabs.begin(), kLabs.begin() + n_labs);
    std::vector<ComponentDecl> comps;
    const int n_comps = pick(1, 6);
    for (int i = 0; i < n_comps; ++i) {
      std::vector<PortDecl> ports{port("o0", PortDirection::Out), port("o1", PortDirection::Out),
                                  port("i0", PortDirection::In), port("i1", PortDirection::In)};
      const std::string lab = labs[static_cast<std::size_t>(pick(0, n_labs - 1))];
      if (chance(0.3)) {
        const TimeUs step = std::vector<TimeUs>{250'000, 1'000'000, 1'500'000}[static_cast<std::size_t>(pick(0, 2))];
        comps.push_back(relay("c" + std::to_string(i), lab, {{"outputs", {"o0", "o1"}}}, ports, step));
      } else {
        const TimeUs interval =
            std::vector<TimeUs>{500'000, 1'000'000, 2'000'000, 3'000'000}[static_cast<std::size_t>(pick(0, 3))];
        const TimeUs first = std::uniform_int_distribution<TimeUs>(0, interval)(rng);
        comps.push_back(relay("c" + std::to_string(i), lab,
                              {{"interval_us", interval}, {"first_us", first}, {"outputs", {"o0", "o1"}}}, ports));
      }
    }
    std::vector<LinkDecl> links;
    const int n_links = pick(0, 8);
    for (int i = 0; i < n_links; ++i) {
      ChannelModel ch;
      if (opt.impaired_channels && chance(0.5)) {
        ch.latency_us = pick(0, 20'000);
        ch.jitter_us = pick(0, static_cast<int>(ch.latency_us));
        ch.loss_prob = std::vector<double>{0.0, 0.1, 0.5}[static_cast<std::size_t>(pick(0, 2))];
        ch.bandwidth_Bps = std::vector<std::uint64_t>{0, 2'000, 50'000}[static_cast<std::size_t>(pick(0, 2))];
        ch.reorder_allowed = chance(0.5);
        ch.seed = rng();
      }
      links.push_back(link("c" + std::to_string(pick(0, n_comps - 1)), chance(0.5) ? "o0" : "o1",
                           "c" + std::to_string(pick(0, n_comps - 1)), chance(0.5) ? "i0" : "i1", ch));
    }
    auto model = scenario(labs, comps, links, pick(1, 20) * TimeUs{1'000'000}, "rnd");
    model.run.seed = rng();
    // Labs without components are legal but pointless here.
    std::erase_if(model.labs, [&](const LabDecl& l) {
      return std::none_of(model.components.begin(), model.components.end(),
                          [&](const ComponentDecl& c) { return c.lab == l.id; });
    });
    if (validate(model).empty()) return model;
  }
}

// ---------------------------------------------------------------------------
// Execution

inline Trace run_single(const ScenarioModel& model, const ModelRegistry& registry) {
  const CompiledScenario compiled = compile(model);
  std::vector<std::string> labs;
  for (const auto& [lab, plan] : compiled.plans) labs.push_back(lab);
  Kernel kernel(model, compiled, labs, registry);
  kernel.start();
  return run_to_completion(kernel, model.run);
}

// Socket pairs between the master lab and every member lab, reusable by any
// number of experiments over the same lab set.
class Federation {
 public:
  Federation(const std::string& master, const std::vector<std::string>& members) : master_(master) {
    for (const auto& m : members) {
      auto [a, b] = socket_pair();
      master_side_[m] = std::make_unique<Session>(std::move(a), master);
      member_side_[m] = std::make_unique<Session>(std::move(b), m);
    }
  }

  // Runs one experiment across the labs; `ready` is called by every lab once
  // its handshake is done.
  std::map<std::string, FederatedResult> run(const ScenarioModel& model, const ModelRegistry& registry,
                                             const std::function<void()>& ready = {}) {
    const CompiledScenario compiled = compile(model);
    const std::string& experiment = model.run.experiment_id;
    std::map<std::string, FederatedResult> results;
    std::mutex mutex;
    std::vector<std::thread> threads;
    for (auto& [lab, session] : member_side_) {
      threads.emplace_back([&, lab = lab, session = session.get()] {
        Kernel kernel(model, compiled, {lab}, registry);
        kernel.start();
        auto inbox = std::make_shared<Inbox>();
        session->handshake(experiment, inbox);
        if (ready) ready();
        auto result = run_member(kernel, lab, compiled, *session, *inbox);
        std::lock_guard lock(mutex);
        results[lab] = std::move(result);
      });
    }
    {
      Kernel kernel(model, compiled, {master_}, registry);
      kernel.start();
      auto inbox = std::make_shared<Inbox>();
      std::map<std::string, Session*> peers;
      for (auto& [lab, session] : master_side_) {
        session->handshake(experiment, inbox);
        peers[lab] = session.get();
      }
      if (ready) ready();
      auto result = run_master(kernel, master_, compiled, peers, *inbox);
      std::lock_guard lock(mutex);
      results[master_] = std::move(result);
    }
    for (auto& t : threads) t.join();
    return results;
  }

  Session& master_side(const std::string& member) { return *master_side_.at(member); }
  Session& member_side(const std::string& member) { return *member_side_.at(member); }

 private:
  std::string master_;
  std::map<std::string, std::unique_ptr<Session>> master_side_;
  std::map<std::string, std::unique_ptr<Session>> member_side_;
};

inline std::map<std::string, FederatedResult> run_federated(const ScenarioModel& model,
                                                            const ModelRegistry& registry) {
  const CompiledScenario compiled = compile(model);
  std::vector<std::string> members;
  for (const auto& [lab, plan] : compiled.plans) {
    if (lab != compiled.topology.master) members.push_back(lab);
  }
  Federation federation(compiled.topology.master, members);
  return federation.run(model, registry);
}

// Merged records ordered by (t_us, route_id, seq, component), ties broken by
// the serialized record.
inline std::vector<std::string> normalized(const std::vector<const std::vector<TraceRecord>*>& parts) {
  std::vector<std::tuple<TimeUs, std::int64_t, std::int64_t, std::string, std::string>> keyed;
  for (const auto* records : parts) {
    for (const auto& r : *records) {
      keyed.emplace_back(r.t_us, r.route_id.value_or(-1), r.seq.value_or(-1), r.component, to_jsonl(r));
    }
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::string> lines;
  for (auto& k : keyed) lines.push_back(std::move(std::get<4>(k)));
  return lines;
}

inline std::vector<std::string> normalized(const Trace& trace) { return normalized({&trace.records}); }

inline std::vector<std::string> normalized(const std::map<std::string, FederatedResult>& results) {
  std::vector<const std::vector<TraceRecord>*> parts;
  for (const auto& [lab, r] : results) parts.push_back(&r.trace.records);
  return normalized(parts);
}

// Causality and monotonicity over a relay-only trace (delivered value = send
// time). Returns human-readable problems; empty means the trace is sound.
inline std::vector<std::string> causality_problems(const std::vector<TraceRecord>& records) {
  std::vector<std::string> problems;
  TimeUs t_global = 0;
  std::map<std::string, TimeUs> last_delivery;
  std::map<std::string, TimeUs> last_step;
  std::map<std::string, std::vector<TimeUs>> waiting;  // deliveries awaiting their step
  for (const auto& r : records) {
    const std::string where = r.component + "@" + std::to_string(r.t_us);
    if (r.kind == TraceKind::Deliver) {
      if (!r.value || *r.value > static_cast<double>(r.t_us)) problems.push_back("t_deliver < t_send at " + where);
      if (auto it = last_delivery.find(r.component); it != last_delivery.end() && r.t_us < it->second) {
        problems.push_back("delivery order regressed at " + where);
      }
      if (auto it = last_step.find(r.component); it != last_step.end() && r.t_us < it->second) {
        problems.push_back("delivery before previous step at " + where);
      }
      last_delivery[r.component] = r.t_us;
      waiting[r.component].push_back(r.t_us);
    } else if (r.kind == TraceKind::Step) {
      if (r.t_us < t_global) problems.push_back("t_global decreased at " + where);
      t_global = r.t_us;
      for (TimeUs d : waiting[r.component]) {
        if (d > r.t_us) problems.push_back("delivery consumed early at " + where);
      }
      waiting[r.component].clear();
      last_step[r.component] = r.t_us;
    }
  }
  return problems;
}

}  // namespace gwtest
