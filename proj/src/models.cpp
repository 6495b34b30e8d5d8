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

// Built-in federates wrapping the component models.

#include <algorithm>
#include <map>

#include "gridweave/components.hpp"
#include "gridweave/federate.hpp"

namespace gridweave {

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::Completed: return "completed";
    case StopReason::ComponentFailure: return "component_failure";
    case StopReason::OperatorAbort: return "operator_abort";
    case StopReason::PeerDisconnect: return "peer_disconnect";
  }
  return "completed";
}

std::optional<StopReason> parse_stop_reason(std::string_view text) {
  for (auto r : {StopReason::Completed, StopReason::ComponentFailure, StopReason::OperatorAbort,
                 StopReason::PeerDisconnect}) {
    if (to_string(r) == text) return r;
  }
  return std::nullopt;
}

void ModelRegistry::add(std::string name, FederateFactory factory) {
  factories_[std::move(name)] = std::move(factory);
}

bool ModelRegistry::contains(std::string_view name) const { return factories_.find(name) != factories_.end(); }

std::unique_ptr<Federate> ModelRegistry::create(std::string_view name) const {
  auto it = factories_.find(name);
  return it == factories_.end() ? nullptr : it->second();
}

namespace {

double param_or(const Json& params, const char* key, double fallback) {
  if (!params.contains(key)) return fallback;
  const auto& v = params.at(key);
  if (!v.is_number()) throw Error("BadParams", std::string(key) + " must be a number");
  return v.get<double>();
}

TimeUs interval_param(const Json& params, TimeUs fallback) {
  if (!params.contains("interval_us")) return fallback;
  auto v = params.at("interval_us").get<TimeUs>();
  if (v < 1) throw Error("BadParams", "interval_us must be >= 1");
  return v;
}

// Replays a LoadProfile: column P on ports[0], column Q on ports[1].
class ProfilePlayer final : public Federate {
 public:
  std::optional<TimeUs> init(TimeUs t0_us, const Json& params) override {
    auto mode = ProfileMode::Step;
    if (params.contains("mode")) {
      auto text = params.at("mode").get<std::string>();
      if (text == "Hold") {
        mode = ProfileMode::Hold;
      } else if (text != "Step") {
        throw Error("BadParams", "mode must be Step or Hold");
      }
    }
    if (params.contains("points")) {
      profile_ = load_profile_json(Json{{"points", params.at("points")}});
    } else if (params.contains("file")) {
      profile_ = load_profile_file(params.at("file").get<std::string>());
    } else {
      throw Error("BadParams", "profile-player needs 'points' or 'file'");
    }
    profile_.mode = mode;
    if (params.contains("ports")) {
      ports_ = params.at("ports").get<std::vector<std::string>>();
    }
    auto first = std::find_if(profile_.points.begin(), profile_.points.end(),
                              [&](const ProfilePoint& p) { return p.t_us >= t0_us; });
    if (first == profile_.points.end()) return std::nullopt;
    return first->t_us;
  }

  StepResult step(TimeUs t_us, const std::vector<PortValue>&) override {
    auto sample = profile_step(profile_, t_us);
    StepResult result;
    if (!ports_.empty()) result.outputs.push_back({ports_[0], sample.p});
    if (ports_.size() > 1) result.outputs.push_back({ports_[1], sample.q});
    result.next_step = sample.next;
    return result;
  }

  void stop(StopReason) override {}

 private:
  LoadProfile profile_;
  std::vector<std::string> ports_{"P", "Q"};
};

// PV inverter: irradiance -> active power, local voltage -> reactive power.
// Publishes consumption-signed values (generation negative).
class PvInverter final : public Federate {
 public:
  std::optional<TimeUs> init(TimeUs t0_us, const Json& params) override {
    params_.p_peak = param_or(params, "p_peak", 0.0);
    params_.p_rated = param_or(params, "p_rated", params_.p_peak);
    if (!(params_.p_peak > 0) || !(params_.p_rated > 0)) {
      throw Error("BadParams", "p_peak and p_rated must be > 0");
    }
    if (params.contains("voltvar")) {
      for (const auto& point : params.at("voltvar")) {
        params_.voltvar.push_back({point.at(0).get<double>(), point.at(1).get<double>()});
      }
      for (std::size_t i = 1; i < params_.voltvar.size(); ++i) {
        if (params_.voltvar[i].v_pu <= params_.voltvar[i - 1].v_pu) {
          throw Error("BadParams", "voltvar v_pu must be strictly increasing");
        }
      }
    }
    interval_ = interval_param(params, kMicrosPerSecond);
    return t0_us + interval_;
  }

  StepResult step(TimeUs t_us, const std::vector<PortValue>& inputs) override {
    for (const auto& in : inputs) {
      if (in.port == "irradiance") irradiance_ = std::max(0.0, in.value);
      if (in.port == "v_pu") v_pu_ = in.value;
    }
    StepResult result;
    result.outputs.push_back({"P", 0.0 - pv_power(irradiance_, params_)});
    result.outputs.push_back({"Q", 0.0 - volt_var(v_pu_, params_.voltvar)});
    result.next_step = t_us + interval_;
    return result;
  }

  void stop(StopReason) override {}

 private:
  PvParams params_;
  TimeUs interval_ = kMicrosPerSecond;
  double irradiance_ = 0.0;
  double v_pu_ = 1.0;
};

// Periodic feeder power flow. In-ports are bound to bus P or Q injections
// (values held between updates); out-ports publish bus voltages.
class PowerFlow final : public Federate {
 public:
  std::optional<TimeUs> init(TimeUs t0_us, const Json& params) override {
    if (!params.contains("grid")) throw Error("BadParams", "powerflow needs 'grid'");
    grid_ = grid_from_json(params.at("grid"));
    interval_ = interval_param(params, 60 * kMicrosPerSecond);
    if (params.contains("inputs")) {
      for (const auto& [port, binding] : params.at("inputs").items()) {
        auto kind = binding.at("kind").get<std::string>();
        if (kind != "P" && kind != "Q") throw Error("BadParams", "input kind must be P or Q");
        inputs_[port] = {binding.at("bus").get<int>(), kind == "P", 0.0};
      }
    }
    if (params.contains("outputs")) {
      for (const auto& [port, binding] : params.at("outputs").items()) {
        bool in_volts = binding.contains("measure") && binding.at("measure").get<std::string>() == "v";
        outputs_.push_back({port, binding.at("bus").get<int>(), in_volts});
      }
    }
    // Reject bad grids up front.
    bfs_powerflow(grid_, {});
    return t0_us;
  }

  StepResult step(TimeUs t_us, const std::vector<PortValue>& inputs) override {
    for (const auto& in : inputs) {
      if (auto it = inputs_.find(in.port); it != inputs_.end()) it->second.value = in.value;
    }
    std::map<int, Injection> by_bus;
    for (const auto& [port, binding] : inputs_) {
      auto& inj = by_bus[binding.bus];
      inj.bus = binding.bus;
      (binding.active ? inj.p_w : inj.q_var) += binding.value;
    }
    std::vector<Injection> injections;
    for (const auto& [bus, inj] : by_bus) injections.push_back(inj);
    auto flow = bfs_powerflow(grid_, injections);

    StepResult result;
    for (const auto& out : outputs_) {
      const auto& v = flow.voltages.at(out.bus);
      result.outputs.push_back({out.port, out.in_volts ? v.volts : v.pu});
    }
    result.next_step = t_us + interval_;
    return result;
  }

  void stop(StopReason) override {}

 private:
  struct InputBinding {
    int bus = 0;
    bool active = true;
    double value = 0.0;
  };
  struct OutputBinding {
    std::string port;
    int bus = 0;
    bool in_volts = false;
  };

  GridModel grid_;
  TimeUs interval_ = 60 * kMicrosPerSecond;
  std::map<std::string, InputBinding> inputs_;
  std::vector<OutputBinding> outputs_;
};

}  // namespace

ModelRegistry ModelRegistry::builtin() {
  ModelRegistry registry;
  registry.add("profile-player", [] { return std::make_unique<ProfilePlayer>(); });
  registry.add("pv-inverter", [] { return std::make_unique<PvInverter>(); });
  registry.add("powerflow", [] { return std::make_unique<PowerFlow>(); });
  return registry;
}

}  // namespace gridweave
