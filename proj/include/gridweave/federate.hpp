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

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gridweave/canonical_json.hpp"
#include "gridweave/common.hpp"

namespace gridweave {

enum class StopReason { Completed, ComponentFailure, OperatorAbort, PeerDisconnect };

std::string_view to_string(StopReason reason);
std::optional<StopReason> parse_stop_reason(std::string_view text);

struct PortValue {
  std::string port;
  double value = 0.0;

  bool operator==(const PortValue&) const = default;
};

struct StepResult {
  std::vector<PortValue> outputs;
  std::optional<TimeUs> next_step;  // nullopt = Done
};

/// Behavioral contract every simulated component implements. The kernel
/// calls init once, step at each scheduled time, and stop exactly once.
class Federate {
 public:
  virtual ~Federate() = default;

  /// Returns the first step time (>= t0_us) or nullopt when there is nothing
  /// to do. Throwing rejects the parameters.
  virtual std::optional<TimeUs> init(TimeUs t0_us, const Json& params) = 0;

  /// `inputs` holds at most one value per in-port (latest delivery wins).
  /// The returned next_step must be strictly greater than `t_us`.
  virtual StepResult step(TimeUs t_us, const std::vector<PortValue>& inputs) = 0;

  virtual void stop(StopReason reason) = 0;
};

using FederateFactory = std::function<std::unique_ptr<Federate>()>;

/// Model name -> factory.
class ModelRegistry {
 public:
  /// Registry preloaded with profile-player, pv-inverter and powerflow.
  static ModelRegistry builtin();

  void add(std::string name, FederateFactory factory);
  bool contains(std::string_view name) const;
  /// nullptr when `name` is unknown.
  std::unique_ptr<Federate> create(std::string_view name) const;

 private:
  std::map<std::string, FederateFactory, std::less<>> factories_;
};

}  // namespace gridweave
