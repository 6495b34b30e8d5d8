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

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "gridweave/plan.hpp"
#include "gridweave/scenario.hpp"

namespace gridweave {

/// The routed message. Wire form is canonical JSON with keys in declaration
/// order (see to_wire).
struct Envelope {
  std::int64_t route_id = 0;
  std::int64_t seq = 0;
  TimeUs t_send_us = 0;
  TimeUs t_deliver_us = 0;
  std::string quantity;
  std::string unit;
  double value = 0.0;
  std::string experiment_id;

  bool operator==(const Envelope&) const = default;
};

std::string to_wire(const Envelope& envelope);
Json envelope_to_json(const Envelope& envelope);
/// Throws Error("BadEnvelope") on missing or mistyped keys.
Envelope envelope_from_json(const Json& value);

/// One splitmix64 step on `state`, returning the raw 64-bit output.
std::uint64_t splitmix64_next(std::uint64_t& state);

/// Per-route channel emulation state, owned by the kernel.
struct ChannelState {
  std::uint64_t rng_state = 0;
  TimeUs bucket_free_at_us = 0;
  TimeUs last_deliver_us = 0;
  std::uint64_t draws = 0;  // PRNG draws consumed so far

  /// s0 = splitmix64 output of (seed XOR route_id).
  static ChannelState seeded(std::uint64_t seed, std::int64_t route_id);
};

/// Uniform real in [0, 1) from the top 53 bits of the next splitmix64 output.
double next_f64(ChannelState& state);

struct RouteOutcome {
  bool dropped = false;
  TimeUs t_deliver_us = 0;
};

/// Applies loss, jitter, bandwidth serialization and FIFO ordering in
/// simulated time. Consumes one PRNG draw when dropped, two otherwise.
/// Payload size is the wire form with t_deliver_us set to t_send_us.
RouteOutcome route(const Envelope& envelope, const ChannelModel& channel, ChannelState& state);

/// Same as route() for a payload of known size.
RouteOutcome route_bytes(TimeUs t_send_us, std::size_t payload_bytes, const ChannelModel& channel,
                         ChannelState& state);

struct Adapted {
  double value = 0.0;
  std::string unit;
  std::string quantity;
};

/// Applies an adapter to a value. Throws Error("AdaptFailure") when a
/// UnitScale adapter receives a value in a unit other than its source unit.
Adapted adapt(double value, const std::string& unit, const std::string& quantity, const AdapterSpec& spec);

}  // namespace gridweave
