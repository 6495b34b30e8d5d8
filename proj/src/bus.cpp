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

#include "gridweave/bus.hpp"

#include <algorithm>
#include <cmath>

namespace gridweave {

std::string to_wire(const Envelope& e) {
  std::string out;
  out.reserve(128);
  out += "{\"route_id\":";
  out += std::to_string(e.route_id);
  out += ",\"seq\":";
  out += std::to_string(e.seq);
  out += ",\"t_send_us\":";
  out += std::to_string(e.t_send_us);
  out += ",\"t_deliver_us\":";
  out += std::to_string(e.t_deliver_us);
  out += ",\"quantity\":";
  append_string(out, e.quantity);
  out += ",\"unit\":";
  append_string(out, e.unit);
  out += ",\"value\":";
  append_real(out, e.value);
  out += ",\"experiment_id\":";
  append_string(out, e.experiment_id);
  out += '}';
  return out;
}

Json envelope_to_json(const Envelope& e) {
  Json j = Json::object();
  j["route_id"] = e.route_id;
  j["seq"] = e.seq;
  j["t_send_us"] = e.t_send_us;
  j["t_deliver_us"] = e.t_deliver_us;
  j["quantity"] = e.quantity;
  j["unit"] = e.unit;
  j["value"] = e.value;
  j["experiment_id"] = e.experiment_id;
  return j;
}

Envelope envelope_from_json(const Json& j) {
  try {
    Envelope e;
    e.route_id = j.at("route_id").get<std::int64_t>();
    e.seq = j.at("seq").get<std::int64_t>();
    e.t_send_us = j.at("t_send_us").get<TimeUs>();
    e.t_deliver_us = j.at("t_deliver_us").get<TimeUs>();
    e.quantity = j.at("quantity").get<std::string>();
    e.unit = j.at("unit").get<std::string>();
    const auto& v = j.at("value");
    if (!v.is_number()) throw Error("BadEnvelope", "value must be a number");
    e.value = v.get<double>();
    e.experiment_id = j.at("experiment_id").get<std::string>();
    if (e.t_deliver_us < e.t_send_us) throw Error("BadEnvelope", "t_deliver_us before t_send_us");
    return e;
  } catch (const Json::exception& ex) {
    throw Error("BadEnvelope", ex.what());
  }
}

std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

ChannelState ChannelState::seeded(std::uint64_t seed, std::int64_t route_id) {
  std::uint64_t s = seed ^ static_cast<std::uint64_t>(route_id);
  ChannelState state;
  state.rng_state = splitmix64_next(s);
  return state;
}

double next_f64(ChannelState& state) {
  ++state.draws;
  return static_cast<double>(splitmix64_next(state.rng_state) >> 11) * 0x1.0p-53;
}

RouteOutcome route_bytes(TimeUs t_send_us, std::size_t payload_bytes, const ChannelModel& channel,
                         ChannelState& state) {
  const double u1 = next_f64(state);
  if (u1 < channel.loss_prob) {
    return {true, 0};
  }
  const double u2 = next_f64(state);
  const auto jitter =
      static_cast<TimeUs>(std::llround((2.0 * u2 - 1.0) * static_cast<double>(channel.jitter_us)));

  TimeUs serialization = 0;
  if (channel.bandwidth_Bps > 0) {
    // ceil(bytes * 1e6 / bandwidth) in integers.
    const auto bits = static_cast<unsigned __int128>(payload_bytes) * 1'000'000U;
    serialization = static_cast<TimeUs>((bits + channel.bandwidth_Bps - 1) / channel.bandwidth_Bps);
  }
  const TimeUs start = std::max(t_send_us, state.bucket_free_at_us);
  state.bucket_free_at_us = start + serialization;
  const TimeUs raw = state.bucket_free_at_us + channel.latency_us + jitter;
  if (channel.reorder_allowed) {
    return {false, raw};
  }
  const TimeUs deliver = std::max(raw, state.last_deliver_us);
  state.last_deliver_us = deliver;
  return {false, deliver};
}

RouteOutcome route(const Envelope& envelope, const ChannelModel& channel, ChannelState& state) {
  Envelope sized = envelope;
  sized.t_deliver_us = sized.t_send_us;
  return route_bytes(envelope.t_send_us, to_wire(sized).size(), channel, state);
}

Adapted adapt(double value, const std::string& unit, const std::string& quantity, const AdapterSpec& spec) {
  switch (spec.kind) {
    case AdapterKind::Identity:
      return {value, unit, quantity};
    case AdapterKind::UnitScale:
      if (unit != spec.from_unit) {
        throw Error("AdaptFailure", "AdaptFailure: expected unit " + spec.from_unit + ", got " + unit);
      }
      return {value * spec.factor, spec.to_unit, quantity};
    case AdapterKind::KeyRename: {
      auto it = spec.rename.find(quantity);
      return {value, unit, it == spec.rename.end() ? quantity : it->second};
    }
  }
  return {value, unit, quantity};
}

}  // namespace gridweave
