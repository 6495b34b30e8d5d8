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

// Conservative time management across lab coordinators.
//
// Every round each lab reports (TAR) its next local step time and the
// earliest delivery time of the envelopes it just sent to other labs. The
// master answers each lab with a TAG computed by lab_grant(). Members route
// inter-lab envelopes through the master, which relays them; because the
// transport is ordered, every envelope produced in round r reaches its
// destination before that lab's round r+1 TAG.

#include <algorithm>
#include <functional>

#include "gridweave/federation.hpp"

namespace gridweave {

namespace {

using Clock = std::chrono::steady_clock;

// Lab receiving each route, from the full compiled scenario.
std::map<std::int64_t, std::string> route_destinations(const CompiledScenario& compiled) {
  std::map<std::int64_t, std::string> dest;
  for (const auto& [lab, plan] : compiled.plans) {
    for (const auto& r : plan.local_routes) dest[r.route_id] = lab;
    for (const auto& r : plan.ingress_routes) dest[r.route_id] = lab;
  }
  return dest;
}

StopReason reason_from_wire(const std::string& text) {
  return parse_stop_reason(text).value_or(StopReason::OperatorAbort);
}

// Drains the kernel outbox into MSG frames. Returns the earliest delivery.
TimeUs forward_outbox(Kernel& kernel, const std::map<std::int64_t, std::string>& destinations,
                      const std::function<Session*(const std::string&)>& session_for) {
  TimeUs earliest = kTimeInfinity;
  for (auto& env : kernel.take_outbox()) {
    earliest = std::min(earliest, env.t_deliver_us);
    Session* session = session_for(destinations.at(env.route_id));
    session->send(kernel.run().experiment_id, MsgBody{std::move(env)});
  }
  return earliest;
}

void wait_for_ack(Inbox& inbox, std::chrono::milliseconds timeout) {
  const auto deadline = Clock::now() + timeout;
  while (Clock::now() < deadline) {
    auto item = inbox.pop(std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()));
    if (!item || item->kind == Inbound::Kind::Disconnect) return;
    if (item->frame.type() == FrameType::Ack) return;
  }
}

}  // namespace

std::vector<std::string> stop_broadcast(const std::string& reason, const std::string& experiment_id,
                                        const std::map<std::string, Session*>& sessions, Inbox& inbox,
                                        std::chrono::milliseconds timeout) {
  std::map<std::string, std::uint64_t> awaiting;  // lab -> frame_seq of its STOP
  for (const auto& [lab, session] : sessions) {
    try {
      awaiting[lab] = session->send(experiment_id, StopBody{reason});
    } catch (const Error&) {
      // Dead peer: nothing to wait for.
    }
  }
  std::set<std::string> unacknowledged;
  for (const auto& [lab, seq] : awaiting) unacknowledged.insert(lab);

  const auto deadline = Clock::now() + timeout;
  while (!unacknowledged.empty() && Clock::now() < deadline) {
    auto item = inbox.pop(std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()));
    if (!item) break;
    if (item->kind == Inbound::Kind::Disconnect) {
      unacknowledged.erase(item->from_lab);
      continue;
    }
    if (const auto* ack = std::get_if<AckBody>(&item->frame.body)) {
      auto it = awaiting.find(item->from_lab);
      if (ack->of_type == FrameType::Stop && it != awaiting.end() && it->second == ack->of_seq) {
        unacknowledged.erase(item->from_lab);
      }
    }
  }
  for (const auto& [lab, session] : sessions) session->release(experiment_id);

  std::vector<std::string> missing(unacknowledged.begin(), unacknowledged.end());
  for (const auto& [lab, session] : sessions) {
    if (!awaiting.contains(lab)) missing.push_back(lab);
  }
  std::sort(missing.begin(), missing.end());
  return missing;
}

FederatedResult run_master(Kernel& kernel, const std::string& my_lab, const CompiledScenario& compiled,
                           const std::map<std::string, Session*>& peers, Inbox& inbox) {
  const std::string& experiment = kernel.run().experiment_id;
  const TimeUs duration = kernel.duration();
  const auto destinations = route_destinations(compiled);
  auto session_for = [&](const std::string& lab) -> Session* { return peers.at(lab); };

  auto finish = [&](StopReason reason, const std::map<std::string, Session*>& notify) {
    stop_broadcast(std::string(to_string(reason)), experiment, notify, inbox);
    kernel.stop_all(reason, reason == StopReason::Completed ? duration : kernel.t_global());
    FederatedResult result{kernel.trace(), reason};
    return result;
  };
  auto all_but = [&](const std::string& excluded) {
    auto others = peers;
    others.erase(excluded);
    return others;
  };

  try {
    for (const auto& [lab, session] : peers) session->send(experiment, PlanBody{plan_to_json(compiled.plans.at(lab))});
  } catch (const Error&) {
    return finish(StopReason::PeerDisconnect, peers);
  }

  TimeUs own_pending = kTimeInfinity;
  while (true) {
    std::map<std::string, TarBody> tars;
    tars[my_lab] = TarBody{my_lab, kernel.next_time(), own_pending};

    while (tars.size() < peers.size() + 1) {
      auto item = inbox.pop();
      if (item->kind == Inbound::Kind::Disconnect) {
        if (!peers.contains(item->from_lab) && !item->from_lab.empty()) continue;
        return finish(StopReason::PeerDisconnect, all_but(item->from_lab));
      }
      const Frame& frame = item->frame;
      if (const auto* tar = std::get_if<TarBody>(&frame.body)) {
        tars[item->from_lab] = *tar;
      } else if (const auto* msg = std::get_if<MsgBody>(&frame.body)) {
        const std::string& dest = destinations.at(msg->envelope.route_id);
        if (dest == my_lab) {
          kernel.ingest(msg->envelope);
        } else {
          peers.at(dest)->send(experiment, *msg);
        }
      } else if (const auto* stop = std::get_if<StopBody>(&frame.body)) {
        try {
          peers.at(item->from_lab)->send(experiment, AckBody{FrameType::Stop, frame.frame_seq});
        } catch (const Error&) {
        }
        return finish(reason_from_wire(stop->reason), all_but(item->from_lab));
      }
    }

    std::map<std::string, TimeUs> minima;
    std::vector<TimeUs> local_minima;
    TimeUs pending_min = kTimeInfinity;
    for (const auto& [lab, tar] : tars) {
      minima[lab] = tar.local_min_us;
      local_minima.push_back(tar.local_min_us);
      pending_min = std::min(pending_min, tar.pending_min_us);
    }
    const bool idle = pending_min == kTimeInfinity &&
                      std::all_of(local_minima.begin(), local_minima.end(), [](TimeUs t) { return t == kTimeInfinity; });
    const TimeGrant bound = lbts(local_minima, pending_min, duration);
    if (idle || bound.granted_until_us > duration) {
      return finish(StopReason::Completed, peers);
    }

    try {
      for (const auto& [lab, session] : peers) {
        session->send(experiment, TagBody{lab_grant(lab, minima, duration).granted_until_us});
      }
    } catch (const Error&) {
      return finish(StopReason::PeerDisconnect, peers);
    }

    const TimeGrant own = lab_grant(my_lab, minima, duration);
    try {
      kernel.set_grant(own.granted_until_us);
      kernel.run_until(own.granted_until_us);
    } catch (const Error& e) {
      if (e.code() != "StepFailure") throw;
      return finish(StopReason::ComponentFailure, peers);
    }
    try {
      own_pending = forward_outbox(kernel, destinations, session_for);
    } catch (const Error&) {
      return finish(StopReason::PeerDisconnect, peers);
    }
  }
}

FederatedResult run_member(Kernel& kernel, const std::string& my_lab, const CompiledScenario& compiled,
                           Session& master, Inbox& inbox) {
  const std::string& experiment = kernel.run().experiment_id;
  const auto destinations = route_destinations(compiled);
  auto session_for = [&](const std::string&) -> Session* { return &master; };

  auto abort_locally = [&](StopReason reason) {
    kernel.stop_all(reason, kernel.t_global());
    master.release(experiment);
    return FederatedResult{kernel.trace(), reason};
  };
  // Reports a local abort to the master and waits for its ACK.
  auto abort_and_tell = [&](StopReason reason) {
    kernel.stop_all(reason, kernel.t_global());
    try {
      master.send(experiment, StopBody{std::string(to_string(reason))});
      wait_for_ack(inbox, kAckTimeout);
    } catch (const Error&) {
    }
    master.release(experiment);
    return FederatedResult{kernel.trace(), reason};
  };

  bool have_plan = false;
  TimeUs pending = kTimeInfinity;
  while (true) {
    if (have_plan) {
      try {
        master.send(experiment, TarBody{my_lab, kernel.next_time(), pending});
      } catch (const Error&) {
        return abort_locally(StopReason::PeerDisconnect);
      }
    }

    std::optional<TimeUs> grant;
    while (!grant) {
      auto item = inbox.pop();
      if (item->kind == Inbound::Kind::Disconnect) return abort_locally(StopReason::PeerDisconnect);
      const Frame& frame = item->frame;
      if (const auto* plan = std::get_if<PlanBody>(&frame.body)) {
        if (plan_from_json(plan->plan) != compiled.plans.at(my_lab)) {
          return abort_and_tell(StopReason::OperatorAbort);
        }
        have_plan = true;
        break;
      }
      if (const auto* msg = std::get_if<MsgBody>(&frame.body)) {
        kernel.ingest(msg->envelope);
      } else if (const auto* tag = std::get_if<TagBody>(&frame.body)) {
        grant = tag->granted_until_us;
      } else if (const auto* stop = std::get_if<StopBody>(&frame.body)) {
        const StopReason reason = reason_from_wire(stop->reason);
        kernel.stop_all(reason, reason == StopReason::Completed ? kernel.duration() : kernel.t_global());
        try {
          master.send(experiment, AckBody{FrameType::Stop, frame.frame_seq});
        } catch (const Error&) {
        }
        master.release(experiment);
        return FederatedResult{kernel.trace(), reason};
      }
    }
    if (!grant) continue;

    try {
      kernel.set_grant(*grant);
      kernel.run_until(*grant);
    } catch (const Error& e) {
      if (e.code() != "StepFailure") throw;
      return abort_and_tell(StopReason::ComponentFailure);
    }
    try {
      pending = forward_outbox(kernel, destinations, session_for);
    } catch (const Error&) {
      return abort_locally(StopReason::PeerDisconnect);
    }
  }
}

}  // namespace gridweave
