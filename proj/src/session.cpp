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

#include "gridweave/federation.hpp"

namespace gridweave {

void Inbox::push(Inbound item) {
  {
    std::lock_guard lock(mutex_);
    items_.push_back(std::move(item));
  }
  ready_.notify_one();
}

std::optional<Inbound> Inbox::pop(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  if (!ready_.wait_for(lock, timeout, [&] { return !items_.empty(); })) return std::nullopt;
  Inbound item = std::move(items_.front());
  items_.pop_front();
  return item;
}

std::optional<Inbound> Inbox::pop() {
  std::unique_lock lock(mutex_);
  ready_.wait(lock, [&] { return !items_.empty(); });
  Inbound item = std::move(items_.front());
  items_.pop_front();
  return item;
}

void Demux::add(const std::string& experiment_id, std::shared_ptr<Inbox> inbox) {
  std::lock_guard lock(mutex_);
  if (!inboxes_.emplace(experiment_id, std::move(inbox)).second) {
    throw Error("DuplicateExperiment", "DuplicateExperiment: '" + experiment_id + "' already registered");
  }
}

void Demux::remove(const std::string& experiment_id) {
  std::lock_guard lock(mutex_);
  inboxes_.erase(experiment_id);
}

bool Demux::contains(const std::string& experiment_id) const {
  std::lock_guard lock(mutex_);
  return inboxes_.contains(experiment_id);
}

std::vector<std::string> Demux::experiments() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, inbox] : inboxes_) ids.push_back(id);
  return ids;
}

Demux::Result Demux::dispatch(const Frame& frame, const std::string& from_lab) {
  std::shared_ptr<Inbox> inbox;
  {
    std::lock_guard lock(mutex_);
    auto it = inboxes_.find(frame.experiment_id);
    if (it == inboxes_.end()) return Result::UnknownExperiment;
    inbox = it->second;
  }
  inbox->push({Inbound::Kind::Frame, frame, from_lab});
  return Result::Delivered;
}

void Demux::disconnect_all(const std::string& from_lab) {
  std::vector<std::shared_ptr<Inbox>> targets;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [id, inbox] : inboxes_) targets.push_back(inbox);
  }
  for (auto& inbox : targets) inbox->push({Inbound::Kind::Disconnect, {}, from_lab});
}

Session::Session(Socket socket, std::string my_lab, std::int64_t proto_version)
    : socket_(std::move(socket)), my_lab_(std::move(my_lab)), proto_version_(proto_version) {
  reader_ = std::thread([this] { read_loop(); });
}

Session::~Session() {
  close();
  if (reader_.joinable()) reader_.join();
}

void Session::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  socket_.shutdown();
}

SessionState Session::state() const {
  std::lock_guard lock(mutex_);
  return state_;
}

std::string Session::peer_lab() const {
  std::lock_guard lock(mutex_);
  return peer_lab_;
}

std::uint64_t Session::send(const std::string& experiment_id, FrameBody body) {
  std::lock_guard lock(write_mutex_);
  Frame frame{experiment_id, next_seq_, std::move(body)};
  auto bytes = encode_frame(frame);
  socket_.write_all(bytes);
  return next_seq_++;
}

void Session::handshake(const std::string& experiment_id, std::shared_ptr<Inbox> inbox,
                        std::chrono::milliseconds timeout) {
  {
    std::lock_guard lock(mutex_);
    if (version_mismatch_) throw Error("VersionMismatch", "VersionMismatch: session already rejected");
    if (state_ == SessionState::Stopped || closed_) throw Error("PeerDisconnect", "PeerDisconnect: session closed");
  }
  demux_.add(experiment_id, std::move(inbox));
  try {
    send(experiment_id, HelloBody{my_lab_, proto_version_});
  } catch (...) {
    demux_.remove(experiment_id);
    throw;
  }

  std::unique_lock lock(mutex_);
  bool done = changed_.wait_for(lock, timeout, [&] {
    return peer_hellos_.contains(experiment_id) || version_mismatch_ || closed_ || state_ == SessionState::Stopped;
  });
  if (version_mismatch_) {
    lock.unlock();
    demux_.remove(experiment_id);
    close();
    throw Error("VersionMismatch", "VersionMismatch: peer does not speak protocol version " +
                                       std::to_string(proto_version_));
  }
  if (!done || !peer_hellos_.contains(experiment_id)) {
    lock.unlock();
    demux_.remove(experiment_id);
    throw Error("PeerDisconnect", "PeerDisconnect: no HELLO from peer for '" + experiment_id + "'");
  }
  state_ = SessionState::Ready;
}

void Session::release(const std::string& experiment_id) {
  demux_.remove(experiment_id);
  std::lock_guard lock(mutex_);
  if (demux_.experiments().empty()) state_ = SessionState::Stopped;
}

void Session::read_loop() {
  try {
    while (true) {
      auto frame = read_frame(socket_);
      if (!frame) break;

      if (const auto* hello = std::get_if<HelloBody>(&frame->body)) {
        std::lock_guard lock(mutex_);
        peer_lab_ = hello->lab_id;
        if (hello->proto_version != proto_version_) {
          version_mismatch_ = true;
          changed_.notify_all();
          break;
        }
        peer_hellos_.insert(frame->experiment_id);
        if (demux_.contains(frame->experiment_id)) state_ = SessionState::Ready;
        changed_.notify_all();
        continue;
      }

      // Anything but HELLO needs a completed HELLO exchange for its experiment.
      bool greeted = false;
      std::string from;
      {
        std::lock_guard lock(mutex_);
        greeted = peer_hellos_.contains(frame->experiment_id);
        from = peer_lab_;
      }
      if (greeted && demux_.dispatch(*frame, from) == Demux::Result::Delivered) continue;
      if (frame->type() != FrameType::Stop && frame->type() != FrameType::Ack) {
        send(frame->experiment_id, StopBody{"unknown_experiment"});
      }
    }
  } catch (const std::exception&) {
    // Transport or framing failure: treated like a disconnect below.
  }
  {
    std::lock_guard lock(mutex_);
    state_ = SessionState::Stopped;
    changed_.notify_all();
  }
  socket_.shutdown();
  demux_.disconnect_all(peer_lab());
}

}  // namespace gridweave
