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

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "gridweave/bus.hpp"
#include "gridweave/kernel.hpp"
#include "gridweave/plan.hpp"

namespace gridweave {

inline constexpr std::int64_t kProtoVersion = 1;
inline constexpr std::uint16_t kDefaultPort = 7841;
inline constexpr std::size_t kMaxFrameBytes = 16u * 1024u * 1024u;
inline constexpr std::chrono::seconds kAckTimeout{5};
inline constexpr std::chrono::seconds kConnectTimeout{10};
inline constexpr int kConnectRetries = 3;
inline constexpr std::chrono::seconds kConnectBackoff{1};

// ---------------------------------------------------------------------------
// Frames

enum class FrameType { Hello, Plan, Tar, Tag, Msg, Stop, Ack };

std::string_view to_string(FrameType type);
std::optional<FrameType> parse_frame_type(std::string_view text);

struct HelloBody {
  std::string lab_id;
  std::int64_t proto_version = kProtoVersion;
  bool operator==(const HelloBody&) const = default;
};
struct PlanBody {
  Json plan;  // plan_to_json() form
  bool operator==(const PlanBody&) const = default;
};
/// Time-advance request. kTimeInfinity travels as "inf".
struct TarBody {
  std::string lab_id;
  TimeUs local_min_us = kTimeInfinity;
  TimeUs pending_min_us = kTimeInfinity;
  bool operator==(const TarBody&) const = default;
};
struct TagBody {
  TimeUs granted_until_us = 0;
  bool operator==(const TagBody&) const = default;
};
struct MsgBody {
  Envelope envelope;
  bool operator==(const MsgBody&) const = default;
};
struct StopBody {
  std::string reason;
  bool operator==(const StopBody&) const = default;
};
struct AckBody {
  FrameType of_type = FrameType::Stop;
  std::uint64_t of_seq = 0;
  bool operator==(const AckBody&) const = default;
};

using FrameBody = std::variant<HelloBody, PlanBody, TarBody, TagBody, MsgBody, StopBody, AckBody>;

struct Frame {
  std::string experiment_id;
  std::uint64_t frame_seq = 0;
  FrameBody body;

  FrameType type() const { return static_cast<FrameType>(body.index()); }
  bool operator==(const Frame&) const = default;
};

/// Canonical JSON of {type, experiment_id, frame_seq, body}.
std::string frame_json(const Frame& frame);

/// 4-byte big-endian length prefix + canonical JSON. Throws
/// Error("FrameTooLarge") beyond 16 MiB.
std::vector<std::uint8_t> encode_frame(const Frame& frame);

/// Decodes one frame from the front of `bytes`. When `consumed` is null the
/// buffer must hold exactly one frame. Throws Error("Truncated"),
/// Error("BadLength") or Error("BadFrame").
Frame decode_frame(std::span<const std::uint8_t> bytes, std::size_t* consumed = nullptr);

// ---------------------------------------------------------------------------
// Transport

/// Owning socket descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  /// Shuts down both directions; a blocked reader wakes with EOF.
  void shutdown();

  void write_all(std::span<const std::uint8_t> bytes);
  /// False on clean EOF before the first byte; throws Error("Truncated") on
  /// EOF in the middle.
  bool read_exact(std::span<std::uint8_t> out);

 private:
  int fd_ = -1;
};

/// Connected pair of local stream sockets.
std::pair<Socket, Socket> socket_pair();

/// Connects to host:port, retrying kConnectRetries times with kConnectBackoff
/// between attempts. Throws Error("PeerDisconnect") when every attempt fails.
Socket connect_with_retry(const std::string& host, std::uint16_t port,
                          std::chrono::milliseconds attempt_timeout = kConnectTimeout,
                          int retries = kConnectRetries, std::chrono::milliseconds backoff = kConnectBackoff);

class Listener {
 public:
  /// Binds host:port (port 0 = ephemeral).
  Listener(const std::string& host, std::uint16_t port);
  std::uint16_t port() const { return port_; }
  /// Throws Error("PeerDisconnect") on timeout.
  Socket accept(std::chrono::milliseconds timeout);

 private:
  Socket socket_;
  std::uint16_t port_ = 0;
};

/// Reads one length-prefixed frame; nullopt on clean EOF.
std::optional<Frame> read_frame(Socket& socket);

// ---------------------------------------------------------------------------
// Sessions and experiment demultiplexing

/// Item handed to an experiment's coordinator.
struct Inbound {
  enum class Kind { Frame, Disconnect };
  Kind kind = Kind::Frame;
  Frame frame;
  std::string from_lab;
};

/// Single ordered queue per experiment.
class Inbox {
 public:
  void push(Inbound item);
  /// nullopt on timeout.
  std::optional<Inbound> pop(std::chrono::milliseconds timeout);
  std::optional<Inbound> pop();

 private:
  std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<Inbound> items_;
};

/// Routes frames to the inbox registered for their experiment id.
class Demux {
 public:
  enum class Result { Delivered, UnknownExperiment };

  /// Throws Error("DuplicateExperiment").
  void add(const std::string& experiment_id, std::shared_ptr<Inbox> inbox);
  void remove(const std::string& experiment_id);
  bool contains(const std::string& experiment_id) const;
  std::vector<std::string> experiments() const;

  Result dispatch(const Frame& frame, const std::string& from_lab);
  /// Tells every registered experiment that the transport is gone.
  void disconnect_all(const std::string& from_lab);

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Inbox>> inboxes_;
};

enum class SessionState { New, Ready, Stopped };

/// One transport connection to a peer lab, shared by any number of
/// experiments. A reader thread decodes frames and demultiplexes them;
/// writes are serialized and stamped with a per-session frame_seq.
class Session {
 public:
  Session(Socket socket, std::string my_lab, std::int64_t proto_version = kProtoVersion);
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  /// Registers `experiment_id`, sends HELLO and waits for the peer's HELLO
  /// for the same experiment. Throws Error("DuplicateExperiment"),
  /// Error("VersionMismatch") (session closed) or Error("PeerDisconnect").
  void handshake(const std::string& experiment_id, std::shared_ptr<Inbox> inbox,
                 std::chrono::milliseconds timeout = kConnectTimeout);

  /// Sends a frame; returns its frame_seq. Throws Error("PeerDisconnect").
  std::uint64_t send(const std::string& experiment_id, FrameBody body);

  /// Drops the experiment's registration; the session stops when none remain.
  void release(const std::string& experiment_id);

  SessionState state() const;
  std::string peer_lab() const;
  bool has_experiment(const std::string& experiment_id) const { return demux_.contains(experiment_id); }
  void close();

 private:
  void read_loop();

  Socket socket_;
  std::string my_lab_;
  std::int64_t proto_version_;
  Demux demux_;
  mutable std::mutex mutex_;
  std::condition_variable changed_;
  std::set<std::string> peer_hellos_;
  std::string peer_lab_;
  SessionState state_ = SessionState::New;
  bool version_mismatch_ = false;
  bool closed_ = false;
  std::mutex write_mutex_;
  std::uint64_t next_seq_ = 0;
  std::thread reader_;
};

// ---------------------------------------------------------------------------
// Coordinated execution across labs

struct FederatedResult {
  Trace trace;
  StopReason reason = StopReason::Completed;
  bool completed() const { return reason == StopReason::Completed; }
};

/// Runs the master lab's side of one experiment. `peers` maps every other
/// member lab to its session (handshake done for this experiment); `inbox`
/// is the experiment's queue on all of them. The kernel must be started.
FederatedResult run_master(Kernel& kernel, const std::string& my_lab, const CompiledScenario& compiled,
                           const std::map<std::string, Session*>& peers, Inbox& inbox);

/// Runs a member lab of one experiment against the master's session.
FederatedResult run_member(Kernel& kernel, const std::string& my_lab, const CompiledScenario& compiled,
                           Session& master, Inbox& inbox);

/// Sends STOP{reason} to every session and waits up to kAckTimeout for the
/// ACKs. Returns the labs that did not acknowledge.
std::vector<std::string> stop_broadcast(const std::string& reason, const std::string& experiment_id,
                                        const std::map<std::string, Session*>& sessions, Inbox& inbox,
                                        std::chrono::milliseconds timeout = kAckTimeout);

}  // namespace gridweave
