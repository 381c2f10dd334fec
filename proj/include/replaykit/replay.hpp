#pragma once

// Attack phase: flows are replayed last-captured-first, each over a fresh
// transport connection, and every response is appended to an arrival-ordered
// queue.

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "replaykit/capture.hpp"

namespace replaykit::replay {

using std::chrono::milliseconds;

struct ReplayConfig {
  milliseconds per_flow_response_timeout{2000};
  milliseconds inter_request_delay{50};
  milliseconds inter_flow_delay{200};
  milliseconds connect_timeout{1000};

  /// Throws ParameterError unless every duration is positive.
  void validate() const;
};

struct TimedPayload {
  std::int64_t timestamp_us = 0;
  Bytes payload;
};

struct FlowReplayResult {
  std::vector<TimedPayload> responses;
  std::vector<std::size_t> request_lengths;
  std::vector<std::string> notes;  // connect failures, send errors, peer close
};

struct QueueEntry {
  std::int64_t arrival_us = 0;
  std::size_t flow_index = 0;  // position of the source flow in capture order
  Bytes payload;

  bool operator==(const QueueEntry&) const = default;
};

/// Responses in the order they arrived during the attack.
struct ResponseQueue {
  std::vector<QueueEntry> entries;

  bool empty() const noexcept { return entries.empty(); }
  std::size_t size() const noexcept { return entries.size(); }
  bool operator==(const ResponseQueue&) const = default;
};

struct TranscriptEntry {
  std::size_t scheduled_position = 0;
  std::size_t flow_index = 0;
  capture::Transport transport = capture::Transport::Tcp;
  std::vector<std::size_t> request_lengths;
  std::size_t response_count = 0;
  std::vector<std::string> notes;

  bool operator==(const TranscriptEntry&) const = default;
};

struct AttackResult {
  ResponseQueue queue;
  std::vector<TranscriptEntry> transcript;

  bool operator==(const AttackResult&) const = default;
};

/// Stack order: the last captured flow is replayed first.
std::vector<capture::Flow> schedule(std::vector<capture::Flow> flows);

/// Sends every request of `flow` to `device` and gathers responses until the
/// per-flow timeout passes with no traffic. Timestamps are microseconds since
/// `origin`. Never throws on network failure; failures become notes.
FlowReplayResult replay_flow(const capture::Flow& flow, const Endpoint& device,
                             capture::Transport transport, const ReplayConfig& config,
                             std::chrono::steady_clock::time_point origin =
                                 std::chrono::steady_clock::now());

AttackResult run_attack(const std::vector<capture::Flow>& flows, const Endpoint& device,
                        const ReplayConfig& config);

}  // namespace replaykit::replay
