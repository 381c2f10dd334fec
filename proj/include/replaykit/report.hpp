#pragma once

// JSON documents exchanged between CLI phases: the attack file (transcript,
// response queue, attack-phase wire records), the verdict report and the
// evaluation report. Every *_from_json is strict and throws FormatError.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "replaykit/capture.hpp"
#include "replaykit/novelty.hpp"
#include "replaykit/replay.hpp"
#include "replaykit/verdict.hpp"

namespace replaykit::report {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

struct AttackFile {
  Endpoint device;
  replay::AttackResult result;
  /// Attack-phase traffic: the captured exchange plus every replayed response.
  std::vector<capture::PacketRecord> wire;

  bool operator==(const AttackFile&) const = default;
};

/// Wire records for the protocol check: the captured records, followed by
/// the replayed responses (device -> local side) tagged with their flow's transport.
std::vector<capture::PacketRecord> attack_wire(const std::vector<capture::PacketRecord>& captured,
                                               const replay::AttackResult& result,
                                               const Endpoint& device);

json to_json(const AttackFile& a);
AttackFile attack_from_json(const json& j);

struct VerdictReport {
  std::string device_id;
  std::string scenario = "non_restart";  // "non_restart" | "restart"
  verdict::Verdict verdict;
  std::size_t j = 3;
  std::optional<detector::ModelKind> model_kind;  // absent when no model was needed
  std::string started;                            // ISO-8601 UTC
  std::string finished;

  bool operator==(const VerdictReport&) const = default;
};

json to_json(const VerdictReport& r);
VerdictReport verdict_from_json(const json& j);

struct EvaluationReport {
  std::string device_id;
  std::string behavior;
  std::string scenario;
  std::size_t repetitions = 0;
  verdict::GroundTruth ground_truth = verdict::GroundTruth::Vulnerable;
  double accuracy = 0.0;
  /// Verdict count per reason: which check decided each run.
  std::map<std::string, std::size_t> breakdown;
  std::string response_type;
  std::size_t training_size = 0;
  std::vector<VerdictReport> runs;
  /// Runs whose query_state ground truth disagreed with the matrix (should be 0).
  std::size_t ground_truth_mismatches = 0;

  bool operator==(const EvaluationReport&) const = default;
};

json to_json(const EvaluationReport& r);
EvaluationReport evaluation_from_json(const json& j);

std::string now_iso8601();

void write_json(const std::filesystem::path& path, const json& j);
json read_json(const std::filesystem::path& path);

/// Human-readable rendering of any of the documents above.
std::string render(const json& j);

}  // namespace replaykit::report
