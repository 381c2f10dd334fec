#pragma once

// Detection: Response Check, Protocol Check, then the novelty model over the
// first j queued responses.

#include <string_view>
#include <vector>

#include "replaykit/capture.hpp"
#include "replaykit/novelty.hpp"
#include "replaykit/replay.hpp"

namespace replaykit::verdict {

struct DetectionConfig {
  std::size_t j = 3;

  void validate() const;
};

enum class Outcome { Successful, Failed };
enum class Reason { NoResponse, StandardProtocol, AllIrregular, RegularFound };
enum class CheckResult { Pass, Fail };
enum class GroundTruth { Vulnerable, NotVulnerable };

std::string_view to_string(Outcome o);
std::string_view to_string(Reason r);
std::string_view to_string(GroundTruth g);
Outcome outcome_from_string(std::string_view s);
Reason reason_from_string(std::string_view s);
GroundTruth ground_truth_from_string(std::string_view s);

struct Verdict {
  Outcome outcome = Outcome::Failed;
  Reason reason = Reason::NoResponse;
  std::vector<detector::Label> labels;  // one per examined response, at most j
  std::vector<double> scores;           // model score behind each label

  bool operator==(const Verdict&) const = default;
};

CheckResult response_check(const replay::ResponseQueue& queue);

/// Fails when the attack-phase capture (both directions) shows TLS, DTLS or QUIC.
CheckResult protocol_check(const std::vector<capture::PacketRecord>& records);

/// Response Check, then Protocol Check, then the model over the first
/// min(j, |queue|) responses. SUCCESSFUL iff at least one of them is Regular.
Verdict decide(const replay::ResponseQueue& queue,
               const std::vector<capture::PacketRecord>& attack_records,
               const detector::NoveltyModel& model, const DetectionConfig& config);

/// Same, for callers that may have no model (a device that never answered
/// during training). Throws ParameterError if the model stage is reached
/// with `model` null.
Verdict decide(const replay::ResponseQueue& queue,
               const std::vector<capture::PacketRecord>& attack_records,
               const detector::NoveltyModel* model, const DetectionConfig& config);

/// Fraction of verdicts agreeing with a fixed ground truth (SUCCESSFUL <->
/// vulnerable). Throws ParameterError on an empty list.
double evaluate_accuracy(const std::vector<Verdict>& verdicts, GroundTruth truth);

}  // namespace replaykit::verdict
