#pragma once

// The train / attack / detect phases as library calls, and the assessment
// loop that runs them against a simulated device with known ground truth.

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "replaykit/capture.hpp"
#include "replaykit/errors.hpp"
#include "replaykit/novelty.hpp"
#include "replaykit/protocol.hpp"
#include "replaykit/replay.hpp"
#include "replaykit/report.hpp"
#include "replaykit/sim/profile.hpp"
#include "replaykit/verdict.hpp"

namespace replaykit::pipeline {

/// Raised when a training capture holds no app<->device traffic.
class NoLocalConnectivityError : public Error {
 public:
  using Error::Error;
};

struct ModelSettings {
  detector::ModelKind kind = detector::ModelKind::Lof;
  std::size_t k = detector::kDefaultLofK;
  double threshold = detector::kDefaultLofThreshold;
  std::size_t trees = 100;
  std::size_t subsample = 256;  // clamped to the training size
  std::uint64_t seed = 42;
  double anomaly_cutoff = detector::kDefaultAnomalyCutoff;
};

struct TrainingResult {
  std::size_t request_count = 0;
  std::vector<Bytes> responses;
  std::optional<detector::ResponseClass> response_type;  // unset without responses
  std::optional<detector::NoveltyModel> model;           // unset with fewer than 2 responses
};

/// Gate on local connectivity, keep device->app payloads, train the model.
/// Throws NoLocalConnectivityError. A device that never answers yields no
/// model rather than an error; callers that need one check `model`.
TrainingResult train(const std::vector<capture::PacketRecord>& records,
                     const capture::SessionConfig& session, const ModelSettings& settings);

/// Segments the captured exchange and replays it against `session.device`.
report::AttackFile attack(const std::vector<capture::PacketRecord>& captured,
                          const capture::SessionConfig& session, const replay::ReplayConfig& config);

report::VerdictReport detect(const report::AttackFile& attack, const detector::NoveltyModel* model,
                             const verdict::DetectionConfig& config, const std::string& scenario);

struct AssessConfig {
  sim::DeviceProfile profile;
  sim::Scenario scenario = sim::Scenario::NonRestart;
  std::size_t repetitions = 50;
  replay::ReplayConfig replay;
  verdict::DetectionConfig detection;
  ModelSettings model;
  std::chrono::milliseconds post_restart_delay{1000};
  /// App source address; port 0 means a fresh ephemeral port per command.
  Endpoint app{"127.0.0.1", 0};
  std::function<void(std::size_t run, const report::VerdictReport&)> progress;

  void validate() const;
};

/// Spawns the profile, trains on the default companion script, then per
/// repetition: capture an OBVERSE command, (restart,) trigger REVERSE,
/// replay, decide, and compare against the device's actual state.
report::EvaluationReport assess(const AssessConfig& config);

}  // namespace replaykit::pipeline
