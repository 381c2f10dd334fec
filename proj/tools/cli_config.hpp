#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "replaykit/capture.hpp"
#include "replaykit/pipeline.hpp"
#include "replaykit/replay.hpp"
#include "replaykit/sim/profile.hpp"
#include "replaykit/verdict.hpp"

namespace replaykit::cli {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kError = 1;
inline constexpr int kUsage = 2;
inline constexpr int kNoLocalConnectivity = 3;
inline constexpr int kVulnerable = 10;
inline constexpr int kNotVulnerable = 11;
}  // namespace exit_code

/// Thrown for bad or missing inputs; maps to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct Paths {
  std::optional<std::filesystem::path> training_capture;
  std::optional<std::filesystem::path> attack_capture;
  std::optional<std::filesystem::path> model;
  std::optional<std::filesystem::path> attack;
  std::optional<std::filesystem::path> report;
};

struct PipelineConfig {
  std::optional<Endpoint> app;
  std::optional<Endpoint> device;
  capture::TransportFilter transport = capture::TransportFilter::Both;
  replay::ReplayConfig replay;
  verdict::DetectionConfig detection;
  pipeline::ModelSettings model;
  sim::Scenario scenario = sim::Scenario::NonRestart;
  std::size_t repetitions = 50;
  std::chrono::milliseconds post_restart_delay{1000};
  sim::DeviceProfile profile;
  bool profile_set = false;
  Paths paths;

  capture::SessionConfig session() const;
};

/// Reads the documented config keys; unknown keys are rejected.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig config_from_json(const nlohmann::json& j);

capture::TransportFilter transport_filter_from_string(std::string_view s);

}  // namespace replaykit::cli
