#pragma once

#include <filesystem>
#include <string>

#include "replaykit/novelty.hpp"

namespace replaykit::detector {

inline constexpr int kModelFormatVersion = 1;

/// Field-for-field JSON dump of a model, including the standardization
/// parameters (LOF) and the RNG seed and trees (isolation forest). See
/// docs/model-format.md.
std::string serialize_model(const NoveltyModel& model);

/// Throws FormatError on a malformed or version-mismatched document.
NoveltyModel deserialize_model(const std::string& text);

void save_model(const NoveltyModel& model, const std::filesystem::path& path);
NoveltyModel load_model(const std::filesystem::path& path);

}  // namespace replaykit::detector
