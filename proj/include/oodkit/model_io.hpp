#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include "oodkit/lof.hpp"
#include "oodkit/mahalanobis.hpp"

namespace oodkit {

// OODM layout (little-endian); see docs/model_format.md.
inline constexpr char kModelMagic[4] = {'O', 'O', 'D', 'M'};
inline constexpr std::uint16_t kModelVersion = 1;

using DetectorModel = std::variant<LofModel, MahalanobisModel>;

void write_model(const DetectorModel& model, const std::filesystem::path& path);
DetectorModel read_model(const std::filesystem::path& path);

/// Scores every row of `queries`. LOF models in per-class mode use the
/// dataset's predicted labels when present.
Vector score_dataset(const DetectorModel& model, const LabeledDataset& queries);

std::string detector_name(const DetectorModel& model);

}  // namespace oodkit
