#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "oodkit/types.hpp"

namespace oodkit {

// OODF layout (little-endian):
//   "OODF" | u16 version = 1 | u16 flags | u16 name length | name bytes (UTF-8)
//   | u64 n | flat: u64 d  or  spatial: u64 c, u64 h, u64 w
//   | f32 payload, row-major | [i64 labels x n] | [i64 predicted labels x n]
// flags: bit0 labels, bit1 predicted labels, bit2 spatial layout.
inline constexpr char kFeatureMagic[4] = {'O', 'O', 'D', 'F'};
inline constexpr std::uint16_t kFeatureVersion = 1;

namespace oodf_flags {
inline constexpr std::uint16_t kLabels = 1u << 0;
inline constexpr std::uint16_t kPredicted = 1u << 1;
inline constexpr std::uint16_t kSpatial = 1u << 2;
}  // namespace oodf_flags

using FeatureFile = std::variant<LabeledDataset, SpatialDataset>;

void write_feature_file(const LabeledDataset& dataset, const std::filesystem::path& path);
void write_feature_file(const SpatialDataset& dataset, const std::filesystem::path& path);

/// Reads an OODF file, or a CSV file when the extension is ".csv".
FeatureFile read_feature_file(const std::filesystem::path& path, bool csv_label_column = false);

/// Like read_feature_file but rejects spatial files.
LabeledDataset read_flat_features(const std::filesystem::path& path, bool csv_label_column = false);

/// Comma-separated rows without a header. With `label_column`, the last
/// field of every row is an integer class id.
LabeledDataset parse_csv_features(const std::string& text, bool label_column = false);

/// Score files: a leading '#' comment line, then one value per line.
void write_scores(const std::vector<double>& scores, const std::filesystem::path& path);
std::vector<double> read_scores(const std::filesystem::path& path);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double value);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace oodkit
