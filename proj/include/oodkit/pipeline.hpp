#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "oodkit/ensemble.hpp"
#include "oodkit/knn.hpp"
#include "oodkit/lof.hpp"
#include "oodkit/mahalanobis.hpp"
#include "oodkit/metrics.hpp"
#include "oodkit/model_io.hpp"
#include "oodkit/pooling.hpp"

namespace oodkit {

enum class DetectorKind { Lof, LofD, Mahalanobis };

DetectorKind parse_detector_kind(const std::string& name);
std::string to_string(DetectorKind kind);

/// Everything needed to fit one detector on one layer.
struct DetectorSpec {
    DetectorKind kind = DetectorKind::Lof;
    std::size_t k = 20;
    /// Unset: euclidean for lof, cosine for lof_d.
    std::optional<Metric> metric;
    std::optional<double> epsilon;
    CovarianceMode covariance = CovarianceMode::Tied;

    LofConfig lof_config() const;
};

DetectorModel fit_detector(const LabeledDataset& train, const DetectorSpec& spec);

/// Pipeline configuration, grammar version 1: one "key = value" per line,
/// '#' starts a comment, unknown keys are errors. Path values may contain
/// "{layer}", replaced by each entry of `layers`.
struct PipelineConfig {
    DetectorSpec detector;
    PoolingSpec pooling;
    std::vector<std::string> layers;
    std::string train;
    std::string test_in;
    std::string test_out;
    std::string val_in;
    std::string val_out;
    double val_fraction = 0.2;
    std::uint64_t seed = 0;
    std::string out_dir = "oodkit_out";
    std::string benchmark = "benchmark";
    bool csv_labels = false;

    /// Sets one key; throws on unknown keys or bad values.
    void set(const std::string& key, const std::string& value);
    void validate() const;

    static const std::vector<std::string>& keys();
};

std::map<std::string, std::string> parse_key_values(const std::string& text);
/// Applies file entries, then `overrides` (flags beat file).
PipelineConfig make_pipeline_config(const std::map<std::string, std::string>& file_entries,
                                    const std::map<std::string, std::string>& overrides = {});

/// Loads a feature file, pooling spatial maps with `pooling`.
LabeledDataset load_features(const std::filesystem::path& path, const PoolingSpec& pooling, bool csv_labels = false);

struct PipelineResult {
    EvalReport report;
    std::vector<std::filesystem::path> artifacts;
    std::optional<EnsembleWeights> weights;
    /// Describes how validation data was obtained for weight fitting.
    std::string validation_note;
};

/// pool -> fit -> score per layer -> (multi-layer) fit weights, combine -> eval.
/// Writes scores, weights, and report files into out_dir. On failure, the
/// error message names the stage and a PARTIAL file lists what was written.
PipelineResult run_pipeline(const PipelineConfig& config);

}  // namespace oodkit
