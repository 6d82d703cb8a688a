#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "oodkit/types.hpp"

namespace oodkit {

/// Per-layer confidence scores for the same samples. Column l holds layer l.
struct LayerScores {
    std::vector<std::string> layer_names;
    Eigen::MatrixXd scores;

    Eigen::Index layers() const { return scores.cols(); }
    Eigen::Index samples() const { return scores.rows(); }
    void validate() const;

    static LayerScores from_columns(std::vector<std::string> names, const std::vector<std::vector<double>>& columns);
};

struct EnsembleWeights {
    std::vector<std::string> layer_names;
    Vector alpha;
    double bias = 0.0;
    /// Layers left at weight 0 because their validation scores had no variance.
    std::vector<std::string> dropped;

    void validate() const;
};

/// bias + sum_l alpha_l * s_l for every sample.
Vector combine(const LayerScores& scores, const EnsembleWeights& weights);

struct LogisticOptions {
    double learning_rate = 0.1;
    int iterations = 2000;
    double l2 = 1e-4;
};

/// Logistic regression of in (1) vs out (0) on standardized per-layer scores,
/// full-batch gradient descent from zero; weights returned on the raw scale.
EnsembleWeights fit_weights(const LayerScores& val_in, const LayerScores& val_out, const LogisticOptions& options = {});

/// Plain-text "name = value" lines, one per layer, then "bias = value".
std::string weights_to_text(const EnsembleWeights& weights);
EnsembleWeights weights_from_text(const std::string& text);

}  // namespace oodkit
