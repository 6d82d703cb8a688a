#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "oodkit/knn.hpp"
#include "oodkit/types.hpp"

namespace oodkit {

enum class LofMode { Global, PerClass };

LofMode parse_lof_mode(const std::string& name);
std::string to_string(LofMode mode);

struct LofConfig {
    std::size_t k = 20;
    Metric metric = Metric::Euclidean;
    LofMode mode = LofMode::Global;

    void validate() const;
};

/// Reach-distance sums below this are clamped so duplicated points give a
/// large but finite local reachability density.
inline constexpr double kMinReachSum = 1e-300;

/// One fitted reference set: the whole training set in global mode, or one
/// class in per-class mode.
struct LofPart {
    ClassId class_id = kUnlabeled;
    ReferenceSet refs;
    std::vector<double> k_distance;
    std::vector<double> lrd;
    Eigen::RowVectorXd centroid;
};

/// Breakdown of a single query's outlier factor.
struct LofEvaluation {
    ClassId class_id = kUnlabeled;
    std::vector<Neighbor> neighborhood;
    double lrd = 0.0;
    double lof = 0.0;
};

/// Local outlier factor model for novelty detection. The fitted reference
/// points and their densities are immutable; queries are never inserted.
class LofModel {
public:
    static LofModel fit(const LabeledDataset& train, const LofConfig& config);

    /// Rebuilds a model from stored parts (used by model persistence).
    static LofModel from_parts(const LofConfig& config, std::vector<LofPart> parts);

    const LofConfig& config() const { return config_; }
    const std::vector<LofPart>& parts() const { return parts_; }
    Eigen::Index dim() const { return parts_.front().refs.dim(); }

    /// Class whose centroid is closest to `query` under the model metric.
    ClassId nearest_class(const Eigen::Ref<const Eigen::RowVectorXd>& query) const;

    /// In per-class mode, `predicted_class` selects the class model; when
    /// absent the nearest centroid decides. Ignored in global mode.
    LofEvaluation evaluate(const Eigen::Ref<const Eigen::RowVectorXd>& query,
                           std::optional<ClassId> predicted_class = std::nullopt) const;

    double lof(const Eigen::Ref<const Eigen::RowVectorXd>& query,
               std::optional<ClassId> predicted_class = std::nullopt) const {
        return evaluate(query, predicted_class).lof;
    }

    /// Confidence = -LOF; larger is more in-distribution.
    double score(const Eigen::Ref<const Eigen::RowVectorXd>& query,
                 std::optional<ClassId> predicted_class = std::nullopt) const {
        return -lof(query, predicted_class);
    }

    /// Scores every row. `predicted` entries of -1 fall back to the nearest centroid.
    Vector score_rows(const RowMatrix& queries, const std::optional<Labels>& predicted = std::nullopt) const;

private:
    const LofPart& part_for(const Eigen::Ref<const Eigen::RowVectorXd>& query,
                            std::optional<ClassId> predicted_class) const;

    LofConfig config_;
    std::vector<LofPart> parts_;
};

inline LofModel fit_lof(const LabeledDataset& train, const LofConfig& config) { return LofModel::fit(train, config); }

inline double score_lof(const LofModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& query,
                        std::optional<ClassId> predicted_class = std::nullopt) {
    return model.score(query, predicted_class);
}

}  // namespace oodkit
