#include "oodkit/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace oodkit {

FeatureMatrix::FeatureMatrix(RowMatrix values, std::string layer_name)
    : values_(std::move(values)), layer_name_(std::move(layer_name)) {
    if (values_.rows() < 1 || values_.cols() < 1) {
        fail_validation("feature matrix must have at least one row and one column");
    }
    if (!all_finite(values_)) {
        fail_validation("feature matrix contains non-finite values");
    }
}

SpatialFeatureMap::SpatialFeatureMap(Eigen::Index channels, Eigen::Index height, Eigen::Index width,
                                     RowMatrix values)
    : channels_(channels), height_(height), width_(width), values_(std::move(values)) {
    if (channels < 1 || height < 1 || width < 1) {
        fail_validation("spatial map dimensions must be positive");
    }
    if (values_.rows() != channels || values_.cols() != height * width) {
        fail_validation("spatial map values do not match c x (h*w)");
    }
    if (!all_finite(values_)) {
        fail_validation("spatial map contains non-finite values");
    }
}

namespace {

void check_labels(const std::optional<Labels>& labels, std::size_t rows, const char* what) {
    if (!labels) return;
    if (labels->size() != rows) {
        fail_validation(std::string(what) + " length does not match the number of rows");
    }
    if (std::any_of(labels->begin(), labels->end(), [](ClassId c) { return c < kUnlabeled; })) {
        fail_validation(std::string(what) + " contain ids below -1");
    }
}

}  // namespace

void LabeledDataset::validate() const {
    if (features.empty()) fail_validation("dataset has no rows");
    const auto n = static_cast<std::size_t>(features.rows());
    check_labels(labels, n, "labels");
    check_labels(predicted_labels, n, "predicted labels");
}

std::vector<ClassId> LabeledDataset::classes() const {
    if (!labels) fail_validation("dataset has no labels");
    std::set<ClassId> seen;
    for (ClassId c : *labels) {
        if (c >= 0) seen.insert(c);
    }
    return {seen.begin(), seen.end()};
}

void SpatialDataset::validate() const {
    if (maps.empty()) fail_validation("spatial dataset has no maps");
    const auto& first = maps.front();
    for (const auto& m : maps) {
        if (m.channels() != first.channels() || m.height() != first.height() || m.width() != first.width()) {
            fail_validation("spatial maps differ in shape");
        }
    }
    check_labels(labels, maps.size(), "labels");
    check_labels(predicted_labels, maps.size(), "predicted labels");
}

void ScoreSet::validate() const {
    if (in_scores.empty() || out_scores.empty()) {
        fail_validation("score set needs at least one in-distribution and one OoD score");
    }
    auto finite = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    if (!finite(in_scores) || !finite(out_scores)) {
        fail_validation("score set contains non-finite values");
    }
}

}  // namespace oodkit
