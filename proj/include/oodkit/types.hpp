#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "oodkit/error.hpp"

namespace oodkit {

template <typename Scalar>
using RowMatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrix = RowMatrixX<double>;
using Vector = Eigen::VectorXd;

using ClassId = std::int64_t;
using Labels = std::vector<ClassId>;

/// Label value reserved for rows without a class.
inline constexpr ClassId kUnlabeled = -1;

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& values) {
    return values.allFinite();
}

/// n x d block of embeddings for one network layer, one sample per row.
///
/// Always non-empty and finite; construction validates.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    explicit FeatureMatrix(RowMatrix values, std::string layer_name = {});

    Eigen::Index rows() const { return values_.rows(); }
    Eigen::Index dim() const { return values_.cols(); }
    bool empty() const { return values_.size() == 0; }
    const RowMatrix& values() const { return values_; }
    const std::string& layer_name() const { return layer_name_; }

    auto row(Eigen::Index i) const { return values_.row(i); }

private:
    RowMatrix values_;
    std::string layer_name_;
};

/// c x h x w activation tensor. Stored as a c x (h*w) matrix whose column
/// index is the flattened spatial location i*w + j.
class SpatialFeatureMap {
public:
    SpatialFeatureMap() = default;
    SpatialFeatureMap(Eigen::Index channels, Eigen::Index height, Eigen::Index width, RowMatrix values);

    Eigen::Index channels() const { return channels_; }
    Eigen::Index height() const { return height_; }
    Eigen::Index width() const { return width_; }
    Eigen::Index locations() const { return height_ * width_; }
    const RowMatrix& values() const { return values_; }

    double at(Eigen::Index c, Eigen::Index i, Eigen::Index j) const { return values_(c, i * width_ + j); }

private:
    Eigen::Index channels_ = 0;
    Eigen::Index height_ = 0;
    Eigen::Index width_ = 0;
    RowMatrix values_;
};

/// Feature rows with optional ground-truth and classifier-predicted labels.
struct LabeledDataset {
    FeatureMatrix features;
    std::optional<Labels> labels;
    std::optional<Labels> predicted_labels;

    /// Throws a validation error when label arrays disagree with the rows.
    void validate() const;
    /// Distinct non-negative class ids, ascending. Requires labels.
    std::vector<ClassId> classes() const;
};

/// A sequence of equally shaped spatial maps, one per sample.
struct SpatialDataset {
    std::vector<SpatialFeatureMap> maps;
    std::string layer_name;
    std::optional<Labels> labels;
    std::optional<Labels> predicted_labels;

    void validate() const;
};

/// Confidence scores for in-distribution and OoD samples. Larger is more
/// in-distribution.
struct ScoreSet {
    std::vector<double> in_scores;
    std::vector<double> out_scores;

    void validate() const;
};

}  // namespace oodkit
