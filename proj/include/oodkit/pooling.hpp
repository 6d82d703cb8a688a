#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "oodkit/types.hpp"

namespace oodkit {

// Channel-wise reducers over a c x L activation block (one row per channel,
// one column per spatial location). Each returns a length-c vector.

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> global_average_pool(const Eigen::MatrixBase<Derived>& x) {
    return x.rowwise().mean();
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> global_max_pool(const Eigen::MatrixBase<Derived>& x) {
    return x.rowwise().maxCoeff();
}

/// ((1/L) * sum x^p)^(1/p) per channel. Inputs must be non-negative.
/// Evaluated as m * (mean((x/m)^p))^(1/p) with m the channel max, so large p
/// does not overflow.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> generalized_mean_pool(const Eigen::MatrixBase<Derived>& x,
                                                                                 typename Derived::Scalar p) {
    using Scalar = typename Derived::Scalar;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(x.rows());
    for (Eigen::Index k = 0; k < x.rows(); ++k) {
        const Scalar m = x.row(k).maxCoeff();
        if (m <= Scalar(0)) {
            out(k) = Scalar(0);
            continue;
        }
        const Scalar mean_pow = (x.row(k).array() / m).pow(p).mean();
        out(k) = m * std::pow(mean_pow, Scalar(1) / p);
    }
    return out;
}

/// Cross-dimensional weighting. Spatial weight from the channel-summed
/// response, channel weight from inverse sparsity. Inputs must be
/// non-negative.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> crow_pool(const Eigen::MatrixBase<Derived>& x) {
    using Scalar = typename Derived::Scalar;
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> summed = x.colwise().sum();
    const Scalar norm = std::sqrt(summed.squaredNorm());
    Eigen::Matrix<Scalar, 1, Eigen::Dynamic> spatial = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>::Zero(x.cols());
    if (norm > Scalar(0)) {
        for (Eigen::Index l = 0; l < x.cols(); ++l) {
            if (summed(l) > Scalar(0)) spatial(l) = std::sqrt(summed(l) / norm);
        }
    }

    const Vec nonzero_fraction = (x.array() != Scalar(0)).template cast<Scalar>().rowwise().mean();
    const Scalar total = nonzero_fraction.sum();
    Vec channel = Vec::Zero(x.rows());
    for (Eigen::Index k = 0; k < x.rows(); ++k) {
        if (nonzero_fraction(k) > Scalar(0)) channel(k) = std::log(total / nonzero_fraction(k));
    }
    return channel.cwiseProduct(x * spatial.transpose());
}

enum class PoolMethod { Gap, Gmp, Gem, Crow, Concat };

struct PoolingSpec {
    PoolMethod method = PoolMethod::Gap;
    double gem_power = 3.0;
    /// Parts of a concatenation, in output order. Nested concat is not allowed.
    std::vector<PoolMethod> parts;

    void validate() const;
    /// Output length for a map with `channels` channels.
    Eigen::Index output_size(Eigen::Index channels) const;
};

/// Parses "gap", "gmp", "gem", "crow", or a concatenation such as "gap+gmp".
PoolingSpec parse_pooling_spec(const std::string& text, double gem_power = 3.0);
std::string to_string(const PoolingSpec& spec);

struct PoolResult {
    Vector features;
    /// Set when negative activations were clamped to zero (gem, crow).
    bool clamped_negative = false;
};

PoolResult pool(const SpatialFeatureMap& map, const PoolingSpec& spec);

/// Pools every map in the dataset; labels carry over row for row.
LabeledDataset pool_dataset(const SpatialDataset& dataset, const PoolingSpec& spec, bool* clamped_negative = nullptr);

}  // namespace oodkit
