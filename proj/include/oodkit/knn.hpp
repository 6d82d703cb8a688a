#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oodkit/types.hpp"

namespace oodkit {

enum class Metric { Euclidean, Cosine };

Metric parse_metric(const std::string& name);
std::string to_string(Metric metric);

/// Cosine distance 1 - a.b / (|a||b|), clamped to [0, 2].
template <typename A, typename B>
double cosine_distance(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) fail_validation("zero-norm vector under the cosine metric");
    return std::clamp(1.0 - a.dot(b) / (na * nb), 0.0, 2.0);
}

template <typename A, typename B>
double distance(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b, Metric metric) {
    if (metric == Metric::Cosine) return cosine_distance(a, b);
    return (a - b).norm();
}

struct Neighbor {
    Eigen::Index index;
    double distance;

    friend bool operator<(const Neighbor& l, const Neighbor& r) {
        return l.distance < r.distance || (l.distance == r.distance && l.index < r.index);
    }
    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Reference points prepared for repeated exact full-scan queries.
class ReferenceSet {
public:
    ReferenceSet() = default;
    ReferenceSet(RowMatrix points, Metric metric);

    Eigen::Index size() const { return points_.rows(); }
    Eigen::Index dim() const { return points_.cols(); }
    Metric metric() const { return metric_; }
    const RowMatrix& points() const { return points_; }

    /// Distances from `query` to every reference point, in index order.
    std::vector<double> distances(const Eigen::Ref<const Eigen::RowVectorXd>& query) const;
    /// Distances from reference point `i` to every reference point.
    std::vector<double> distances_from(Eigen::Index i) const;

private:
    RowMatrix points_;
    Vector norms_;
    Metric metric_ = Metric::Euclidean;
};

/// The k nearest entries of `distances`, ascending, ties broken by lower index.
std::vector<Neighbor> select_nearest(std::span<const double> distances, std::size_t k,
                                     std::optional<Eigen::Index> exclude = std::nullopt);

/// The k-distance neighbourhood: every entry within the k-th smallest
/// distance, so ties can make it larger than k. Sorted as select_nearest.
std::vector<Neighbor> k_neighborhood(std::span<const double> distances, std::size_t k,
                                     std::optional<Eigen::Index> exclude = std::nullopt);

/// Exact k nearest neighbours of `query` among the rows of `refs`.
std::vector<Neighbor> knn(const Eigen::Ref<const Eigen::RowVectorXd>& query, const RowMatrix& refs, std::size_t k,
                          Metric metric);

}  // namespace oodkit
