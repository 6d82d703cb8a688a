#include "oodkit/knn.hpp"

#include <algorithm>

namespace oodkit {

Metric parse_metric(const std::string& name) {
    if (name == "euclidean") return Metric::Euclidean;
    if (name == "cosine") return Metric::Cosine;
    fail_validation("unknown metric '" + name + "'");
}

std::string to_string(Metric metric) { return metric == Metric::Cosine ? "cosine" : "euclidean"; }

ReferenceSet::ReferenceSet(RowMatrix points, Metric metric) : points_(std::move(points)), metric_(metric) {
    if (points_.rows() < 1 || points_.cols() < 1) fail_validation("reference set is empty");
    if (!all_finite(points_)) fail_validation("reference set contains non-finite values");
    if (metric_ == Metric::Cosine) {
        norms_ = points_.rowwise().norm();
        if ((norms_.array() == 0.0).any()) fail_validation("zero-norm reference point under the cosine metric");
    }
}

std::vector<double> ReferenceSet::distances(const Eigen::Ref<const Eigen::RowVectorXd>& query) const {
    if (query.size() != dim()) {
        fail_validation("query has dimension " + std::to_string(query.size()) + ", references have " +
                        std::to_string(dim()));
    }
    std::vector<double> out(static_cast<std::size_t>(size()));
    if (metric_ == Metric::Euclidean) {
        for (Eigen::Index i = 0; i < size(); ++i) {
            out[static_cast<std::size_t>(i)] = (points_.row(i) - query).norm();
        }
        return out;
    }
    const double qn = query.norm();
    if (qn == 0.0) fail_validation("zero-norm query under the cosine metric");
    for (Eigen::Index i = 0; i < size(); ++i) {
        out[static_cast<std::size_t>(i)] = std::clamp(1.0 - points_.row(i).dot(query) / (norms_(i) * qn), 0.0, 2.0);
    }
    return out;
}

std::vector<double> ReferenceSet::distances_from(Eigen::Index i) const { return distances(points_.row(i)); }

namespace {

std::vector<Neighbor> candidates(std::span<const double> distances, std::size_t k,
                                 std::optional<Eigen::Index> exclude) {
    std::vector<Neighbor> all;
    all.reserve(distances.size());
    for (std::size_t i = 0; i < distances.size(); ++i) {
        const auto idx = static_cast<Eigen::Index>(i);
        if (exclude && *exclude == idx) continue;
        all.push_back({idx, distances[i]});
    }
    if (k < 1 || k > all.size()) {
        fail_validation("k = " + std::to_string(k) + " needs at least k candidate points, have " +
                        std::to_string(all.size()));
    }
    return all;
}

}  // namespace

std::vector<Neighbor> select_nearest(std::span<const double> distances, std::size_t k,
                                     std::optional<Eigen::Index> exclude) {
    auto all = candidates(distances, k, exclude);
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
    all.resize(k);
    return all;
}

std::vector<Neighbor> k_neighborhood(std::span<const double> distances, std::size_t k,
                                     std::optional<Eigen::Index> exclude) {
    auto all = candidates(distances, k, exclude);
    const auto kth = all.begin() + static_cast<std::ptrdiff_t>(k - 1);
    std::nth_element(all.begin(), kth, all.end());
    const double k_distance = kth->distance;
    auto end = std::partition(all.begin(), all.end(), [&](const Neighbor& n) { return n.distance <= k_distance; });
    all.erase(end, all.end());
    std::sort(all.begin(), all.end());
    return all;
}

std::vector<Neighbor> knn(const Eigen::Ref<const Eigen::RowVectorXd>& query, const RowMatrix& refs, std::size_t k,
                          Metric metric) {
    if (k < 1 || k > static_cast<std::size_t>(refs.rows())) {
        fail_validation("k must be between 1 and the number of reference points");
    }
    const ReferenceSet set(refs, metric);
    return select_nearest(set.distances(query), k);
}

}  // namespace oodkit
