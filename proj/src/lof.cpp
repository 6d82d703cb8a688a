#include "oodkit/lof.hpp"

#include <algorithm>
#include <limits>
#include <map>

namespace oodkit {

LofMode parse_lof_mode(const std::string& name) {
    if (name == "global") return LofMode::Global;
    if (name == "per_class") return LofMode::PerClass;
    fail_validation("unknown LOF mode '" + name + "'");
}

std::string to_string(LofMode mode) { return mode == LofMode::PerClass ? "per_class" : "global"; }

void LofConfig::validate() const {
    if (k < 1) fail_validation("LOF needs k >= 1");
}

namespace {

double reach_sum(const std::vector<Neighbor>& hood, const std::vector<double>& k_distance) {
    double sum = 0.0;
    for (const auto& o : hood) sum += std::max(k_distance[static_cast<std::size_t>(o.index)], o.distance);
    return std::max(sum, kMinReachSum);
}

LofPart fit_part(RowMatrix points, ClassId class_id, const LofConfig& config) {
    if (static_cast<std::size_t>(points.rows()) <= config.k) {
        fail_validation("LOF with k = " + std::to_string(config.k) + " needs more than k points" +
                        (class_id == kUnlabeled ? std::string() : " in class " + std::to_string(class_id)) +
                        ", have " + std::to_string(points.rows()));
    }
    LofPart part;
    part.class_id = class_id;
    part.centroid = points.colwise().mean();
    part.refs = ReferenceSet(std::move(points), config.metric);

    const auto n = static_cast<std::size_t>(part.refs.size());
    std::vector<std::vector<Neighbor>> hoods(n);
    part.k_distance.resize(n);
    for (std::size_t p = 0; p < n; ++p) {
        const auto idx = static_cast<Eigen::Index>(p);
        hoods[p] = k_neighborhood(part.refs.distances_from(idx), config.k, idx);
        part.k_distance[p] = hoods[p].back().distance;
    }
    part.lrd.resize(n);
    for (std::size_t p = 0; p < n; ++p) {
        part.lrd[p] = static_cast<double>(hoods[p].size()) / reach_sum(hoods[p], part.k_distance);
    }
    return part;
}

void check_part(const LofPart& part, const LofConfig& config) {
    const auto n = static_cast<std::size_t>(part.refs.size());
    if (n <= config.k) fail_validation("stored LOF part has too few points for k");
    if (part.k_distance.size() != n || part.lrd.size() != n) fail_validation("stored LOF arrays have wrong length");
    if (part.centroid.size() != part.refs.dim()) fail_validation("stored LOF centroid has wrong dimension");
    for (double v : part.lrd) {
        if (!std::isfinite(v) || v <= 0.0) fail_validation("stored LRD is not positive and finite");
    }
}

}  // namespace

LofModel LofModel::fit(const LabeledDataset& train, const LofConfig& config) {
    config.validate();
    train.validate();
    LofModel model;
    model.config_ = config;
    const auto& x = train.features.values();

    if (config.mode == LofMode::Global) {
        model.parts_.push_back(fit_part(x, kUnlabeled, config));
        return model;
    }

    if (!train.labels) fail_validation("per-class LOF needs labelled training data");
    std::map<ClassId, std::vector<Eigen::Index>> rows_by_class;
    for (std::size_t i = 0; i < train.labels->size(); ++i) {
        const ClassId c = (*train.labels)[i];
        if (c < 0) fail_validation("per-class LOF training data contains unlabelled rows");
        rows_by_class[c].push_back(static_cast<Eigen::Index>(i));
    }
    for (const auto& [c, rows] : rows_by_class) {
        RowMatrix points(static_cast<Eigen::Index>(rows.size()), x.cols());
        for (std::size_t r = 0; r < rows.size(); ++r) points.row(static_cast<Eigen::Index>(r)) = x.row(rows[r]);
        model.parts_.push_back(fit_part(std::move(points), c, config));
    }
    return model;
}

LofModel LofModel::from_parts(const LofConfig& config, std::vector<LofPart> parts) {
    config.validate();
    if (parts.empty()) fail_validation("LOF model has no parts");
    if (config.mode == LofMode::Global && parts.size() != 1) fail_validation("global LOF model must have one part");
    for (const auto& part : parts) {
        check_part(part, config);
        if (part.refs.dim() != parts.front().refs.dim()) fail_validation("LOF parts differ in dimension");
        if (part.refs.metric() != config.metric) fail_validation("LOF part metric does not match config");
    }
    LofModel model;
    model.config_ = config;
    model.parts_ = std::move(parts);
    return model;
}

ClassId LofModel::nearest_class(const Eigen::Ref<const Eigen::RowVectorXd>& query) const {
    double best = std::numeric_limits<double>::infinity();
    ClassId best_class = parts_.front().class_id;
    for (const auto& part : parts_) {
        const double d = distance(query, part.centroid, config_.metric);
        if (d < best) {
            best = d;
            best_class = part.class_id;
        }
    }
    return best_class;
}

const LofPart& LofModel::part_for(const Eigen::Ref<const Eigen::RowVectorXd>& query,
                                  std::optional<ClassId> predicted_class) const {
    if (config_.mode == LofMode::Global) return parts_.front();
    const ClassId c = (predicted_class && *predicted_class >= 0) ? *predicted_class : nearest_class(query);
    auto it = std::find_if(parts_.begin(), parts_.end(), [c](const LofPart& p) { return p.class_id == c; });
    if (it == parts_.end()) fail_validation("unknown class id " + std::to_string(c));
    return *it;
}

LofEvaluation LofModel::evaluate(const Eigen::Ref<const Eigen::RowVectorXd>& query,
                                 std::optional<ClassId> predicted_class) const {
    if (query.size() != dim()) {
        fail_validation("query has dimension " + std::to_string(query.size()) + ", model expects " +
                        std::to_string(dim()));
    }
    const LofPart& part = part_for(query, predicted_class);
    LofEvaluation out;
    out.class_id = part.class_id;
    out.neighborhood = k_neighborhood(part.refs.distances(query), config_.k);
    out.lrd = static_cast<double>(out.neighborhood.size()) / reach_sum(out.neighborhood, part.k_distance);
    double lrd_sum = 0.0;
    for (const auto& o : out.neighborhood) lrd_sum += part.lrd[static_cast<std::size_t>(o.index)];
    out.lof = lrd_sum / (static_cast<double>(out.neighborhood.size()) * out.lrd);
    return out;
}

Vector LofModel::score_rows(const RowMatrix& queries, const std::optional<Labels>& predicted) const {
    if (predicted && predicted->size() != static_cast<std::size_t>(queries.rows())) {
        fail_validation("predicted labels do not match the number of queries");
    }
    Vector out(queries.rows());
    for (Eigen::Index i = 0; i < queries.rows(); ++i) {
        std::optional<ClassId> c;
        if (predicted) c = (*predicted)[static_cast<std::size_t>(i)];
        out(i) = score(queries.row(i), c);
    }
    return out;
}

}  // namespace oodkit
