#include "oodkit/mahalanobis.hpp"

#include <algorithm>
#include <limits>
#include <map>

namespace oodkit {

CovarianceMode parse_covariance_mode(const std::string& name) {
    if (name == "tied") return CovarianceMode::Tied;
    if (name == "per_class") return CovarianceMode::PerClass;
    fail_validation("unknown covariance mode '" + name + "'");
}

std::string to_string(CovarianceMode mode) { return mode == CovarianceMode::PerClass ? "per_class" : "tied"; }

namespace {

bool usable(const Eigen::LLT<Eigen::MatrixXd>& llt) {
    if (llt.info() != Eigen::Success) return false;
    const Eigen::VectorXd pivots = llt.matrixLLT().diagonal().array().square();
    if (!pivots.allFinite()) return false;
    const double largest = pivots.maxCoeff();
    // Rounding can let a singular matrix factor with pivots near zero.
    return largest > 0.0 && pivots.minCoeff() > 1e-14 * largest;
}

}  // namespace

MahalanobisModel::Component MahalanobisModel::factorize(Eigen::MatrixXd covariance, std::optional<double> epsilon) {
    const auto d = covariance.rows();
    const double scale = covariance.trace() / static_cast<double>(d);
    const double cap = kMaxRidgeFactor * scale;
    double eps = epsilon.value_or(kDefaultRidgeFactor * scale);
    if (!std::isfinite(eps) || eps < 0.0) fail_validation("epsilon must be finite and non-negative");

    while (true) {
        Eigen::MatrixXd ridged = covariance;
        ridged.diagonal().array() += eps;
        Eigen::LLT<Eigen::MatrixXd> llt(ridged);
        if (usable(llt)) {
            Component out;
            out.precision = llt.solve(Eigen::MatrixXd::Identity(d, d));
            out.precision = 0.5 * (out.precision + out.precision.transpose()).eval();
            out.covariance = std::move(covariance);
            out.epsilon = eps;
            out.factor = std::move(llt);
            return out;
        }
        if (eps >= cap) {
            fail_numeric("covariance is not positive definite even with ridge " + std::to_string(eps));
        }
        eps = std::min(cap, std::max(eps * 10.0, kDefaultRidgeFactor * scale));
    }
}

MahalanobisModel MahalanobisModel::fit(const LabeledDataset& train, const MahalanobisConfig& config) {
    train.validate();
    if (!train.labels) fail_validation("Mahalanobis fitting needs labelled training data");
    const auto& x = train.features.values();
    const auto d = x.cols();

    std::map<ClassId, std::vector<Eigen::Index>> rows_by_class;
    for (std::size_t i = 0; i < train.labels->size(); ++i) {
        const ClassId c = (*train.labels)[i];
        if (c < 0) fail_validation("Mahalanobis training data contains unlabelled rows");
        rows_by_class[c].push_back(static_cast<Eigen::Index>(i));
    }

    MahalanobisModel model;
    model.mode_ = config.covariance;
    model.means_.resize(static_cast<Eigen::Index>(rows_by_class.size()), d);
    Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(d, d);
    std::vector<Eigen::MatrixXd> per_class;

    Eigen::Index c = 0;
    for (const auto& [label, rows] : rows_by_class) {
        if (rows.size() < 2) fail_validation("class " + std::to_string(label) + " has fewer than 2 samples");
        Eigen::MatrixXd block(static_cast<Eigen::Index>(rows.size()), d);
        for (std::size_t r = 0; r < rows.size(); ++r) block.row(static_cast<Eigen::Index>(r)) = x.row(rows[r]);
        const Eigen::RowVectorXd mean = block.colwise().mean();
        block.rowwise() -= mean;
        Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
        scatter.selfadjointView<Eigen::Lower>().rankUpdate(block.transpose());
        scatter = scatter.selfadjointView<Eigen::Lower>();
        if (config.covariance == CovarianceMode::Tied) {
            pooled += scatter;
        } else {
            per_class.push_back(scatter / static_cast<double>(rows.size()));
        }
        model.classes_.push_back(label);
        model.means_.row(c++) = mean;
    }

    if (config.covariance == CovarianceMode::Tied) {
        model.components_.push_back(factorize(pooled / static_cast<double>(x.rows()), config.epsilon));
    } else {
        for (auto& cov : per_class) model.components_.push_back(factorize(std::move(cov), config.epsilon));
    }
    return model;
}

MahalanobisModel MahalanobisModel::from_parameters(CovarianceMode mode, std::vector<ClassId> classes,
                                                   Eigen::MatrixXd means, std::vector<Eigen::MatrixXd> covariances,
                                                   std::vector<double> epsilons) {
    if (classes.empty() || static_cast<Eigen::Index>(classes.size()) != means.rows()) {
        fail_validation("Mahalanobis parameters: class list does not match means");
    }
    const std::size_t expected = mode == CovarianceMode::Tied ? 1 : classes.size();
    if (covariances.size() != expected || epsilons.size() != expected) {
        fail_validation("Mahalanobis parameters: wrong number of covariance matrices");
    }
    if (!means.allFinite()) fail_validation("Mahalanobis parameters: non-finite means");
    MahalanobisModel model;
    model.mode_ = mode;
    model.classes_ = std::move(classes);
    model.means_ = std::move(means);
    for (std::size_t i = 0; i < covariances.size(); ++i) {
        auto& cov = covariances[i];
        if (cov.rows() != model.dim() || cov.cols() != model.dim()) {
            fail_validation("Mahalanobis parameters: covariance has wrong shape");
        }
        if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 0.0) {
            fail_validation("Mahalanobis parameters: covariance is not symmetric");
        }
        // The stored ridge already succeeded once; refactorizing with it is exact.
        model.components_.push_back(factorize(std::move(cov), epsilons[i]));
    }
    return model;
}

Eigen::MatrixXd MahalanobisModel::class_distances(const Eigen::Ref<const RowMatrix>& queries) const {
    if (queries.cols() != dim()) {
        fail_validation("query has dimension " + std::to_string(queries.cols()) + ", model expects " +
                        std::to_string(dim()));
    }
    Eigen::MatrixXd out(queries.rows(), means_.rows());
    for (Eigen::Index c = 0; c < means_.rows(); ++c) {
        const Eigen::MatrixXd deviations = (queries.rowwise() - means_.row(c)).transpose();
        out.col(c) = squared_mahalanobis(component_for(static_cast<std::size_t>(c)).factor, deviations);
    }
    return out;
}

double MahalanobisModel::score(const Eigen::Ref<const Eigen::RowVectorXd>& query) const {
    const RowMatrix q = query;
    return score_rows(q)(0);
}

Vector MahalanobisModel::score_rows(const Eigen::Ref<const RowMatrix>& queries) const {
    return -class_distances(queries).rowwise().minCoeff();
}

std::vector<ClassId> MahalanobisModel::closest_class(const Eigen::Ref<const RowMatrix>& queries) const {
    const Eigen::MatrixXd dist = class_distances(queries);
    std::vector<ClassId> out(static_cast<std::size_t>(queries.rows()));
    for (Eigen::Index i = 0; i < dist.rows(); ++i) {
        Eigen::Index best = 0;
        dist.row(i).minCoeff(&best);
        out[static_cast<std::size_t>(i)] = classes_[static_cast<std::size_t>(best)];
    }
    return out;
}

}  // namespace oodkit
