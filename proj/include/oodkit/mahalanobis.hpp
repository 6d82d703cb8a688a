#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "oodkit/types.hpp"

namespace oodkit {

enum class CovarianceMode { Tied, PerClass };

CovarianceMode parse_covariance_mode(const std::string& name);
std::string to_string(CovarianceMode mode);

struct MahalanobisConfig {
    CovarianceMode covariance = CovarianceMode::Tied;
    /// Starting ridge. Unset means 1e-6 * trace / d.
    std::optional<double> epsilon;
};

/// Ridge escalation on factorization failure: start, x10 per retry, capped at
/// kMaxRidgeFactor * trace / d.
inline constexpr double kDefaultRidgeFactor = 1e-6;
inline constexpr double kMaxRidgeFactor = 1e-2;

/// Squared Mahalanobis distance of every column of `deviations` under a
/// Cholesky factor L of the covariance: |L^-1 x|^2.
template <typename Derived>
Eigen::VectorXd squared_mahalanobis(const Eigen::LLT<Eigen::MatrixXd>& factor,
                                    const Eigen::MatrixBase<Derived>& deviations) {
    const Eigen::MatrixXd whitened = factor.matrixL().solve(deviations);
    return whitened.colwise().squaredNorm().transpose();
}

/// Class-conditional Gaussians with a tied (or per-class) covariance.
/// Confidence is the negated squared distance to the closest class mean.
class MahalanobisModel {
public:
    struct Component {
        Eigen::MatrixXd covariance;
        double epsilon = 0.0;
        Eigen::LLT<Eigen::MatrixXd> factor;
        Eigen::MatrixXd precision;
    };

    static MahalanobisModel fit(const LabeledDataset& train, const MahalanobisConfig& config = {});

    /// Rebuilds from stored covariances and ridges; refactorizes deterministically.
    static MahalanobisModel from_parameters(CovarianceMode mode, std::vector<ClassId> classes, Eigen::MatrixXd means,
                                            std::vector<Eigen::MatrixXd> covariances, std::vector<double> epsilons);

    CovarianceMode covariance_mode() const { return mode_; }
    const std::vector<ClassId>& classes() const { return classes_; }
    /// One mean per row, ordered as classes().
    const Eigen::MatrixXd& means() const { return means_; }
    const std::vector<Component>& components() const { return components_; }
    Eigen::Index dim() const { return means_.cols(); }

    /// Squared distances from each query row (n x d) to each class (n x C).
    Eigen::MatrixXd class_distances(const Eigen::Ref<const RowMatrix>& queries) const;

    double score(const Eigen::Ref<const Eigen::RowVectorXd>& query) const;
    Vector score_rows(const Eigen::Ref<const RowMatrix>& queries) const;

    /// Class of the closest mean for each query.
    std::vector<ClassId> closest_class(const Eigen::Ref<const RowMatrix>& queries) const;

private:
    static Component factorize(Eigen::MatrixXd covariance, std::optional<double> epsilon);
    const Component& component_for(std::size_t c) const {
        return components_.size() == 1 ? components_.front() : components_[c];
    }

    CovarianceMode mode_ = CovarianceMode::Tied;
    std::vector<ClassId> classes_;
    Eigen::MatrixXd means_;
    std::vector<Component> components_;
};

inline MahalanobisModel fit_mahalanobis(const LabeledDataset& train, std::optional<double> epsilon = std::nullopt) {
    return MahalanobisModel::fit(train, MahalanobisConfig{CovarianceMode::Tied, epsilon});
}

inline double score_mahalanobis(const MahalanobisModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& query) {
    return model.score(query);
}

}  // namespace oodkit
