#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "oodkit/metrics.hpp"
#include "oodkit/types.hpp"

namespace oodkit {

/// Default OoD offset (Euclidean norm of the OoD mean), chosen by
/// calibrate_offset over 6.0..12.0 in steps of 0.5 with seeds 0..4.
inline constexpr double kCalibratedOffset = 8.0;

enum class SimDetector {
    /// Closest class-conditional Gaussian, covariance estimated per class.
    Mahalanobis,
    /// Same with a single covariance pooled over classes.
    MahalanobisTied,
    /// Euclidean LOF against the class whose centroid is closest.
    Lof,
    /// Euclidean LOF against all training points.
    LofGlobal,
};

SimDetector parse_sim_detector(const std::string& name);
std::string to_string(SimDetector detector);

struct SimConfig {
    std::vector<Eigen::Index> dims{1, 100, 200, 300, 400, 500, 600, 700, 800, 900, 1000};
    std::size_t n_train_per_class = 1000;
    std::size_t n_test_in = 1000;
    std::size_t n_test_out = 1000;
    double offset = kCalibratedOffset;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    std::vector<SimDetector> detectors{SimDetector::Mahalanobis, SimDetector::Lof};
    std::size_t k = 20;

    void validate() const;
};

/// Two unit-variance isotropic classes centred at 0 and -1 (every
/// coordinate), and OoD samples centred at offset/sqrt(d) per coordinate, so
/// the OoD mean has norm `offset` in every dimension.
struct SimData {
    LabeledDataset train;
    RowMatrix test_in;
    RowMatrix test_out;
};

/// Deterministic in (config, d, seed). Draw order: class 0 train, class 1
/// train, in-distribution test (first half class 0), OoD test.
SimData generate(const SimConfig& config, Eigen::Index d, std::uint64_t seed);

struct SweepRow {
    Eigen::Index d = 0;
    SimDetector detector = SimDetector::Mahalanobis;
    std::uint64_t seed = 0;
    EvalReport report;
};

using SweepProgress = std::function<void(const SweepRow&)>;

/// One row per (d, detector, seed), sorted by that key.
std::vector<SweepRow> run_sweep(const SimConfig& config, const SweepProgress& progress = {});

/// Scores the in-distribution and OoD test sets of one simulated cell.
ScoreSet score_cell(const SimData& data, SimDetector detector, std::size_t k);

/// CSV with header "d,detector,seed,tnr95,auroc,dtacc,aupr".
std::string sweep_to_csv(const std::vector<SweepRow>& rows);

/// Seed-averaged metrics per (d, detector).
struct SweepMean {
    Eigen::Index d = 0;
    SimDetector detector = SimDetector::Mahalanobis;
    double tnr95 = 0.0;
    double auroc = 0.0;
    double dtacc = 0.0;
    double aupr = 0.0;
    std::size_t seeds = 0;
};

std::vector<SweepMean> seed_means(const std::vector<SweepRow>& rows);
const SweepMean* find_mean(const std::vector<SweepMean>& means, Eigen::Index d, SimDetector detector);

/// Reference AUROC curve points used for offset calibration: dimension,
/// Mahalanobis AUROC, LOF AUROC.
struct AurocAnchor {
    Eigen::Index d;
    double mahalanobis;
    double lof;
};
inline constexpr std::array<AurocAnchor, 3> kAurocAnchors{{
    {100, 99.2658, 99.2898},
    {400, 90.014175, 93.25665},
    {1000, 54.62775, 82.720025},
}};

struct CalibrationResult {
    double best_offset = 0.0;
    double best_error = 0.0;
    /// (offset, summed squared AUROC error) for every grid point.
    std::vector<std::pair<double, double>> grid;
};

/// Picks the offset minimising the squared error of seed-averaged AUROC
/// against kAurocAnchors. Detectors in `config` are ignored; the Mahalanobis
/// and Lof detectors are used. Models are fitted once per (d, seed).
CalibrationResult calibrate_offset(const SimConfig& config, const std::vector<double>& offsets);

}  // namespace oodkit
