#include "oodkit/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "oodkit/io.hpp"
#include "oodkit/lof.hpp"
#include "oodkit/mahalanobis.hpp"
#include "oodkit/random.hpp"

namespace oodkit {

SimDetector parse_sim_detector(const std::string& name) {
    if (name == "mahalanobis") return SimDetector::Mahalanobis;
    if (name == "mahalanobis_tied") return SimDetector::MahalanobisTied;
    if (name == "lof") return SimDetector::Lof;
    if (name == "lof_global") return SimDetector::LofGlobal;
    fail_validation("unknown simulation detector '" + name + "'");
}

std::string to_string(SimDetector detector) {
    switch (detector) {
        case SimDetector::Mahalanobis: return "mahalanobis";
        case SimDetector::MahalanobisTied: return "mahalanobis_tied";
        case SimDetector::Lof: return "lof";
        case SimDetector::LofGlobal: return "lof_global";
    }
    return "?";
}

void SimConfig::validate() const {
    if (dims.empty()) fail_validation("simulation needs at least one dimension");
    for (auto d : dims) {
        if (d < 1) fail_validation("simulation dimensions must be >= 1");
    }
    if (k < 1) fail_validation("simulation k must be >= 1");
    if (n_train_per_class < k + 1) fail_validation("n_train_per_class must be at least k + 1");
    if (n_test_in < 1 || n_test_out < 1) fail_validation("test set sizes must be positive");
    if (!std::isfinite(offset) || offset <= 0.0) fail_validation("offset r must be positive");
    if (seeds.empty()) fail_validation("simulation needs at least one seed");
    if (detectors.empty()) fail_validation("simulation needs at least one detector");
}

SimData generate(const SimConfig& config, Eigen::Index d, std::uint64_t seed) {
    config.validate();
    if (d < 1) fail_validation("dimension must be >= 1");
    Rng rng{seed, static_cast<std::uint64_t>(d)};
    const auto n = static_cast<Eigen::Index>(config.n_train_per_class);

    RowMatrix train(2 * n, d);
    train.topRows(n) = rng.normal_matrix(n, d);
    train.bottomRows(n) = rng.normal_matrix(n, d).array() - 1.0;
    Labels labels(static_cast<std::size_t>(2 * n), 0);
    std::fill(labels.begin() + n, labels.end(), 1);

    const auto n_in = static_cast<Eigen::Index>(config.n_test_in);
    const auto n_in0 = n_in / 2;
    RowMatrix test_in(n_in, d);
    test_in.topRows(n_in0) = rng.normal_matrix(n_in0, d);
    test_in.bottomRows(n_in - n_in0) = rng.normal_matrix(n_in - n_in0, d).array() - 1.0;

    const double shift = config.offset / std::sqrt(static_cast<double>(d));
    RowMatrix test_out = rng.normal_matrix(static_cast<Eigen::Index>(config.n_test_out), d).array() + shift;

    SimData out{LabeledDataset{FeatureMatrix(std::move(train), "sim"), std::move(labels), std::nullopt},
                std::move(test_in), std::move(test_out)};
    return out;
}

namespace {

struct FittedCell {
    std::optional<MahalanobisModel> mahalanobis;
    std::optional<LofModel> lof;
};

FittedCell fit_cell(const LabeledDataset& train, SimDetector detector, std::size_t k) {
    FittedCell cell;
    switch (detector) {
        case SimDetector::Mahalanobis:
            cell.mahalanobis = MahalanobisModel::fit(train, {CovarianceMode::PerClass, std::nullopt});
            break;
        case SimDetector::MahalanobisTied:
            cell.mahalanobis = MahalanobisModel::fit(train, {CovarianceMode::Tied, std::nullopt});
            break;
        case SimDetector::Lof:
            cell.lof = LofModel::fit(train, {k, Metric::Euclidean, LofMode::PerClass});
            break;
        case SimDetector::LofGlobal:
            cell.lof = LofModel::fit(train, {k, Metric::Euclidean, LofMode::Global});
            break;
    }
    return cell;
}

std::vector<double> score_with(const FittedCell& cell, const RowMatrix& queries) {
    const Vector s = cell.mahalanobis ? cell.mahalanobis->score_rows(queries) : cell.lof->score_rows(queries);
    return {s.data(), s.data() + s.size()};
}

}  // namespace

ScoreSet score_cell(const SimData& data, SimDetector detector, std::size_t k) {
    const auto cell = fit_cell(data.train, detector, k);
    return ScoreSet{score_with(cell, data.test_in), score_with(cell, data.test_out)};
}

std::vector<SweepRow> run_sweep(const SimConfig& config, const SweepProgress& progress) {
    config.validate();
    std::vector<SweepRow> rows;
    for (auto d : config.dims) {
        for (auto seed : config.seeds) {
            const SimData data = generate(config, d, seed);
            for (auto detector : config.detectors) {
                SweepRow row{d, detector, seed, evaluate(score_cell(data, detector, config.k), to_string(detector),
                                                         "sim_d" + std::to_string(d))};
                if (progress) progress(row);
                rows.push_back(std::move(row));
            }
        }
    }
    std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
        return std::tuple(a.d, to_string(a.detector), a.seed) < std::tuple(b.d, to_string(b.detector), b.seed);
    });
    return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    std::string out = "d,detector,seed,tnr95,auroc,dtacc,aupr\n";
    for (const auto& r : rows) {
        out += std::to_string(r.d) + "," + to_string(r.detector) + "," + std::to_string(r.seed) + "," +
               format_double(r.report.tnr_at_tpr95) + "," + format_double(r.report.auroc) + "," +
               format_double(r.report.dtacc) + "," + format_double(r.report.aupr) + "\n";
    }
    return out;
}

std::vector<SweepMean> seed_means(const std::vector<SweepRow>& rows) {
    std::map<std::pair<Eigen::Index, std::string>, SweepMean> acc;
    for (const auto& r : rows) {
        auto& m = acc[{r.d, to_string(r.detector)}];
        m.d = r.d;
        m.detector = r.detector;
        m.tnr95 += r.report.tnr_at_tpr95;
        m.auroc += r.report.auroc;
        m.dtacc += r.report.dtacc;
        m.aupr += r.report.aupr;
        m.seeds += 1;
    }
    std::vector<SweepMean> out;
    for (auto& [key, m] : acc) {
        const auto s = static_cast<double>(m.seeds);
        m.tnr95 /= s;
        m.auroc /= s;
        m.dtacc /= s;
        m.aupr /= s;
        out.push_back(m);
    }
    return out;
}

const SweepMean* find_mean(const std::vector<SweepMean>& means, Eigen::Index d, SimDetector detector) {
    for (const auto& m : means) {
        if (m.d == d && m.detector == detector) return &m;
    }
    return nullptr;
}

CalibrationResult calibrate_offset(const SimConfig& config, const std::vector<double>& offsets) {
    config.validate();
    if (offsets.empty()) fail_validation("calibration grid is empty");
    for (double r : offsets) {
        if (!std::isfinite(r) || r <= 0.0) fail_validation("calibration offsets must be positive");
    }

    // summed AUROC per offset, per anchor, per detector
    std::vector<std::array<std::array<double, 2>, kAurocAnchors.size()>> auroc_sum(offsets.size());
    for (auto& a : auroc_sum) {
        for (auto& p : a) p = {0.0, 0.0};
    }

    SimConfig base = config;
    for (std::size_t a = 0; a < kAurocAnchors.size(); ++a) {
        const auto d = kAurocAnchors[a].d;
        for (auto seed : config.seeds) {
            base.offset = 1.0;
            SimData data = generate(base, d, seed);
            // generate() adds offset/sqrt(d) to centred noise; recover the noise
            const double unit = 1.0 / std::sqrt(static_cast<double>(d));
            const RowMatrix noise = data.test_out.array() - unit;
            const std::array<SimDetector, 2> detectors{SimDetector::Mahalanobis, SimDetector::Lof};
            for (std::size_t det = 0; det < detectors.size(); ++det) {
                const auto cell = fit_cell(data.train, detectors[det], config.k);
                const auto in = score_with(cell, data.test_in);
                for (std::size_t o = 0; o < offsets.size(); ++o) {
                    const RowMatrix out = noise.array() + offsets[o] / std::sqrt(static_cast<double>(d));
                    auroc_sum[o][a][det] += auroc(ScoreSet{in, score_with(cell, out)});
                }
            }
        }
    }

    CalibrationResult result;
    const auto seeds = static_cast<double>(config.seeds.size());
    for (std::size_t o = 0; o < offsets.size(); ++o) {
        double err = 0.0;
        for (std::size_t a = 0; a < kAurocAnchors.size(); ++a) {
            const double em = auroc_sum[o][a][0] / seeds - kAurocAnchors[a].mahalanobis;
            const double el = auroc_sum[o][a][1] / seeds - kAurocAnchors[a].lof;
            err += em * em + el * el;
        }
        result.grid.emplace_back(offsets[o], err);
        if (o == 0 || err < result.best_error) {
            result.best_error = err;
            result.best_offset = offsets[o];
        }
    }
    return result;
}

}  // namespace oodkit
