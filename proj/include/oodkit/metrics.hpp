#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "oodkit/types.hpp"

namespace oodkit {

/// The four OoD metrics, in percent. AUPR treats in-distribution as the
/// positive class.
struct EvalReport {
    std::string detector;
    std::string benchmark;
    double tnr_at_tpr95 = 0.0;
    double auroc = 0.0;
    double dtacc = 0.0;
    double aupr = 0.0;
    std::size_t n_in = 0;
    std::size_t n_out = 0;
};

/// Largest threshold that keeps at least 95% of in-distribution scores at or above it.
double tpr95_threshold(std::vector<double> in_scores);

double tnr_at_tpr95(const ScoreSet& scores);
/// Rank statistic P(in > out) + 0.5 P(in == out).
double auroc(const ScoreSet& scores);
/// max over thresholds of 0.5 TPR + 0.5 TNR.
double detection_accuracy(const ScoreSet& scores);
/// Step-wise precision-recall integral, in-distribution positive.
double aupr_in(const ScoreSet& scores);

EvalReport evaluate(const ScoreSet& scores, std::string detector = {}, std::string benchmark = {});

std::string report_to_json(const std::vector<EvalReport>& reports);
/// Aligned text table with the columns TNR at TPR95 / AUROC / DTACC / AUPR.
std::string report_to_table(const std::vector<EvalReport>& reports);

}  // namespace oodkit
