#include "oodkit/metrics.hpp"

#include <algorithm>
#include <cstdio>

#include <nlohmann/json.hpp>

namespace oodkit {

namespace {

struct Tagged {
    double score;
    bool in;
};

/// All scores, descending.
std::vector<Tagged> merged_descending(const ScoreSet& s) {
    std::vector<Tagged> all;
    all.reserve(s.in_scores.size() + s.out_scores.size());
    for (double v : s.in_scores) all.push_back({v, true});
    for (double v : s.out_scores) all.push_back({v, false});
    std::sort(all.begin(), all.end(), [](const Tagged& a, const Tagged& b) { return a.score > b.score; });
    return all;
}

/// Calls f(tp, fp) for the threshold at each distinct score, descending, where
/// tp / fp count in / out scores at or above the threshold.
template <typename F>
void sweep_thresholds(const ScoreSet& s, F&& f) {
    const auto all = merged_descending(s);
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (std::size_t i = 0; i < all.size(); ++i) {
        (all[i].in ? tp : fp) += 1;
        if (i + 1 == all.size() || all[i + 1].score != all[i].score) f(tp, fp);
    }
}

}  // namespace

double tpr95_threshold(std::vector<double> in_scores) {
    if (in_scores.empty()) fail_validation("no in-distribution scores");
    std::sort(in_scores.begin(), in_scores.end(), std::greater<>());
    const std::size_t keep = (95 * in_scores.size() + 99) / 100;
    return in_scores[keep - 1];
}

double tnr_at_tpr95(const ScoreSet& scores) {
    scores.validate();
    const double tau = tpr95_threshold(scores.in_scores);
    const auto below = std::count_if(scores.out_scores.begin(), scores.out_scores.end(),
                                     [tau](double v) { return v < tau; });
    return 100.0 * static_cast<double>(below) / static_cast<double>(scores.out_scores.size());
}

double auroc(const ScoreSet& scores) {
    scores.validate();
    std::vector<double> out = scores.out_scores;
    std::sort(out.begin(), out.end());
    // twice the Mann-Whitney U: 2 per strictly smaller out score, 1 per tie
    double doubled = 0.0;
    for (double v : scores.in_scores) {
        const auto lo = std::lower_bound(out.begin(), out.end(), v);
        const auto hi = std::upper_bound(lo, out.end(), v);
        doubled += 2.0 * static_cast<double>(lo - out.begin()) + static_cast<double>(hi - lo);
    }
    const double pairs = static_cast<double>(scores.in_scores.size()) * static_cast<double>(out.size());
    return 100.0 * doubled / (2.0 * pairs);
}

double detection_accuracy(const ScoreSet& scores) {
    scores.validate();
    const double n_in = static_cast<double>(scores.in_scores.size());
    const double n_out = static_cast<double>(scores.out_scores.size());
    // threshold above every score: TPR 0, TNR 1
    double best = 0.5;
    sweep_thresholds(scores, [&](std::size_t tp, std::size_t fp) {
        const double tpr = static_cast<double>(tp) / n_in;
        const double tnr = 1.0 - static_cast<double>(fp) / n_out;
        best = std::max(best, 0.5 * tpr + 0.5 * tnr);
    });
    return 100.0 * best;
}

double aupr_in(const ScoreSet& scores) {
    scores.validate();
    const double n_in = static_cast<double>(scores.in_scores.size());
    double area = 0.0;
    double prev_recall = 0.0;
    sweep_thresholds(scores, [&](std::size_t tp, std::size_t fp) {
        const double recall = static_cast<double>(tp) / n_in;
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    });
    return 100.0 * area;
}

EvalReport evaluate(const ScoreSet& scores, std::string detector, std::string benchmark) {
    scores.validate();
    EvalReport r;
    r.detector = std::move(detector);
    r.benchmark = std::move(benchmark);
    r.tnr_at_tpr95 = tnr_at_tpr95(scores);
    r.auroc = auroc(scores);
    r.dtacc = detection_accuracy(scores);
    r.aupr = aupr_in(scores);
    r.n_in = scores.in_scores.size();
    r.n_out = scores.out_scores.size();
    return r;
}

std::string report_to_json(const std::vector<EvalReport>& reports) {
    nlohmann::ordered_json doc;
    doc["aupr_positive_class"] = "in-distribution";
    doc["score_orientation"] = "larger = more in-distribution";
    doc["results"] = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
        doc["results"].push_back({{"detector", r.detector},
                                  {"benchmark", r.benchmark},
                                  {"tnr_at_tpr95", r.tnr_at_tpr95},
                                  {"auroc", r.auroc},
                                  {"dtacc", r.dtacc},
                                  {"aupr", r.aupr},
                                  {"n_in", r.n_in},
                                  {"n_out", r.n_out}});
    }
    return doc.dump(2) + "\n";
}

std::string report_to_table(const std::vector<EvalReport>& reports) {
    std::string out = "# AUPR: in-distribution is the positive class\n";
    char line[256];
    std::snprintf(line, sizeof(line), "%-14s %-14s %12s %8s %8s %8s %7s %7s\n", "benchmark", "detector",
                  "TNR@TPR95", "AUROC", "DTACC", "AUPR", "n_in", "n_out");
    out += line;
    for (const auto& r : reports) {
        std::snprintf(line, sizeof(line), "%-14s %-14s %12.2f %8.2f %8.2f %8.2f %7zu %7zu\n", r.benchmark.c_str(),
                      r.detector.c_str(), r.tnr_at_tpr95, r.auroc, r.dtacc, r.aupr, r.n_in, r.n_out);
        out += line;
    }
    return out;
}

}  // namespace oodkit
