// oodkit command line: pool, fit, score, ensemble-fit, eval, simulate,
// calibrate, pipeline.
//
// Exit codes: 0 success, 1 validation error, 2 I/O error, 3 numeric failure.

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oodkit/ensemble.hpp"
#include "oodkit/io.hpp"
#include "oodkit/metrics.hpp"
#include "oodkit/model_io.hpp"
#include "oodkit/pipeline.hpp"
#include "oodkit/pooling.hpp"
#include "oodkit/simulation.hpp"

namespace {

using namespace oodkit;

template <typename T>
T parse_number(const std::string& text, const std::string& what) {
    T value{};
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) fail_validation("bad " + what + ": '" + text + "'");
    return value;
}

/// "1,5,9", "0..4", or "100..1000:100", freely mixed with commas.
template <typename T>
std::vector<T> parse_list(const std::string& text, const std::string& what) {
    std::vector<T> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        if (item.empty()) continue;
        const auto dots = item.find("..");
        if (dots == std::string::npos) {
            out.push_back(parse_number<T>(item, what));
            continue;
        }
        const auto colon = item.find(':', dots);
        const T lo = parse_number<T>(item.substr(0, dots), what);
        const T hi = parse_number<T>(item.substr(dots + 2, colon == std::string::npos ? std::string::npos
                                                                                       : colon - dots - 2),
                                     what);
        const T step = colon == std::string::npos ? T(1) : parse_number<T>(item.substr(colon + 1), what);
        if (step <= T(0) || hi < lo) fail_validation("bad range for " + what + ": '" + item + "'");
        for (T v = lo; v <= hi; v += step) out.push_back(v);
    }
    if (out.empty()) fail_validation("empty list for " + what);
    return out;
}

std::vector<double> parse_grid(const std::string& text) {
    // "lo:hi:step" inclusive, evaluated by index to avoid accumulating rounding
    const auto a = text.find(':');
    const auto b = text.find(':', a + 1);
    if (a == std::string::npos || b == std::string::npos) return parse_list<double>(text, "grid");
    const double lo = parse_number<double>(text.substr(0, a), "grid");
    const double hi = parse_number<double>(text.substr(a + 1, b - a - 1), "grid");
    const double step = parse_number<double>(text.substr(b + 1), "grid");
    if (!(step > 0.0) || hi < lo) fail_validation("bad grid '" + text + "'");
    std::vector<double> out;
    for (int i = 0; lo + i * step <= hi + 1e-9 * step; ++i) out.push_back(lo + i * step);
    return out;
}

std::string stem(const std::string& path) { return std::filesystem::path(path).stem().string(); }

struct PoolArgs {
    std::string method = "gap";
    double gem_p = 3.0;

    PoolingSpec spec() const { return parse_pooling_spec(method, gem_p); }
};

void add_pool_options(CLI::App* cmd, PoolArgs& args) {
    cmd->add_option("--method,--pooling", args.method, "gap | gmp | gem | crow | concatenation like gap+gmp")
        ->capture_default_str();
    cmd->add_option("--gem-p", args.gem_p, "GeM power p > 0")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"oodkit: out-of-distribution detection from feature embeddings"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    // pool
    PoolArgs pool_args;
    std::string pool_in;
    std::string pool_out;
    auto* pool_cmd = app.add_subcommand("pool", "Reduce spatial maps (OODF spatial) to flat features");
    add_pool_options(pool_cmd, pool_args);
    pool_cmd->add_option("--in", pool_in, "Spatial OODF input")->required();
    pool_cmd->add_option("--out", pool_out, "Flat OODF output")->required();

    // fit
    std::string fit_detector_name = "lof";
    std::size_t fit_k = 20;
    std::string fit_metric;
    std::optional<double> fit_epsilon;
    std::string fit_covariance = "tied";
    std::string fit_train;
    std::string fit_out;
    bool fit_csv_labels = false;
    PoolArgs fit_pool;
    auto* fit_cmd = app.add_subcommand("fit", "Fit a detector and save it as an OODM model");
    fit_cmd->add_option("--detector", fit_detector_name, "lof | lof_d | mahalanobis")->capture_default_str();
    fit_cmd->add_option("--k", fit_k, "LOF neighbour count")->capture_default_str();
    fit_cmd->add_option("--metric", fit_metric, "euclidean | cosine (default: euclidean for lof, cosine for lof_d)");
    fit_cmd->add_option("--epsilon", fit_epsilon, "Mahalanobis starting ridge (default 1e-6 * trace / d)");
    fit_cmd->add_option("--covariance", fit_covariance, "Mahalanobis covariance: tied | per_class")
        ->capture_default_str();
    fit_cmd->add_option("--train", fit_train, "Training features (OODF or .csv)")->required();
    fit_cmd->add_option("--out", fit_out, "Model output path")->required();
    fit_cmd->add_flag("--csv-labels", fit_csv_labels, "CSV input has a trailing integer label column");
    add_pool_options(fit_cmd, fit_pool);

    // score
    std::string score_model;
    std::string score_in;
    std::string score_out;
    bool score_csv_labels = false;
    PoolArgs score_pool;
    auto* score_cmd = app.add_subcommand("score", "Score features with a saved model");
    score_cmd->add_option("--model", score_model, "OODM model")->required();
    score_cmd->add_option("--in", score_in, "Features to score (OODF or .csv)")->required();
    score_cmd->add_option("--out", score_out, "Score CSV output")->required();
    score_cmd->add_flag("--csv-labels", score_csv_labels, "CSV input has a trailing integer label column");
    add_pool_options(score_cmd, score_pool);

    // ensemble-fit
    std::vector<std::string> ens_in;
    std::vector<std::string> ens_out;
    std::vector<std::string> ens_names;
    std::string ens_weights;
    auto* ens_cmd = app.add_subcommand("ensemble-fit", "Fit per-layer ensemble weights on validation scores");
    ens_cmd->add_option("--in-scores", ens_in, "In-distribution score CSV, one per layer")->required();
    ens_cmd->add_option("--out-scores", ens_out, "OoD score CSV, one per layer, same order")->required();
    ens_cmd->add_option("--layer-names", ens_names, "Layer names (default: file stems of --in-scores)");
    ens_cmd->add_option("--out", ens_weights, "Weights output (plain-text key = value)")->required();

    // eval
    std::string eval_in;
    std::string eval_out;
    std::string eval_report;
    std::string eval_detector = "detector";
    std::string eval_benchmark = "benchmark";
    auto* eval_cmd = app.add_subcommand("eval", "Compute TNR@TPR95, AUROC, DTACC and AUPR");
    eval_cmd->add_option("--in-scores", eval_in, "In-distribution score CSV")->required();
    eval_cmd->add_option("--out-scores", eval_out, "OoD score CSV")->required();
    eval_cmd->add_option("--report", eval_report, "JSON report output");
    eval_cmd->add_option("--detector", eval_detector, "Detector name for the report")->capture_default_str();
    eval_cmd->add_option("--benchmark", eval_benchmark, "Benchmark name for the report")->capture_default_str();

    // simulate / calibrate share the simulation options
    SimConfig sim;
    std::string sim_dims = "1,100..1000:100";
    std::string sim_seeds = "0..4";
    std::string sim_detectors = "mahalanobis,lof";
    std::string sim_out;
    auto add_sim_options = [&](CLI::App* cmd) {
        cmd->add_option("--dims", sim_dims, "Dimensions, e.g. 1,100..1000:100")->capture_default_str();
        cmd->add_option("--seeds", sim_seeds, "Seeds, e.g. 0..4")->capture_default_str();
        cmd->add_option("--n-train", sim.n_train_per_class, "Training points per class")->capture_default_str();
        cmd->add_option("--n-test-in", sim.n_test_in, "In-distribution test points")->capture_default_str();
        cmd->add_option("--n-test-out", sim.n_test_out, "OoD test points")->capture_default_str();
        cmd->add_option("--k", sim.k, "LOF neighbour count")->capture_default_str();
    };
    auto* sim_cmd = app.add_subcommand("simulate", "Mahalanobis vs LOF sweep over dimensionality");
    add_sim_options(sim_cmd);
    sim_cmd->add_option("--r", sim.offset, "Norm of the OoD mean")->capture_default_str();
    sim_cmd->add_option("--detectors", sim_detectors, "mahalanobis, mahalanobis_tied, lof, lof_global")
        ->capture_default_str();
    sim_cmd->add_option("--out", sim_out, "CSV output (d,detector,seed,tnr95,auroc,dtacc,aupr)")->required();

    std::string cal_grid = "6:12:0.5";
    auto* cal_cmd = app.add_subcommand("calibrate", "Choose the OoD offset r against the reference AUROC curve");
    add_sim_options(cal_cmd);
    cal_cmd->add_option("--grid", cal_grid, "Offsets lo:hi:step or a list")->capture_default_str();

    // pipeline
    std::string pipe_config;
    auto* pipe_cmd = app.add_subcommand("pipeline", "pool -> fit -> score -> ensemble -> eval from a config file");
    pipe_cmd->add_option("--config", pipe_config, "Key-value config file (grammar v1)");
    std::map<std::string, std::string> pipe_values;
    for (const auto& key : PipelineConfig::keys()) {
        if (key == "version") continue;
        std::string flag = "--" + key;
        std::replace(flag.begin() + 2, flag.end(), '_', '-');
        pipe_cmd->add_option(flag, pipe_values[key], "Overrides '" + key + "' from the config file");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return static_cast<int>(ErrorKind::Validation);
    }

    try {
        if (*pool_cmd) {
            auto file = read_feature_file(pool_in);
            const auto* maps = std::get_if<SpatialDataset>(&file);
            if (!maps) fail_validation(pool_in + " holds flat features, not spatial maps");
            bool clamped = false;
            const auto pooled = pool_dataset(*maps, pool_args.spec(), &clamped);
            if (clamped) std::cerr << "warning: negative activations clamped to 0 before pooling\n";
            write_feature_file(pooled, pool_out);
        } else if (*fit_cmd) {
            DetectorSpec spec;
            spec.kind = parse_detector_kind(fit_detector_name);
            spec.k = fit_k;
            if (!fit_metric.empty()) spec.metric = parse_metric(fit_metric);
            spec.epsilon = fit_epsilon;
            spec.covariance = parse_covariance_mode(fit_covariance);
            const auto train = load_features(fit_train, fit_pool.spec(), fit_csv_labels);
            write_model(fit_detector(train, spec), fit_out);
        } else if (*score_cmd) {
            const auto model = read_model(score_model);
            const auto data = load_features(score_in, score_pool.spec(), score_csv_labels);
            const Vector s = score_dataset(model, data);
            write_scores({s.data(), s.data() + s.size()}, score_out);
        } else if (*ens_cmd) {
            if (ens_in.size() != ens_out.size()) fail_validation("--in-scores and --out-scores differ in count");
            if (ens_names.empty()) {
                for (const auto& p : ens_in) ens_names.push_back(stem(p));
            }
            if (ens_names.size() != ens_in.size()) fail_validation("--layer-names count does not match the layers");
            std::vector<std::vector<double>> in_cols;
            std::vector<std::vector<double>> out_cols;
            for (const auto& p : ens_in) in_cols.push_back(read_scores(p));
            for (const auto& p : ens_out) out_cols.push_back(read_scores(p));
            const auto weights = fit_weights(LayerScores::from_columns(ens_names, in_cols),
                                             LayerScores::from_columns(ens_names, out_cols));
            for (const auto& d : weights.dropped) std::cerr << "warning: layer " << d << " has zero variance\n";
            write_text_file(ens_weights, weights_to_text(weights));
        } else if (*eval_cmd) {
            const ScoreSet scores{read_scores(eval_in), read_scores(eval_out)};
            const auto report = evaluate(scores, eval_detector, eval_benchmark);
            if (!eval_report.empty()) write_text_file(eval_report, report_to_json({report}));
            std::cout << report_to_table({report});
        } else if (*sim_cmd || *cal_cmd) {
            sim.dims = parse_list<Eigen::Index>(sim_dims, "dims");
            sim.seeds = parse_list<std::uint64_t>(sim_seeds, "seeds");
            if (*sim_cmd) {
                sim.detectors.clear();
                std::istringstream in(sim_detectors);
                std::string name;
                while (std::getline(in, name, ',')) sim.detectors.push_back(parse_sim_detector(name));
                const auto rows = run_sweep(sim, [](const SweepRow& r) {
                    std::fprintf(stderr, "d=%-5ld %-17s seed=%-3lu AUROC=%6.2f TNR95=%6.2f\n",
                                 static_cast<long>(r.d), to_string(r.detector).c_str(),
                                 static_cast<unsigned long>(r.seed), r.report.auroc, r.report.tnr_at_tpr95);
                });
                write_text_file(sim_out, sweep_to_csv(rows));
                std::printf("%-6s %-17s %10s %8s %8s %8s\n", "d", "detector", "TNR@TPR95", "AUROC", "DTACC", "AUPR");
                for (const auto& m : seed_means(rows)) {
                    std::printf("%-6ld %-17s %10.2f %8.2f %8.2f %8.2f\n", static_cast<long>(m.d),
                                to_string(m.detector).c_str(), m.tnr95, m.auroc, m.dtacc, m.aupr);
                }
            } else {
                const auto result = calibrate_offset(sim, parse_grid(cal_grid));
                for (const auto& [r, err] : result.grid) std::printf("r=%-6.2f squared_error=%.4f\n", r, err);
                std::printf("best r=%.2f squared_error=%.4f\n", result.best_offset, result.best_error);
            }
        } else if (*pipe_cmd) {
            std::map<std::string, std::string> file_entries;
            if (!pipe_config.empty()) {
                if (!std::filesystem::exists(pipe_config)) fail_io("no such file: " + pipe_config);
                file_entries = parse_key_values(read_text_file(pipe_config));
            }
            std::map<std::string, std::string> overrides;
            for (const auto& [key, value] : pipe_values) {
                std::string flag = "--" + key;
                std::replace(flag.begin() + 2, flag.end(), '_', '-');
                if (pipe_cmd->count(flag) > 0) overrides[key] = value;
            }
            const auto result = run_pipeline(make_pipeline_config(file_entries, overrides));
            std::cout << report_to_table({result.report});
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ErrorKind::Numeric);
    }
    return 0;
}
