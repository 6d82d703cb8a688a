#include "oodkit/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "oodkit/io.hpp"
#include "oodkit/random.hpp"

namespace oodkit {

DetectorKind parse_detector_kind(const std::string& name) {
    if (name == "lof") return DetectorKind::Lof;
    if (name == "lof_d") return DetectorKind::LofD;
    if (name == "mahalanobis") return DetectorKind::Mahalanobis;
    fail_validation("unknown detector '" + name + "'");
}

std::string to_string(DetectorKind kind) {
    switch (kind) {
        case DetectorKind::Lof: return "lof";
        case DetectorKind::LofD: return "lof_d";
        case DetectorKind::Mahalanobis: return "mahalanobis";
    }
    return "?";
}

LofConfig DetectorSpec::lof_config() const {
    LofConfig cfg;
    cfg.k = k;
    cfg.mode = kind == DetectorKind::LofD ? LofMode::PerClass : LofMode::Global;
    cfg.metric = metric.value_or(kind == DetectorKind::LofD ? Metric::Cosine : Metric::Euclidean);
    return cfg;
}

DetectorModel fit_detector(const LabeledDataset& train, const DetectorSpec& spec) {
    if (spec.kind == DetectorKind::Mahalanobis) {
        return MahalanobisModel::fit(train, MahalanobisConfig{spec.covariance, spec.epsilon});
    }
    return LofModel::fit(train, spec.lof_config());
}

namespace {

std::string trim_copy(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_value(const std::string& key, const std::string& value) {
    T out{};
    const auto* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) fail_validation("bad value for '" + key + "': '" + value + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    fail_validation("bad boolean for '" + key + "': '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::istringstream in(value);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim_copy(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string for_layer(std::string path, const std::string& layer) {
    const std::string token = "{layer}";
    for (auto pos = path.find(token); pos != std::string::npos; pos = path.find(token, pos + layer.size())) {
        path.replace(pos, token.size(), layer);
    }
    return path;
}

/// Rethrows any failure inside `f` with the stage name prefixed.
template <typename F>
auto staged(const std::string& stage, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        throw Error(e.kind(), "[" + stage + "] " + e.what());
    } catch (const std::exception& e) {
        throw Error(ErrorKind::Numeric, "[" + stage + "] " + e.what());
    }
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

struct Split {
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

Split split_indices(std::size_t n, double fraction, Rng& rng) {
    if (n < 2) fail_validation("need at least 2 samples to split off validation data");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(idx[i], idx[rng.below(i + 1)]);
    auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
    Split s;
    s.validation.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
    s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
    std::sort(s.validation.begin(), s.validation.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

LayerScores take_rows(const LayerScores& all, const std::vector<std::size_t>& rows) {
    LayerScores out;
    out.layer_names = all.layer_names;
    out.scores.resize(static_cast<Eigen::Index>(rows.size()), all.layers());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.scores.row(static_cast<Eigen::Index>(i)) = all.scores.row(static_cast<Eigen::Index>(rows[i]));
    }
    return out;
}

}  // namespace

const std::vector<std::string>& PipelineConfig::keys() {
    static const std::vector<std::string> k{"version", "detector",  "k",        "metric",       "epsilon",
                                            "covariance", "pooling", "gem_p",   "layers",       "train",
                                            "test_in",  "test_out",  "val_in",   "val_out",      "val_fraction",
                                            "seed",     "out_dir",   "benchmark", "csv_labels"};
    return k;
}

void PipelineConfig::set(const std::string& key, const std::string& raw) {
    const std::string value = trim_copy(raw);
    if (key == "version") {
        if (value != "1") fail_validation("unsupported pipeline config version '" + value + "'");
    } else if (key == "detector") {
        detector.kind = parse_detector_kind(value);
    } else if (key == "k") {
        detector.k = parse_value<std::size_t>(key, value);
    } else if (key == "metric") {
        detector.metric = parse_metric(value);
    } else if (key == "epsilon") {
        detector.epsilon = parse_value<double>(key, value);
    } else if (key == "covariance") {
        detector.covariance = parse_covariance_mode(value);
    } else if (key == "pooling") {
        pooling = parse_pooling_spec(value, pooling.gem_power);
    } else if (key == "gem_p") {
        pooling.gem_power = parse_value<double>(key, value);
    } else if (key == "layers") {
        layers = split_list(value);
    } else if (key == "train") {
        train = value;
    } else if (key == "test_in") {
        test_in = value;
    } else if (key == "test_out") {
        test_out = value;
    } else if (key == "val_in") {
        val_in = value;
    } else if (key == "val_out") {
        val_out = value;
    } else if (key == "val_fraction") {
        val_fraction = parse_value<double>(key, value);
    } else if (key == "seed") {
        seed = parse_value<std::uint64_t>(key, value);
    } else if (key == "out_dir") {
        out_dir = value;
    } else if (key == "benchmark") {
        benchmark = value;
    } else if (key == "csv_labels") {
        csv_labels = parse_bool(key, value);
    } else {
        fail_validation("unknown pipeline config key '" + key + "'");
    }
}

void PipelineConfig::validate() const {
    if (train.empty() || test_in.empty() || test_out.empty()) {
        fail_validation("pipeline config needs train, test_in and test_out");
    }
    if (val_in.empty() != val_out.empty()) fail_validation("val_in and val_out must be given together");
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) fail_validation("val_fraction must be in (0, 1)");
    if (layers.size() > 1 && train.find("{layer}") == std::string::npos) {
        fail_validation("multi-layer pipelines need '{layer}' in the file paths");
    }
    pooling.validate();
    detector.lof_config().validate();
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim_copy(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail_validation("config line " + std::to_string(line_no) + ": expected key = value");
        const auto key = trim_copy(line.substr(0, eq));
        if (key.empty()) fail_validation("config line " + std::to_string(line_no) + ": empty key");
        if (out.count(key)) fail_validation("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        out[key] = trim_copy(line.substr(eq + 1));
    }
    return out;
}

PipelineConfig make_pipeline_config(const std::map<std::string, std::string>& file_entries,
                                    const std::map<std::string, std::string>& overrides) {
    PipelineConfig cfg;
    auto merged = file_entries;
    for (const auto& [k, v] : overrides) merged[k] = v;
    // gem_p first so a pooling spec picks it up
    if (auto it = merged.find("gem_p"); it != merged.end()) cfg.set(it->first, it->second);
    for (const auto& [k, v] : merged) {
        if (k != "gem_p") cfg.set(k, v);
    }
    cfg.validate();
    return cfg;
}

LabeledDataset load_features(const std::filesystem::path& path, const PoolingSpec& pooling, bool csv_labels) {
    auto file = read_feature_file(path, csv_labels);
    if (auto* flat = std::get_if<LabeledDataset>(&file)) return std::move(*flat);
    return pool_dataset(std::get<SpatialDataset>(file), pooling);
}

PipelineResult run_pipeline(const PipelineConfig& config) {
    config.validate();
    const std::vector<std::string> layers = config.layers.empty() ? std::vector<std::string>{""} : config.layers;
    const bool have_val = !config.val_in.empty();

    staged("config", [&] {
        for (const auto& layer : layers) {
            for (const auto* p : {&config.train, &config.test_in, &config.test_out, &config.val_in, &config.val_out}) {
                if (p->empty()) continue;
                const auto path = for_layer(*p, layer);
                if (!std::filesystem::exists(path)) fail_io("no such file: " + path);
            }
        }
        return 0;
    });

    const std::filesystem::path out_dir(config.out_dir);
    PipelineResult result;
    auto write_artifact = [&](const std::string& name, auto&& writer) {
        const auto path = out_dir / name;
        writer(path);
        result.artifacts.push_back(path);
    };

    try {
        staged("output", [&] {
            std::error_code ec;
            std::filesystem::create_directories(out_dir, ec);
            if (ec) fail_io("cannot create output directory " + out_dir.string() + ": " + ec.message());
            std::filesystem::remove(out_dir / "PARTIAL", ec);
            return 0;
        });

        std::vector<std::vector<double>> test_in_cols;
        std::vector<std::vector<double>> test_out_cols;
        std::vector<std::vector<double>> val_in_cols;
        std::vector<std::vector<double>> val_out_cols;
        for (const auto& layer : layers) {
            const std::string tag = layer.empty() ? std::string() : " " + layer;
            const auto train = staged("pool" + tag, [&] {
                return load_features(for_layer(config.train, layer), config.pooling, config.csv_labels);
            });
            const auto model = staged("fit" + tag, [&] { return fit_detector(train, config.detector); });
            auto score_file = [&](const std::string& pattern) {
                const auto data = staged("pool" + tag, [&] {
                    return load_features(for_layer(pattern, layer), config.pooling, config.csv_labels);
                });
                return staged("score" + tag, [&] { return to_std(score_dataset(model, data)); });
            };
            test_in_cols.push_back(score_file(config.test_in));
            test_out_cols.push_back(score_file(config.test_out));
            if (have_val) {
                val_in_cols.push_back(score_file(config.val_in));
                val_out_cols.push_back(score_file(config.val_out));
            }
            if (layers.size() > 1) {
                write_artifact("scores_" + layer + "_in.csv", [&](auto& p) { write_scores(test_in_cols.back(), p); });
                write_artifact("scores_" + layer + "_out.csv", [&](auto& p) { write_scores(test_out_cols.back(), p); });
            }
        }

        ScoreSet final_scores;
        if (layers.size() == 1) {
            final_scores = {test_in_cols.front(), test_out_cols.front()};
            result.validation_note = "single layer: no weight fitting";
        } else {
            const auto all_in = LayerScores::from_columns(layers, test_in_cols);
            const auto all_out = LayerScores::from_columns(layers, test_out_cols);
            LayerScores fit_in;
            LayerScores fit_out;
            LayerScores eval_in = all_in;
            LayerScores eval_out = all_out;
            if (have_val) {
                fit_in = LayerScores::from_columns(layers, val_in_cols);
                fit_out = LayerScores::from_columns(layers, val_out_cols);
                result.validation_note = "weights fitted on val_in / val_out";
            } else {
                Rng rng(config.seed);
                const auto split_in = staged("split", [&] { return split_indices(all_in.samples(), config.val_fraction, rng); });
                const auto split_out = staged("split", [&] { return split_indices(all_out.samples(), config.val_fraction, rng); });
                fit_in = take_rows(all_in, split_in.validation);
                fit_out = take_rows(all_out, split_out.validation);
                eval_in = take_rows(all_in, split_in.test);
                eval_out = take_rows(all_out, split_out.test);
                result.validation_note = "weights fitted on a " + format_double(config.val_fraction) +
                                         " validation split of the test sets (seed " + std::to_string(config.seed) + ")";
            }
            const auto weights = staged("ensemble-fit", [&] { return fit_weights(fit_in, fit_out); });
            write_artifact("weights.txt", [&](auto& p) { write_text_file(p, weights_to_text(weights)); });
            final_scores = staged("combine", [&] {
                return ScoreSet{to_std(combine(eval_in, weights)), to_std(combine(eval_out, weights))};
            });
            result.weights = weights;
        }

        write_artifact("scores_in.csv", [&](auto& p) { write_scores(final_scores.in_scores, p); });
        write_artifact("scores_out.csv", [&](auto& p) { write_scores(final_scores.out_scores, p); });
        result.report = staged("eval", [&] {
            return evaluate(final_scores, to_string(config.detector.kind), config.benchmark);
        });
        write_artifact("report.json", [&](auto& p) {
            auto doc = nlohmann::ordered_json::parse(report_to_json({result.report}));
            doc["validation"] = result.validation_note;
            doc["pooling"] = to_string(config.pooling);
            doc["layers"] = layers;
            write_text_file(p, doc.dump(2) + "\n");
        });
        write_artifact("report.txt", [&](auto& p) { write_text_file(p, report_to_table({result.report})); });
    } catch (...) {
        std::string listing = "# pipeline failed; artifacts written before the failure:\n";
        for (const auto& a : result.artifacts) listing += a.string() + "\n";
        std::error_code ec;
        if (std::filesystem::is_directory(out_dir, ec)) {
            try {
                write_text_file(out_dir / "PARTIAL", listing);
            } catch (...) {
            }
        }
        throw;
    }
    return result;
}

}  // namespace oodkit
