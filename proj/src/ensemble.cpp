#include "oodkit/ensemble.hpp"

#include <cmath>
#include <sstream>

#include "oodkit/io.hpp"

namespace oodkit {

void LayerScores::validate() const {
    if (scores.cols() < 1) fail_validation("layer scores need at least one layer");
    if (scores.rows() < 1) fail_validation("layer scores need at least one sample");
    if (static_cast<Eigen::Index>(layer_names.size()) != scores.cols()) {
        fail_validation("layer name count does not match the score columns");
    }
    if (!scores.allFinite()) fail_validation("layer scores contain non-finite values");
}

LayerScores LayerScores::from_columns(std::vector<std::string> names, const std::vector<std::vector<double>>& columns) {
    if (columns.empty()) fail_validation("layer scores need at least one layer");
    LayerScores out;
    out.layer_names = std::move(names);
    out.scores.resize(static_cast<Eigen::Index>(columns.front().size()), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t l = 0; l < columns.size(); ++l) {
        if (columns[l].size() != columns.front().size()) fail_validation("layers have different sample counts");
        out.scores.col(static_cast<Eigen::Index>(l)) =
            Eigen::Map<const Vector>(columns[l].data(), static_cast<Eigen::Index>(columns[l].size()));
    }
    out.validate();
    return out;
}

void EnsembleWeights::validate() const {
    if (static_cast<Eigen::Index>(layer_names.size()) != alpha.size()) {
        fail_validation("weight count does not match the layer names");
    }
    if (!alpha.allFinite() || !std::isfinite(bias)) fail_validation("ensemble weights are not finite");
}

Vector combine(const LayerScores& scores, const EnsembleWeights& weights) {
    scores.validate();
    weights.validate();
    if (weights.alpha.size() != scores.layers()) {
        fail_validation("ensemble has " + std::to_string(weights.alpha.size()) + " weights for " +
                        std::to_string(scores.layers()) + " layers");
    }
    return (scores.scores * weights.alpha).array() + weights.bias;
}

EnsembleWeights fit_weights(const LayerScores& val_in, const LayerScores& val_out, const LogisticOptions& options) {
    val_in.validate();
    val_out.validate();
    if (val_in.layer_names != val_out.layer_names) fail_validation("validation score sets use different layers");

    const Eigen::Index layers = val_in.layers();
    const Eigen::Index n = val_in.samples() + val_out.samples();
    Eigen::MatrixXd x(n, layers);
    x << val_in.scores, val_out.scores;
    Vector y(n);
    y << Vector::Ones(val_in.samples()), Vector::Zero(val_out.samples());

    EnsembleWeights out;
    out.layer_names = val_in.layer_names;
    out.alpha = Vector::Zero(layers);

    const Eigen::RowVectorXd mean = x.colwise().mean();
    const Eigen::RowVectorXd sd = ((x.rowwise() - mean).colwise().squaredNorm() / static_cast<double>(n)).cwiseSqrt();
    std::vector<Eigen::Index> kept;
    for (Eigen::Index l = 0; l < layers; ++l) {
        if (sd(l) > 0.0) {
            kept.push_back(l);
        } else {
            out.dropped.push_back(out.layer_names[static_cast<std::size_t>(l)]);
        }
    }

    Eigen::MatrixXd z(n, static_cast<Eigen::Index>(kept.size()));
    for (std::size_t j = 0; j < kept.size(); ++j) {
        const auto l = kept[j];
        z.col(static_cast<Eigen::Index>(j)) = (x.col(l).array() - mean(l)) / sd(l);
    }

    Vector w = Vector::Zero(z.cols());
    double b = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (int it = 0; it < options.iterations; ++it) {
        const Vector logits = (z * w).array() + b;
        const Vector residual = (1.0 / (1.0 + (-logits.array()).exp())).matrix() - y;
        const Vector grad_w = inv_n * (z.transpose() * residual) + options.l2 * w;
        const double grad_b = inv_n * residual.sum();
        w -= options.learning_rate * grad_w;
        b -= options.learning_rate * grad_b;
    }

    out.bias = b;
    for (std::size_t j = 0; j < kept.size(); ++j) {
        const auto l = kept[j];
        const double a = w(static_cast<Eigen::Index>(j)) / sd(l);
        out.alpha(l) = a;
        out.bias -= a * mean(l);
    }
    return out;
}

std::string weights_to_text(const EnsembleWeights& weights) {
    weights.validate();
    std::string text = "# oodkit ensemble weights v1\n";
    for (std::size_t l = 0; l < weights.layer_names.size(); ++l) {
        const auto& name = weights.layer_names[l];
        if (name.empty() || name == "bias" || name.find_first_of("=\n#") != std::string::npos) {
            fail_validation("layer name '" + name + "' cannot be stored in a weights file");
        }
        text += name + " = " + format_double(weights.alpha(static_cast<Eigen::Index>(l))) + "\n";
    }
    text += "bias = " + format_double(weights.bias) + "\n";
    for (const auto& d : weights.dropped) text += "# dropped (zero variance): " + d + "\n";
    return text;
}

EnsembleWeights weights_from_text(const std::string& text) {
    EnsembleWeights out;
    std::vector<double> alpha;
    bool have_bias = false;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail_validation("weights line without '=': " + line);
        auto key = line.substr(first, eq - first);
        key.erase(key.find_last_not_of(" \t") + 1);
        double value = 0.0;
        try {
            value = std::stod(line.substr(eq + 1));
        } catch (const std::exception&) {
            fail_validation("weights line has no numeric value: " + line);
        }
        if (key == "bias") {
            out.bias = value;
            have_bias = true;
        } else {
            out.layer_names.push_back(key);
            alpha.push_back(value);
        }
    }
    if (!have_bias) fail_validation("weights file has no bias entry");
    out.alpha = Eigen::Map<const Vector>(alpha.data(), static_cast<Eigen::Index>(alpha.size()));
    out.validate();
    return out;
}

}  // namespace oodkit
