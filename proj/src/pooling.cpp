#include "oodkit/pooling.hpp"

#include <string>

namespace oodkit {

namespace {

PoolMethod parse_method(const std::string& name) {
    if (name == "gap") return PoolMethod::Gap;
    if (name == "gmp") return PoolMethod::Gmp;
    if (name == "gem") return PoolMethod::Gem;
    if (name == "crow") return PoolMethod::Crow;
    fail_validation("unknown pooling method '" + name + "'");
}

const char* method_name(PoolMethod m) {
    switch (m) {
        case PoolMethod::Gap: return "gap";
        case PoolMethod::Gmp: return "gmp";
        case PoolMethod::Gem: return "gem";
        case PoolMethod::Crow: return "crow";
        case PoolMethod::Concat: return "concat";
    }
    return "?";
}

Vector pool_single(const RowMatrix& x, PoolMethod method, double p, bool& clamped) {
    if (x.cols() == 1) return x.col(0);
    switch (method) {
        case PoolMethod::Gap: return global_average_pool(x);
        case PoolMethod::Gmp: return global_max_pool(x);
        case PoolMethod::Gem:
        case PoolMethod::Crow: {
            if ((x.array() < 0.0).any()) {
                clamped = true;
                const RowMatrix clipped = x.cwiseMax(0.0);
                return method == PoolMethod::Gem ? generalized_mean_pool(clipped, p) : crow_pool(clipped);
            }
            return method == PoolMethod::Gem ? generalized_mean_pool(x, p) : crow_pool(x);
        }
        case PoolMethod::Concat: break;
    }
    fail_validation("nested concat pooling is not supported");
}

}  // namespace

void PoolingSpec::validate() const {
    if (!std::isfinite(gem_power) || gem_power <= 0.0) {
        fail_validation("GeM power must be finite and positive");
    }
    if (method == PoolMethod::Concat) {
        if (parts.empty()) fail_validation("concat pooling needs at least one method");
        for (auto m : parts) {
            if (m == PoolMethod::Concat) fail_validation("nested concat pooling is not supported");
        }
    }
}

Eigen::Index PoolingSpec::output_size(Eigen::Index channels) const {
    return method == PoolMethod::Concat ? channels * static_cast<Eigen::Index>(parts.size()) : channels;
}

PoolingSpec parse_pooling_spec(const std::string& text, double gem_power) {
    PoolingSpec spec;
    spec.gem_power = gem_power;
    std::string body = text;
    if (body.rfind("concat:", 0) == 0) body = body.substr(7);
    if (body.find_first_of("+,") != std::string::npos || text.rfind("concat:", 0) == 0) {
        spec.method = PoolMethod::Concat;
        const char sep = body.find('+') != std::string::npos ? '+' : ',';
        std::size_t start = 0;
        while (true) {
            const auto end = body.find(sep, start);
            spec.parts.push_back(parse_method(body.substr(start, end - start)));
            if (end == std::string::npos) break;
            start = end + 1;
        }
    } else {
        spec.method = parse_method(body);
    }
    spec.validate();
    return spec;
}

std::string to_string(const PoolingSpec& spec) {
    if (spec.method != PoolMethod::Concat) return method_name(spec.method);
    std::string out;
    for (auto m : spec.parts) {
        if (!out.empty()) out += '+';
        out += method_name(m);
    }
    return out;
}

PoolResult pool(const SpatialFeatureMap& map, const PoolingSpec& spec) {
    spec.validate();
    if (map.channels() == 0 || map.locations() == 0) fail_validation("empty spatial map");
    PoolResult result;
    const auto& x = map.values();
    if (spec.method != PoolMethod::Concat) {
        result.features = pool_single(x, spec.method, spec.gem_power, result.clamped_negative);
        return result;
    }
    result.features.resize(spec.output_size(map.channels()));
    Eigen::Index offset = 0;
    for (auto m : spec.parts) {
        result.features.segment(offset, map.channels()) = pool_single(x, m, spec.gem_power, result.clamped_negative);
        offset += map.channels();
    }
    return result;
}

LabeledDataset pool_dataset(const SpatialDataset& dataset, const PoolingSpec& spec, bool* clamped_negative) {
    dataset.validate();
    const auto n = static_cast<Eigen::Index>(dataset.maps.size());
    RowMatrix out(n, spec.output_size(dataset.maps.front().channels()));
    bool clamped = false;
    for (Eigen::Index i = 0; i < n; ++i) {
        auto r = pool(dataset.maps[static_cast<std::size_t>(i)], spec);
        clamped = clamped || r.clamped_negative;
        out.row(i) = r.features.transpose();
    }
    if (clamped_negative) *clamped_negative = clamped;
    return LabeledDataset{FeatureMatrix(std::move(out), dataset.layer_name), dataset.labels, dataset.predicted_labels};
}

}  // namespace oodkit
