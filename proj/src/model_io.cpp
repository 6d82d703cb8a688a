#include "oodkit/model_io.hpp"

#include <cstring>
#include <string>

#include "bytes.hpp"
#include "oodkit/io.hpp"

namespace oodkit {

namespace {

enum : std::uint16_t { kKindLof = 1, kKindMahalanobis = 2 };

bool read_switch(ByteReader& in, const char* what) {
    const auto v = in.uint<std::uint16_t>();
    if (v > 1) fail_validation(std::string("bad ") + what + " code " + std::to_string(v) + " in model file");
    return v == 1;
}

void write_lof(ByteWriter& out, const LofModel& model) {
    const auto& cfg = model.config();
    out.uint(static_cast<std::uint64_t>(cfg.k));
    out.uint(static_cast<std::uint16_t>(cfg.metric == Metric::Cosine ? 1 : 0));
    out.uint(static_cast<std::uint16_t>(cfg.mode == LofMode::PerClass ? 1 : 0));
    out.uint(static_cast<std::uint64_t>(model.parts().size()));
    out.uint(static_cast<std::uint64_t>(model.dim()));
    for (const auto& part : model.parts()) {
        const auto& pts = part.refs.points();
        out.i64(part.class_id);
        out.uint(static_cast<std::uint64_t>(pts.rows()));
        for (Eigen::Index i = 0; i < pts.rows(); ++i) {
            for (Eigen::Index j = 0; j < pts.cols(); ++j) out.f64(pts(i, j));
        }
        for (double v : part.k_distance) out.f64(v);
        for (double v : part.lrd) out.f64(v);
        for (Eigen::Index j = 0; j < part.centroid.size(); ++j) out.f64(part.centroid(j));
    }
}

LofModel read_lof(ByteReader& in) {
    LofConfig cfg;
    cfg.k = static_cast<std::size_t>(in.uint<std::uint64_t>());
    cfg.metric = read_switch(in, "metric") ? Metric::Cosine : Metric::Euclidean;
    cfg.mode = read_switch(in, "LOF mode") ? LofMode::PerClass : LofMode::Global;
    const auto parts = in.uint<std::uint64_t>();
    const auto d = in.uint<std::uint64_t>();
    std::vector<LofPart> out;
    for (std::uint64_t p = 0; p < parts; ++p) {
        LofPart part;
        part.class_id = in.i64();
        const auto n = in.uint<std::uint64_t>();
        in.need(checked_mul(checked_mul(n, d + 2), 8));
        RowMatrix pts(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
        for (Eigen::Index i = 0; i < pts.rows(); ++i) {
            for (Eigen::Index j = 0; j < pts.cols(); ++j) pts(i, j) = in.f64();
        }
        part.k_distance.resize(n);
        for (auto& v : part.k_distance) v = in.f64();
        part.lrd.resize(n);
        for (auto& v : part.lrd) v = in.f64();
        part.centroid.resize(static_cast<Eigen::Index>(d));
        for (Eigen::Index j = 0; j < part.centroid.size(); ++j) part.centroid(j) = in.f64();
        part.refs = ReferenceSet(std::move(pts), cfg.metric);
        out.push_back(std::move(part));
    }
    return LofModel::from_parts(cfg, std::move(out));
}

void write_mahalanobis(ByteWriter& out, const MahalanobisModel& model) {
    out.uint(static_cast<std::uint16_t>(model.covariance_mode() == CovarianceMode::PerClass ? 1 : 0));
    out.uint(static_cast<std::uint64_t>(model.classes().size()));
    out.uint(static_cast<std::uint64_t>(model.dim()));
    for (ClassId c : model.classes()) out.i64(c);
    const auto& means = model.means();
    for (Eigen::Index i = 0; i < means.rows(); ++i) {
        for (Eigen::Index j = 0; j < means.cols(); ++j) out.f64(means(i, j));
    }
    for (const auto& comp : model.components()) {
        out.f64(comp.epsilon);
        for (Eigen::Index i = 0; i < comp.covariance.rows(); ++i) {
            for (Eigen::Index j = 0; j < comp.covariance.cols(); ++j) out.f64(comp.covariance(i, j));
        }
    }
}

MahalanobisModel read_mahalanobis(ByteReader& in) {
    const auto mode = read_switch(in, "covariance mode") ? CovarianceMode::PerClass : CovarianceMode::Tied;
    const auto classes = in.uint<std::uint64_t>();
    const auto d = in.uint<std::uint64_t>();
    in.need(checked_mul(checked_mul(classes, d + 1), 8));
    std::vector<ClassId> ids(classes);
    for (auto& c : ids) c = in.i64();
    Eigen::MatrixXd means(static_cast<Eigen::Index>(classes), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < means.rows(); ++i) {
        for (Eigen::Index j = 0; j < means.cols(); ++j) means(i, j) = in.f64();
    }
    const std::uint64_t components = mode == CovarianceMode::Tied ? 1 : classes;
    std::vector<Eigen::MatrixXd> covs;
    std::vector<double> eps;
    for (std::uint64_t c = 0; c < components; ++c) {
        eps.push_back(in.f64());
        in.need(checked_mul(checked_mul(d, d), 8));
        Eigen::MatrixXd cov(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
        for (Eigen::Index i = 0; i < cov.rows(); ++i) {
            for (Eigen::Index j = 0; j < cov.cols(); ++j) cov(i, j) = in.f64();
        }
        covs.push_back(std::move(cov));
    }
    return MahalanobisModel::from_parameters(mode, std::move(ids), std::move(means), std::move(covs), std::move(eps));
}

}  // namespace

void write_model(const DetectorModel& model, const std::filesystem::path& path) {
    ByteWriter out;
    out.raw(kModelMagic, 4);
    out.uint(kModelVersion);
    if (const auto* lof = std::get_if<LofModel>(&model)) {
        out.uint(static_cast<std::uint16_t>(kKindLof));
        write_lof(out, *lof);
    } else {
        out.uint(static_cast<std::uint16_t>(kKindMahalanobis));
        write_mahalanobis(out, std::get<MahalanobisModel>(model));
    }
    write_text_file(path, out.take());
}

DetectorModel read_model(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) fail_io("no such file: " + path.string());
    const std::string bytes = read_text_file(path);
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kModelMagic, 4) != 0) {
        fail_validation("bad magic in model file " + path.string());
    }
    ByteReader in(bytes, path);
    in.raw(4);
    const auto version = in.uint<std::uint16_t>();
    if (version != kModelVersion) fail_validation("unsupported OODM version " + std::to_string(version));
    const auto kind = in.uint<std::uint16_t>();
    DetectorModel model = [&]() -> DetectorModel {
        if (kind == kKindLof) return read_lof(in);
        if (kind == kKindMahalanobis) return read_mahalanobis(in);
        fail_validation("unknown detector kind " + std::to_string(kind) + " in " + path.string());
    }();
    if (in.remaining() != 0) fail_validation("trailing bytes in model file " + path.string());
    return model;
}

Vector score_dataset(const DetectorModel& model, const LabeledDataset& queries) {
    queries.validate();
    if (const auto* lof = std::get_if<LofModel>(&model)) {
        return lof->score_rows(queries.features.values(), queries.predicted_labels);
    }
    return std::get<MahalanobisModel>(model).score_rows(queries.features.values());
}

std::string detector_name(const DetectorModel& model) {
    if (const auto* lof = std::get_if<LofModel>(&model)) {
        return lof->config().mode == LofMode::PerClass ? "lof_d" : "lof";
    }
    return "mahalanobis";
}

}  // namespace oodkit
