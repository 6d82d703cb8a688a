#include "oodkit/io.hpp"

#include "bytes.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace oodkit {

namespace {

float to_f32(double v) {
    const auto f = static_cast<float>(v);
    if (!std::isfinite(f)) fail_validation("value is not representable as a finite 32-bit float");
    return f;
}

void write_header(ByteWriter& out, std::uint16_t flags, const std::string& name) {
    if (name.size() > std::numeric_limits<std::uint16_t>::max()) {
        fail_validation("layer name longer than 65535 bytes");
    }
    out.raw(kFeatureMagic, 4);
    out.uint(kFeatureVersion);
    out.uint(flags);
    out.uint(static_cast<std::uint16_t>(name.size()));
    out.raw(name.data(), name.size());
}

void write_labels(ByteWriter& out, const std::optional<Labels>& labels) {
    if (!labels) return;
    for (ClassId c : *labels) out.i64(c);
}

std::uint16_t label_flags(const std::optional<Labels>& labels, const std::optional<Labels>& predicted) {
    std::uint16_t flags = 0;
    if (labels) flags |= oodf_flags::kLabels;
    if (predicted) flags |= oodf_flags::kPredicted;
    return flags;
}

Labels read_labels(ByteReader& in, std::uint64_t n) {
    in.need(checked_mul(n, 8));
    Labels labels(n);
    for (auto& c : labels) c = in.i64();
    return labels;
}

bool has_csv_extension(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return ext == ".csv";
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line) {
    field = trim(field);
    T value{};
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        fail_validation("line " + std::to_string(line) + ": cannot parse '" + std::string(field) + "'");
    }
    return value;
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_io("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) fail_io("read failed: " + path.string());
    return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail_io("cannot open for writing: " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) fail_io("write failed: " + path.string());
}

void write_feature_file(const LabeledDataset& dataset, const std::filesystem::path& path) {
    dataset.validate();
    const auto& m = dataset.features.values();
    const auto n = static_cast<std::uint64_t>(m.rows());
    const auto d = static_cast<std::uint64_t>(m.cols());
    checked_mul(checked_mul(n, d), 4);

    ByteWriter out;
    write_header(out, label_flags(dataset.labels, dataset.predicted_labels), dataset.features.layer_name());
    out.uint(n);
    out.uint(d);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) out.f32(to_f32(m(i, j)));
    }
    write_labels(out, dataset.labels);
    write_labels(out, dataset.predicted_labels);
    write_text_file(path, out.take());
}

void write_feature_file(const SpatialDataset& dataset, const std::filesystem::path& path) {
    dataset.validate();
    const auto& first = dataset.maps.front();
    const auto n = static_cast<std::uint64_t>(dataset.maps.size());
    const auto c = static_cast<std::uint64_t>(first.channels());
    const auto h = static_cast<std::uint64_t>(first.height());
    const auto w = static_cast<std::uint64_t>(first.width());
    checked_mul(checked_mul(checked_mul(checked_mul(n, c), h), w), 4);

    ByteWriter out;
    write_header(out, label_flags(dataset.labels, dataset.predicted_labels) | oodf_flags::kSpatial,
                 dataset.layer_name);
    out.uint(n);
    out.uint(c);
    out.uint(h);
    out.uint(w);
    for (const auto& map : dataset.maps) {
        const auto& v = map.values();
        for (Eigen::Index k = 0; k < v.rows(); ++k) {
            for (Eigen::Index l = 0; l < v.cols(); ++l) out.f32(to_f32(v(k, l)));
        }
    }
    write_labels(out, dataset.labels);
    write_labels(out, dataset.predicted_labels);
    write_text_file(path, out.take());
}

FeatureFile read_feature_file(const std::filesystem::path& path, bool csv_label_column) {
    if (!std::filesystem::exists(path)) fail_io("no such file: " + path.string());
    const std::string bytes = read_text_file(path);
    if (has_csv_extension(path)) return parse_csv_features(bytes, csv_label_column);

    ByteReader in(bytes, path);
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kFeatureMagic, 4) != 0) {
        fail_validation("bad magic in " + path.string());
    }
    in.raw(4);
    const auto version = in.uint<std::uint16_t>();
    if (version != kFeatureVersion) {
        fail_validation("unsupported OODF version " + std::to_string(version) + " in " + path.string());
    }
    const auto flags = in.uint<std::uint16_t>();
    const auto name = in.raw(in.uint<std::uint16_t>());
    const auto n = in.uint<std::uint64_t>();
    if (n == 0) fail_validation("feature file has no rows: " + path.string());

    auto read_labels_if = [&](std::uint16_t bit) -> std::optional<Labels> {
        if (!(flags & bit)) return std::nullopt;
        return read_labels(in, n);
    };

    if (flags & oodf_flags::kSpatial) {
        const auto c = in.uint<std::uint64_t>();
        const auto h = in.uint<std::uint64_t>();
        const auto w = in.uint<std::uint64_t>();
        const auto per_map = checked_mul(checked_mul(c, h), w);
        in.need(checked_mul(checked_mul(per_map, n), 4));
        SpatialDataset out;
        out.layer_name = name;
        out.maps.reserve(n);
        for (std::uint64_t s = 0; s < n; ++s) {
            RowMatrix values(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(h * w));
            for (Eigen::Index k = 0; k < values.rows(); ++k) {
                for (Eigen::Index l = 0; l < values.cols(); ++l) values(k, l) = in.f32();
            }
            out.maps.emplace_back(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(h),
                                  static_cast<Eigen::Index>(w), std::move(values));
        }
        out.labels = read_labels_if(oodf_flags::kLabels);
        out.predicted_labels = read_labels_if(oodf_flags::kPredicted);
        out.validate();
        return out;
    }

    const auto d = in.uint<std::uint64_t>();
    in.need(checked_mul(checked_mul(n, d), 4));
    RowMatrix values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) values(i, j) = in.f32();
    }
    LabeledDataset out{FeatureMatrix(std::move(values), name), std::nullopt, std::nullopt};
    out.labels = read_labels_if(oodf_flags::kLabels);
    out.predicted_labels = read_labels_if(oodf_flags::kPredicted);
    out.validate();
    return out;
}

LabeledDataset read_flat_features(const std::filesystem::path& path, bool csv_label_column) {
    auto file = read_feature_file(path, csv_label_column);
    if (auto* flat = std::get_if<LabeledDataset>(&file)) return std::move(*flat);
    fail_validation("expected flat features but " + path.string() + " holds spatial maps");
}

LabeledDataset parse_csv_features(const std::string& text, bool label_column) {
    std::vector<std::vector<double>> rows;
    Labels labels;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto content = trim(line);
        if (content.empty()) continue;
        std::vector<std::string_view> fields;
        std::size_t start = 0;
        while (true) {
            const auto comma = content.find(',', start);
            fields.push_back(content.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                                     : comma - start));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (label_column) {
            if (fields.size() < 2) fail_validation("line " + std::to_string(line_no) + ": missing label column");
            labels.push_back(parse_number<ClassId>(fields.back(), line_no));
            fields.pop_back();
        }
        std::vector<double> row;
        row.reserve(fields.size());
        for (auto f : fields) row.push_back(parse_number<double>(f, line_no));
        if (!rows.empty() && row.size() != rows.front().size()) {
            fail_validation("line " + std::to_string(line_no) + ": inconsistent column count");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) fail_validation("CSV contains no rows");

    RowMatrix values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    LabeledDataset out{FeatureMatrix(std::move(values)), std::nullopt, std::nullopt};
    if (label_column) out.labels = std::move(labels);
    out.validate();
    return out;
}

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) fail_validation("cannot format value");
    return {buf, ptr};
}

void write_scores(const std::vector<double>& scores, const std::filesystem::path& path) {
    std::string text = "# confidence score, larger = more in-distribution\n";
    for (double s : scores) {
        if (!std::isfinite(s)) fail_numeric("non-finite score while writing " + path.string());
        text += format_double(s);
        text += '\n';
    }
    write_text_file(path, text);
}

std::vector<double> read_scores(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) fail_io("no such file: " + path.string());
    const auto text = read_text_file(path);
    std::vector<double> scores;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto content = trim(line);
        if (content.empty() || content.front() == '#') continue;
        const double v = parse_number<double>(content, line_no);
        if (!std::isfinite(v)) fail_validation("non-finite score on line " + std::to_string(line_no));
        scores.push_back(v);
    }
    return scores;
}

}  // namespace oodkit
