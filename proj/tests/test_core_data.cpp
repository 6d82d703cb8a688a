#include <doctest.h>

#include <cstring>
#include <limits>
#include <random>

#include "oodkit/io.hpp"
#include "test_util.hpp"

using namespace oodkit;
using testing::TempDir;

namespace {

RowMatrix f32_values(std::mt19937_64& gen, Eigen::Index rows, Eigen::Index cols) {
    // values exactly representable in f32 so the on-disk precision is lossless
    return testing::uniform_matrix(gen, rows, cols, -100.0, 100.0).cast<float>().cast<double>();
}

bool bit_equal(const RowMatrix& a, const RowMatrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace

TEST_CASE("feature matrix validation") {
    CHECK_THROWS_AS(FeatureMatrix(RowMatrix(0, 3)), Error);
    CHECK_THROWS_AS(FeatureMatrix(RowMatrix(2, 0)), Error);
    RowMatrix bad = RowMatrix::Zero(2, 2);
    bad(1, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(FeatureMatrix{bad}, Error);
    bad(1, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(FeatureMatrix{bad}, Error);
    CHECK_NOTHROW(FeatureMatrix(RowMatrix::Zero(1, 1)));
}

TEST_CASE("labels must match rows") {
    LabeledDataset ds{FeatureMatrix(RowMatrix::Zero(3, 2)), Labels{0, 1}, std::nullopt};
    CHECK_THROWS_AS(ds.validate(), Error);
    ds.labels = Labels{0, 1, -1};
    CHECK_NOTHROW(ds.validate());
    ds.predicted_labels = Labels{0, -2, 1};
    CHECK_THROWS_AS(ds.validate(), Error);
    ds.predicted_labels = Labels{0, 0, 1};
    CHECK(ds.classes() == std::vector<ClassId>{0, 1});
}

TEST_CASE("smallest OODF file has the layout size") {
    TempDir dir;
    LabeledDataset named{FeatureMatrix(RowMatrix::Zero(1, 1), "layer_0"), std::nullopt, std::nullopt};
    write_feature_file(named, dir / "a.oodf");
    // magic 4 + version 2 + flags 2 + name length 2 + name 7 + n 8 + d 8 + payload 4
    CHECK(std::filesystem::file_size(dir / "a.oodf") == 37);

    LabeledDataset unnamed{FeatureMatrix(RowMatrix::Zero(1, 1)), std::nullopt, std::nullopt};
    write_feature_file(unnamed, dir / "b.oodf");
    CHECK(std::filesystem::file_size(dir / "b.oodf") == 30);

    const auto back = read_flat_features(dir / "a.oodf");
    CHECK(back.features.rows() == 1);
    CHECK(back.features.dim() == 1);
    CHECK(back.features.values()(0, 0) == 0.0);
    CHECK(back.features.layer_name() == "layer_0");
}

TEST_CASE("header bytes are little-endian") {
    TempDir dir;
    LabeledDataset ds{FeatureMatrix(RowMatrix::Constant(1, 1, 1.0), "x"), Labels{2}, std::nullopt};
    write_feature_file(ds, dir / "a.oodf");
    const auto bytes = read_text_file(dir / "a.oodf");
    REQUIRE(bytes.size() == 4 + 2 + 2 + 2 + 1 + 8 + 8 + 4 + 8);
    CHECK(bytes.substr(0, 4) == "OODF");
    CHECK(bytes[4] == 1);
    CHECK(bytes[5] == 0);
    CHECK(bytes[6] == 1);  // labels flag
    CHECK(bytes[8] == 1);  // name length
    CHECK(bytes[10] == 'x');
    CHECK(bytes[11] == 1);  // n
    CHECK(bytes[19] == 1);  // d
    // 1.0f = 0x3f800000
    CHECK(static_cast<unsigned char>(bytes[29]) == 0x80);
    CHECK(static_cast<unsigned char>(bytes[30]) == 0x3f);
    CHECK(bytes[31] == 2);  // label
}

TEST_CASE("round trip is bit-exact over random shapes") {
    TempDir dir;
    std::mt19937_64 gen(7);
    for (int trial = 0; trial < 20; ++trial) {
        const auto n = static_cast<Eigen::Index>(1 + gen() % 120);
        const auto d = static_cast<Eigen::Index>(1 + gen() % 70);
        LabeledDataset ds{FeatureMatrix(f32_values(gen, n, d), "layer_" + std::to_string(trial)), std::nullopt,
                          std::nullopt};
        if (trial % 2 == 0) {
            Labels l(static_cast<std::size_t>(n));
            for (auto& c : l) c = static_cast<ClassId>(gen() % 5) - 1;
            ds.labels = l;
        }
        if (trial % 3 == 0) ds.predicted_labels = Labels(static_cast<std::size_t>(n), 3);
        const auto path = dir / "rt.oodf";
        write_feature_file(ds, path);
        const auto back = read_flat_features(path);
        CHECK(bit_equal(back.features.values(), ds.features.values()));
        CHECK(back.features.layer_name() == ds.features.layer_name());
        CHECK(back.labels == ds.labels);
        CHECK(back.predicted_labels == ds.predicted_labels);

        // read -> write reproduces the file byte for byte
        const auto first = read_text_file(path);
        write_feature_file(back, dir / "rt2.oodf");
        CHECK(read_text_file(dir / "rt2.oodf") == first);
    }
}

TEST_CASE("100x64 matrix round-trips") {
    TempDir dir;
    std::mt19937_64 gen(11);
    LabeledDataset ds{FeatureMatrix(f32_values(gen, 100, 64)), std::nullopt, std::nullopt};
    write_feature_file(ds, dir / "m.oodf");
    CHECK(bit_equal(read_flat_features(dir / "m.oodf").features.values(), ds.features.values()));
}

TEST_CASE("spatial datasets round-trip") {
    TempDir dir;
    std::mt19937_64 gen(3);
    SpatialDataset ds;
    ds.layer_name = "stage4";
    for (int i = 0; i < 4; ++i) ds.maps.emplace_back(3, 2, 5, f32_values(gen, 3, 10));
    ds.labels = Labels{0, 1, 0, 1};
    write_feature_file(ds, dir / "s.oodf");
    auto file = read_feature_file(dir / "s.oodf");
    REQUIRE(std::holds_alternative<SpatialDataset>(file));
    const auto& back = std::get<SpatialDataset>(file);
    REQUIRE(back.maps.size() == 4);
    CHECK(back.layer_name == "stage4");
    CHECK(back.labels == ds.labels);
    CHECK_FALSE(back.predicted_labels.has_value());
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(back.maps[i].height() == 2);
        CHECK(back.maps[i].width() == 5);
        CHECK(bit_equal(back.maps[i].values(), ds.maps[i].values()));
    }
    CHECK_THROWS_AS(read_flat_features(dir / "s.oodf"), Error);
}

TEST_CASE("reader rejects malformed files") {
    TempDir dir;
    LabeledDataset ds{FeatureMatrix(RowMatrix::Constant(4, 3, 0.5)), Labels{0, 0, 1, 1}, std::nullopt};
    write_feature_file(ds, dir / "ok.oodf");
    const auto good = read_text_file(dir / "ok.oodf");

    SUBCASE("bad magic") {
        auto bytes = good;
        bytes.replace(0, 4, "XXXX");
        write_text_file(dir / "bad.oodf", bytes);
        try {
            read_feature_file(dir / "bad.oodf");
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Validation);
            CHECK(std::string(e.what()).find("magic") != std::string::npos);
        }
    }
    SUBCASE("unsupported version") {
        auto bytes = good;
        bytes[4] = 2;
        write_text_file(dir / "bad.oodf", bytes);
        CHECK_THROWS_WITH_AS(read_feature_file(dir / "bad.oodf"), doctest::Contains("version"), Error);
    }
    SUBCASE("truncated payload") {
        write_text_file(dir / "bad.oodf", good.substr(0, good.size() - 9));
        try {
            read_feature_file(dir / "bad.oodf");
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("truncated") != std::string::npos);
        }
    }
    SUBCASE("non-finite payload") {
        auto bytes = good;
        const float nan = std::numeric_limits<float>::quiet_NaN();
        std::memcpy(bytes.data() + 26, &nan, 4);
        write_text_file(dir / "bad.oodf", bytes);
        CHECK_THROWS_WITH_AS(read_feature_file(dir / "bad.oodf"), doctest::Contains("non-finite"), Error);
    }
    SUBCASE("missing file is an I/O error") {
        try {
            read_feature_file(dir / "nope.oodf");
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Io);
            CHECK(std::string(e.what()).find("nope.oodf") != std::string::npos);
        }
    }
}

TEST_CASE("invalid data is not written") {
    TempDir dir;
    LabeledDataset ds{FeatureMatrix(RowMatrix::Constant(2, 2, 1.0)), Labels{0}, std::nullopt};
    CHECK_THROWS_AS(write_feature_file(ds, dir / "x.oodf"), Error);
    CHECK_FALSE(std::filesystem::exists(dir / "x.oodf"));

    LabeledDataset huge{FeatureMatrix(RowMatrix::Constant(1, 1, 1e300)), std::nullopt, std::nullopt};
    CHECK_THROWS_AS(write_feature_file(huge, dir / "y.oodf"), Error);
    CHECK_FALSE(std::filesystem::exists(dir / "y.oodf"));
}

TEST_CASE("CSV fallback") {
    const auto ds = parse_csv_features("0.5,1.5\n2.5,3.5");
    REQUIRE(ds.features.rows() == 2);
    REQUIRE(ds.features.dim() == 2);
    CHECK(ds.features.values()(0, 0) == 0.5);
    CHECK(ds.features.values()(0, 1) == 1.5);
    CHECK(ds.features.values()(1, 0) == 2.5);
    CHECK(ds.features.values()(1, 1) == 3.5);
    CHECK_FALSE(ds.labels.has_value());

    const auto labelled = parse_csv_features("1,2,0\n3,4,1\n", true);
    CHECK(labelled.features.dim() == 2);
    CHECK(labelled.labels == Labels{0, 1});

    CHECK_THROWS_AS(parse_csv_features("1,2\n3\n"), Error);
    CHECK_THROWS_AS(parse_csv_features("1,nan\n"), Error);
    CHECK_THROWS_AS(parse_csv_features("1,abc\n"), Error);
    CHECK_THROWS_AS(parse_csv_features("\n\n"), Error);

    TempDir dir;
    write_text_file(dir / "f.csv", "0.5,1.5\n2.5,3.5\n");
    CHECK(read_flat_features(dir / "f.csv").features.values() == ds.features.values());
}

TEST_CASE("score files") {
    TempDir dir;
    const std::vector<double> s{-1.5, 0.1, 3e-20, 12345.678901234567};
    write_scores(s, dir / "s.csv");
    const auto text = read_text_file(dir / "s.csv");
    CHECK(text.rfind("# ", 0) == 0);
    CHECK(read_scores(dir / "s.csv") == s);
}
