#include <doctest.h>

#include <cmath>
#include <random>

#include "oodkit/pooling.hpp"
#include "test_util.hpp"

using namespace oodkit;

namespace {

SpatialFeatureMap random_map(std::mt19937_64& gen, Eigen::Index c, Eigen::Index h, Eigen::Index w, double lo = 0.0,
                             double hi = 5.0) {
    return SpatialFeatureMap(c, h, w, testing::uniform_matrix(gen, c, h * w, lo, hi));
}

Vector run(const SpatialFeatureMap& map, const std::string& method, double p = 3.0) {
    return pool(map, parse_pooling_spec(method, p)).features;
}

// CroW written against the three-index tensor rather than the flattened block.
std::vector<double> crow_oracle(const SpatialFeatureMap& m) {
    const auto c = m.channels(), h = m.height(), w = m.width();
    std::vector<std::vector<double>> s(static_cast<std::size_t>(h), std::vector<double>(static_cast<std::size_t>(w)));
    double sq = 0.0;
    for (Eigen::Index i = 0; i < h; ++i) {
        for (Eigen::Index j = 0; j < w; ++j) {
            double t = 0.0;
            for (Eigen::Index k = 0; k < c; ++k) t += m.at(k, i, j);
            s[i][j] = t;
            sq += t * t;
        }
    }
    std::vector<double> q(static_cast<std::size_t>(c), 0.0);
    double qsum = 0.0;
    for (Eigen::Index k = 0; k < c; ++k) {
        for (Eigen::Index i = 0; i < h; ++i) {
            for (Eigen::Index j = 0; j < w; ++j) q[k] += m.at(k, i, j) != 0.0 ? 1.0 : 0.0;
        }
        q[k] /= static_cast<double>(h * w);
        qsum += q[k];
    }
    std::vector<double> out(static_cast<std::size_t>(c), 0.0);
    for (Eigen::Index k = 0; k < c; ++k) {
        const double beta = q[k] > 0.0 ? std::log(qsum / q[k]) : 0.0;
        double acc = 0.0;
        for (Eigen::Index i = 0; i < h; ++i) {
            for (Eigen::Index j = 0; j < w; ++j) {
                const double alpha = s[i][j] > 0.0 ? std::sqrt(s[i][j] / std::sqrt(sq)) : 0.0;
                acc += alpha * m.at(k, i, j);
            }
        }
        out[k] = beta * acc;
    }
    return out;
}

}  // namespace

TEST_CASE("constant map pools to the constant") {
    for (auto [c, h, w] : {std::tuple{1, 1, 2}, {3, 4, 5}, {7, 2, 2}}) {
        SpatialFeatureMap map(c, h, w, RowMatrix::Constant(c, h * w, 2.0));
        for (const char* m : {"gap", "gmp", "gem"}) {
            const Vector v = run(map, m);
            REQUIRE(v.size() == c);
            for (Eigen::Index k = 0; k < c; ++k) CHECK(v(k) == doctest::Approx(2.0).epsilon(1e-15));
        }
    }
}

TEST_CASE("gem on two values") {
    RowMatrix x(1, 2);
    x << 1.0, 2.0;
    SpatialFeatureMap map(1, 1, 2, x);
    const double expected = std::cbrt(4.5);
    CHECK(std::abs(run(map, "gem", 3.0)(0) - expected) < 1e-14);
    CHECK(std::abs(expected - 1.65096) < 1e-5);
    CHECK(run(map, "gap")(0) == 1.5);
    CHECK(run(map, "gmp")(0) == 2.0);
}

TEST_CASE("gem with p=1 is gap") {
    std::mt19937_64 gen(1);
    for (int t = 0; t < 50; ++t) {
        const auto map = random_map(gen, 1 + static_cast<Eigen::Index>(gen() % 16), 1 + static_cast<Eigen::Index>(gen() % 7),
                                    2 + static_cast<Eigen::Index>(gen() % 7));
        const Vector a = run(map, "gap");
        const Vector g = run(map, "gem", 1.0);
        for (Eigen::Index k = 0; k < a.size(); ++k) CHECK(std::abs(g(k) - a(k)) <= 1e-12 * std::max(1.0, a(k)));
    }
}

TEST_CASE("power mean ordering gap <= gem <= gmp") {
    std::mt19937_64 gen(2);
    for (double p : {1.0, 1.5, 2.0, 3.0, 8.0, 64.0}) {
        for (int t = 0; t < 30; ++t) {
            const auto map = random_map(gen, 8, 1 + static_cast<Eigen::Index>(gen() % 6), 1 + static_cast<Eigen::Index>(gen() % 6));
            const Vector a = run(map, "gap");
            const Vector g = run(map, "gem", p);
            const Vector m = run(map, "gmp");
            for (Eigen::Index k = 0; k < a.size(); ++k) {
                CHECK(a(k) <= g(k) + 1e-12);
                CHECK(g(k) <= m(k) + 1e-12);
            }
        }
    }
}

TEST_CASE("gem approaches gmp for large p") {
    std::mt19937_64 gen(3);
    for (int t = 0; t < 50; ++t) {
        const auto map = random_map(gen, 6, 1 + static_cast<Eigen::Index>(gen() % 5), 1 + static_cast<Eigen::Index>(gen() % 5));
        const Vector g = run(map, "gem", 64.0);
        const Vector m = run(map, "gmp");
        for (Eigen::Index k = 0; k < g.size(); ++k) CHECK(g(k) >= 0.95 * m(k));
    }
}

TEST_CASE("gem does not overflow for huge activations and powers") {
    RowMatrix x(1, 4);
    x << 1e200, 3e200, 2e200, 0.0;
    SpatialFeatureMap map(1, 2, 2, x);
    const double g = run(map, "gem", 64.0)(0);
    CHECK(std::isfinite(g));
    CHECK(g <= 3e200);
    CHECK(g > 2.9e200 * std::pow(0.25, 1.0 / 64.0) * 0.99);
}

TEST_CASE("crow matches the tensor formula") {
    std::mt19937_64 gen(4);
    for (int t = 0; t < 30; ++t) {
        RowMatrix x = testing::uniform_matrix(gen, 5, 12, -1.0, 3.0).cwiseMax(0.0);
        SpatialFeatureMap map(5, 3, 4, x);
        const Vector v = run(map, "crow");
        const auto expected = crow_oracle(map);
        for (Eigen::Index k = 0; k < 5; ++k) CHECK(v(k) == doctest::Approx(expected[k]).epsilon(1e-12));
    }
}

TEST_CASE("crow zero handling") {
    SpatialFeatureMap zeros(3, 2, 2, RowMatrix::Zero(3, 4));
    const Vector v = run(zeros, "crow");
    CHECK(v.isZero());
    CHECK(v.allFinite());

    RowMatrix x = RowMatrix::Zero(2, 4);
    x(0, 1) = 1.0;  // channel 1 is all zero
    const Vector w = run(SpatialFeatureMap(2, 2, 2, x), "crow");
    CHECK(w(1) == 0.0);
    CHECK(w.allFinite());
}

TEST_CASE("negative activations are clamped for gem and crow only") {
    RowMatrix x(1, 4);
    x << -1.0, 2.0, 0.0, 1.0;
    SpatialFeatureMap map(1, 2, 2, x);
    for (const char* m : {"gem", "crow"}) {
        const auto r = pool(map, parse_pooling_spec(m));
        CHECK(r.clamped_negative);
        CHECK(r.features.allFinite());
    }
    const auto a = pool(map, parse_pooling_spec("gap"));
    CHECK_FALSE(a.clamped_negative);
    CHECK(a.features(0) == 0.5);

    RowMatrix clipped = x.cwiseMax(0.0);
    CHECK(run(map, "gem")(0) == run(SpatialFeatureMap(1, 2, 2, clipped), "gem")(0));
}

TEST_CASE("pooling commutes with channel permutation") {
    std::mt19937_64 gen(5);
    const auto map = random_map(gen, 6, 3, 3);
    std::vector<Eigen::Index> perm{3, 0, 5, 1, 4, 2};
    RowMatrix px(6, 9);
    for (Eigen::Index k = 0; k < 6; ++k) px.row(k) = map.values().row(perm[k]);
    SpatialFeatureMap permuted(6, 3, 3, px);
    for (const char* m : {"gap", "gmp", "gem", "crow"}) {
        const Vector a = run(map, m);
        const Vector b = run(permuted, m);
        for (Eigen::Index k = 0; k < 6; ++k) CHECK(b(k) == doctest::Approx(a(perm[k])).epsilon(1e-13));
    }
}

TEST_CASE("1x1 maps return the raw channel values") {
    RowMatrix x(3, 1);
    x << 0.25, -4.0, 7.0;
    SpatialFeatureMap map(3, 1, 1, x);
    for (const char* m : {"gap", "gmp", "gem", "crow"}) {
        const auto r = pool(map, parse_pooling_spec(m));
        CHECK(r.features == x.col(0));
        CHECK_FALSE(r.clamped_negative);
    }
}

TEST_CASE("concat preserves order") {
    RowMatrix x(2, 2);
    x << 1.0, 3.0, 2.0, 6.0;
    SpatialFeatureMap map(2, 1, 2, x);
    for (const char* text : {"gap+gmp", "gap,gmp", "concat:gap,gmp"}) {
        const auto spec = parse_pooling_spec(text);
        CHECK(spec.method == PoolMethod::Concat);
        CHECK(to_string(spec) == "gap+gmp");
        const Vector v = pool(map, spec).features;
        REQUIRE(v.size() == 4);
        CHECK(v(0) == 2.0);
        CHECK(v(1) == 4.0);
        CHECK(v(2) == 3.0);
        CHECK(v(3) == 6.0);
    }
    CHECK(parse_pooling_spec("gmp+gap").output_size(5) == 10);
}

TEST_CASE("pooling spec errors") {
    CHECK_THROWS_AS(parse_pooling_spec("median"), Error);
    CHECK_THROWS_AS(parse_pooling_spec("gem", 0.0), Error);
    CHECK_THROWS_AS(parse_pooling_spec("gem", -1.0), Error);
    CHECK_THROWS_AS(parse_pooling_spec("gap+"), Error);
    CHECK_THROWS_AS(parse_pooling_spec(""), Error);
}

TEST_CASE("pool_dataset stacks rows and keeps labels") {
    std::mt19937_64 gen(6);
    SpatialDataset ds;
    ds.layer_name = "block3";
    for (int i = 0; i < 5; ++i) ds.maps.push_back(random_map(gen, 4, 2, 3, -1.0, 1.0));
    ds.labels = Labels{0, 1, 1, 0, 2};
    bool clamped = false;
    const auto out = pool_dataset(ds, parse_pooling_spec("gem+gap"), &clamped);
    CHECK(clamped);
    CHECK(out.features.rows() == 5);
    CHECK(out.features.dim() == 8);
    CHECK(out.features.layer_name() == "block3");
    CHECK(out.labels == ds.labels);
    const Vector row2 = pool(ds.maps[2], parse_pooling_spec("gem+gap")).features;
    CHECK(out.features.values().row(2).transpose() == row2);

    ds.maps.push_back(random_map(gen, 4, 3, 3));
    ds.labels->push_back(0);
    CHECK_THROWS_AS(pool_dataset(ds, parse_pooling_spec("gap")), Error);
}
