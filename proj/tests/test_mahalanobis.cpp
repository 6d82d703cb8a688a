#include <doctest.h>

#include <random>

#include "oodkit/mahalanobis.hpp"
#include "oodkit/random.hpp"
#include "test_util.hpp"

using namespace oodkit;

namespace {

struct Problem {
    RowMatrix x;
    Labels labels;
};

Problem random_problem(std::mt19937_64& gen, Eigen::Index d, int classes, Eigen::Index per_class) {
    Problem p;
    p.x.resize(classes * per_class, d);
    std::normal_distribution<double> n01;
    for (int c = 0; c < classes; ++c) {
        const RowMatrix mix = testing::uniform_matrix(gen, d, d);
        const Eigen::RowVectorXd mu = testing::uniform_matrix(gen, 1, d, -3.0, 3.0).row(0);
        for (Eigen::Index i = 0; i < per_class; ++i) {
            Eigen::RowVectorXd z(d);
            for (auto& v : z) v = n01(gen);
            p.x.row(c * per_class + i) = z * mix + mu;
            p.labels.push_back(c);
        }
    }
    return p;
}

LabeledDataset dataset(const Problem& p) { return {FeatureMatrix(p.x), p.labels, std::nullopt}; }

std::vector<long> to_long(const Labels& l) { return {l.begin(), l.end()}; }

}  // namespace

TEST_CASE("pooled covariance example") {
    RowMatrix x(4, 2);
    x << 0, 0, 2, 0, 0, 2, 0, 4;
    const auto model = fit_mahalanobis(LabeledDataset{FeatureMatrix(x), Labels{0, 0, 1, 1}, std::nullopt}, 0.0);
    CHECK(model.means()(0, 0) == 1.0);
    CHECK(model.means()(0, 1) == 0.0);
    CHECK(model.means()(1, 0) == 0.0);
    CHECK(model.means()(1, 1) == 3.0);
    const auto& cov = model.components().at(0).covariance;
    CHECK(cov(0, 0) == 0.5);
    CHECK(cov(1, 1) == 0.5);
    CHECK(cov(0, 1) == 0.0);
    CHECK(cov(1, 0) == 0.0);
    CHECK(model.components().at(0).epsilon == 0.0);
}

TEST_CASE("covariance of standard normal samples approaches identity") {
    Rng rng(1);
    const RowMatrix x = rng.normal_matrix(10000, 4);
    const auto model = fit_mahalanobis(LabeledDataset{FeatureMatrix(x), Labels(10000, 0), std::nullopt});
    const auto& cov = model.components().at(0).covariance;
    CHECK((cov - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 0.1);
}

TEST_CASE("degenerate data fails after escalation") {
    RowMatrix x = RowMatrix::Constant(6, 3, 1.5);
    LabeledDataset ds{FeatureMatrix(x), Labels{0, 0, 0, 1, 1, 1}, std::nullopt};
    try {
        fit_mahalanobis(ds, 0.0);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Numeric);
    }
    CHECK_THROWS_AS(fit_mahalanobis(ds), Error);
}

TEST_CASE("rank-deficient covariance is rescued by the ridge") {
    std::mt19937_64 gen(2);
    // 3 samples per class in 10 dimensions
    const auto p = random_problem(gen, 10, 2, 3);
    const auto model = MahalanobisModel::fit(dataset(p), {CovarianceMode::Tied, 0.0});
    const double eps = model.components()[0].epsilon;
    const double scale = model.components()[0].covariance.trace() / 10.0;
    CHECK(eps > 0.0);
    CHECK(eps <= kMaxRidgeFactor * scale * (1 + 1e-12));
    CHECK(model.score_rows(p.x).allFinite());
}

TEST_CASE("class mean scores zero and known distances") {
    std::mt19937_64 gen(3);
    const auto p = random_problem(gen, 3, 3, 20);
    const auto model = MahalanobisModel::fit(dataset(p), {CovarianceMode::Tied, 0.0});
    for (Eigen::Index c = 0; c < 3; ++c) {
        CHECK(model.score(model.means().row(c)) == doctest::Approx(0.0));
        CHECK(model.score(model.means().row(c)) <= 0.0);
    }

    const auto identity = MahalanobisModel::from_parameters(CovarianceMode::Tied, {0}, Eigen::MatrixXd::Zero(1, 2),
                                                            {Eigen::MatrixXd::Identity(2, 2)}, {0.0});
    CHECK(score_mahalanobis(identity, Eigen::RowVector2d(3, 4)) == doctest::Approx(-25.0).epsilon(1e-15));
}

TEST_CASE("scores match the dense quadratic form") {
    std::mt19937_64 gen(4);
    for (Eigen::Index d = 2; d <= 8; ++d) {
        const auto p = random_problem(gen, d, 2, 30);
        const double eps = 0.01;
        const auto model = MahalanobisModel::fit(dataset(p), {CovarianceMode::Tied, eps});
        const oracle::NaiveMahalanobis naive(testing::to_points(p.x), to_long(p.labels), eps);
        const RowMatrix q = testing::uniform_matrix(gen, 50, d, -5.0, 5.0);
        const Vector s = model.score_rows(q);
        for (Eigen::Index i = 0; i < 50; ++i) {
            CHECK(testing::rel_err(s(i), naive.confidence(testing::to_point(q.row(i)))) <= 1e-10);
            CHECK(s(i) == model.score(q.row(i)));
        }
        for (Eigen::Index a = 0; a < d; ++a) {
            for (Eigen::Index b = 0; b < d; ++b) {
                CHECK(model.components()[0].covariance(a, b) == doctest::Approx(naive.covariance[a][b]).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("affine invariance without ridge") {
    std::mt19937_64 gen(5);
    for (Eigen::Index d = 2; d <= 8; ++d) {
        const auto p = random_problem(gen, d, 3, 25);
        const RowMatrix q = testing::uniform_matrix(gen, 20, d, -4.0, 4.0);
        Eigen::MatrixXd a = testing::uniform_matrix(gen, d, d);
        a.diagonal().array() += 2.0;
        const Eigen::RowVectorXd b = testing::uniform_matrix(gen, 1, d, -10.0, 10.0).row(0);

        Problem moved{(p.x * a).rowwise() + b, p.labels};
        const RowMatrix mq = (q * a).rowwise() + b;
        const auto m1 = MahalanobisModel::fit(dataset(p), {CovarianceMode::Tied, 0.0});
        const auto m2 = MahalanobisModel::fit(dataset(moved), {CovarianceMode::Tied, 0.0});
        const Vector s1 = m1.score_rows(q);
        const Vector s2 = m2.score_rows(mq);
        for (Eigen::Index i = 0; i < q.rows(); ++i) CHECK(testing::rel_err(s2(i), s1(i)) <= 1e-6);
        CHECK(m1.closest_class(q) == m2.closest_class(mq));
    }
}

TEST_CASE("closest class is invariant to a shift") {
    std::mt19937_64 gen(6);
    const auto p = random_problem(gen, 4, 3, 30);
    const RowMatrix q = testing::uniform_matrix(gen, 30, 4, -4.0, 4.0);
    const Eigen::RowVectorXd shift = Eigen::RowVectorXd::Constant(4, 123.0);
    const auto m1 = MahalanobisModel::fit(dataset(p));
    const auto m2 = MahalanobisModel::fit(dataset(Problem{p.x.rowwise() + shift, p.labels}));
    CHECK(m1.closest_class(q) == m2.closest_class(q.rowwise() + shift));
}

TEST_CASE("per-class covariance") {
    RowMatrix x(6, 1);
    x << -1, 0, 1, 8, 10, 12;
    const auto model = MahalanobisModel::fit(LabeledDataset{FeatureMatrix(x), Labels{0, 0, 0, 1, 1, 1}, std::nullopt},
                                             {CovarianceMode::PerClass, 0.0});
    REQUIRE(model.components().size() == 2);
    CHECK(model.components()[0].covariance(0, 0) == doctest::Approx(2.0 / 3.0));
    CHECK(model.components()[1].covariance(0, 0) == doctest::Approx(8.0 / 3.0));
    // 4 is 4/sqrt(2/3) sd from class 0 but 6/sqrt(8/3) sd from class 1
    const Eigen::MatrixXd d = model.class_distances(RowMatrix::Constant(1, 1, 4.0));
    CHECK(d(0, 0) == doctest::Approx(16.0 * 1.5));
    CHECK(d(0, 1) == doctest::Approx(36.0 * 3.0 / 8.0));
    CHECK(model.score(Eigen::RowVectorXd::Constant(1, 4.0)) == doctest::Approx(-13.5));
}

TEST_CASE("default ridge is scaled by the trace") {
    std::mt19937_64 gen(7);
    const auto p = random_problem(gen, 5, 2, 40);
    const auto model = fit_mahalanobis(dataset(p));
    const auto& c = model.components()[0];
    CHECK(c.epsilon == doctest::Approx(kDefaultRidgeFactor * c.covariance.trace() / 5.0).epsilon(1e-14));
}

TEST_CASE("errors") {
    RowMatrix x = RowMatrix::Random(5, 2);
    CHECK_THROWS_AS(fit_mahalanobis(LabeledDataset{FeatureMatrix(x), std::nullopt, std::nullopt}), Error);
    CHECK_THROWS_AS(fit_mahalanobis(LabeledDataset{FeatureMatrix(x), Labels{0, 0, 0, 0, 1}, std::nullopt}), Error);
    CHECK_THROWS_AS(fit_mahalanobis(LabeledDataset{FeatureMatrix(x), Labels{0, 0, 1, 1, 1}, std::nullopt}, -1.0),
                    Error);
    const auto model = fit_mahalanobis(LabeledDataset{FeatureMatrix(x), Labels{0, 0, 1, 1, 1}, std::nullopt});
    CHECK_THROWS_AS(model.score(Eigen::RowVector3d(0, 0, 0)), Error);
    CHECK_THROWS_AS(parse_covariance_mode("diag"), Error);
}
