#include "oodkit/random.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace oodkit {

Rng::Rng(std::initializer_list<std::uint64_t> seed_words) {
    std::vector<std::uint32_t> words;
    for (auto w : seed_words) {
        words.push_back(static_cast<std::uint32_t>(w & 0xffffffffu));
        words.push_back(static_cast<std::uint32_t>(w >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    engine_.seed(seq);
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) fail_validation("Rng::below needs n > 0");
    // rejection keeps the result unbiased
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 == 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

RowMatrix Rng::normal_matrix(Eigen::Index rows, Eigen::Index cols) {
    RowMatrix out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = normal();
    }
    return out;
}

}  // namespace oodkit
