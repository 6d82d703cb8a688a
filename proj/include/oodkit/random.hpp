#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "oodkit/types.hpp"

namespace oodkit {

/// std::mt19937_64 seeded through std::seed_seq. Uniforms use the top 53
/// bits, normals the Box-Muller transform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : Rng({seed}) {}
    Rng(std::initializer_list<std::uint64_t> seed_words);

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform on [0, 1).
    double uniform();
    /// Uniform on [0, n). Requires n > 0.
    std::uint64_t below(std::uint64_t n);
    double normal();

    /// rows x cols matrix of independent standard normals, filled row by row.
    RowMatrix normal_matrix(Eigen::Index rows, Eigen::Index cols);

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace oodkit
