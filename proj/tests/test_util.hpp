#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include "oodkit/types.hpp"
#include "oracles.hpp"

namespace testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("oodkit_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline oodkit::RowMatrix uniform_matrix(std::mt19937_64& gen, Eigen::Index rows, Eigen::Index cols, double lo = -1.0,
                                        double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    oodkit::RowMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(gen);
    }
    return m;
}

inline oracle::Points to_points(const oodkit::RowMatrix& m) {
    oracle::Points out;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out.emplace_back(m.row(i).data(), m.row(i).data() + m.cols());
    }
    return out;
}

inline oracle::Point to_point(const Eigen::RowVectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace testing
