// Shared test utilities: temp directories, random batch builders, and the
// finite-difference machinery used to check every analytic gradient.
#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "crosshash/matrix.hpp"
#include "crosshash/network.hpp"
#include "crosshash/objective.hpp"
#include "crosshash/rng.hpp"
#include "crosshash/types.hpp"

namespace testutil {

inline std::filesystem::path temp_dir(const std::string& tag) {
    const auto dir = std::filesystem::temp_directory_path() / "crosshash_tests" / tag;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline crosshash::Matrix random_matrix(crosshash::Rng& rng, std::size_t rows, std::size_t cols,
                                       double lo = -1.0, double hi = 1.0) {
    crosshash::Matrix m(rows, cols);
    for (double& v : m.data) v = rng.uniform(lo, hi);
    return m;
}

// Random final-layer pre-activations whose tanh images stay clear of zero,
// where the quantization loss curvature would wreck finite differences.
inline crosshash::Matrix random_pre_block(crosshash::Rng& rng, std::size_t rows, std::size_t cols) {
    crosshash::Matrix m(rows, cols);
    for (double& v : m.data) {
        v = rng.uniform(-1.5, 1.5);
        if (std::abs(v) < 0.05) v = v >= 0.0 ? v + 0.15 : v - 0.15;
    }
    return m;
}

struct FdProblem {
    crosshash::BlockSet pre;
    std::vector<crosshash::IndexPair> pairs;

    crosshash::BatchActivations activations() const {
        crosshash::BatchActivations acts;
        acts.zx = crosshash::tanh_elementwise(pre.zx);
        acts.zy = crosshash::tanh_elementwise(pre.zy);
        acts.zq = crosshash::tanh_elementwise(pre.zq);
        acts.zd = crosshash::tanh_elementwise(pre.zd);
        acts.pairs = pairs;
        return acts;
    }
};

inline FdProblem make_fd_problem(crosshash::Rng& rng, std::size_t nx, std::size_t ny,
                                 std::size_t nq, std::size_t nd, std::size_t bits) {
    FdProblem p;
    p.pre.zx = random_pre_block(rng, nx, bits);
    p.pre.zy = random_pre_block(rng, ny, bits);
    p.pre.zq = random_pre_block(rng, nq, bits);
    p.pre.zd = random_pre_block(rng, nd, bits);
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < ny; ++j)
            p.pairs.push_back({i, j, rng.uniform() < 0.4 ? 1 : 0});
    return p;
}

// |a - b| <= max(floor, tol * max(|a|, |b|))
inline bool close_rel(double a, double b, double tol, double floor_abs) {
    const double diff = std::abs(a - b);
    const double scale = std::max(std::abs(a), std::abs(b));
    return diff <= std::max(floor_abs, tol * scale);
}

inline double central_difference(const std::function<double(double)>& f, double x0, double h) {
    return (f(x0 + h) - f(x0 - h)) / (2.0 * h);
}

}  // namespace testutil
