#pragma once

#include <functional>

#include "hyperscore/common.hpp"
#include "hyperscore/rng.hpp"

// Shared test utilities: seeded random tensors and central finite differences
// for gradient oracles.

namespace testutil {

inline hyperscore::MatD random_mat(hyperscore::Rng& rng, Eigen::Index rows, Eigen::Index cols,
                                   double scale = 1.0) {
    hyperscore::MatD m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.gaussian() * scale;
    return m;
}

inline hyperscore::VecD random_vec(hyperscore::Rng& rng, Eigen::Index size, double scale = 1.0) {
    hyperscore::VecD v(size);
    for (Eigen::Index i = 0; i < size; ++i) v[i] = rng.gaussian() * scale;
    return v;
}

/// Central finite differences of a scalar function over every element of x.
inline hyperscore::MatD fd_grad(const std::function<double(const hyperscore::MatD&)>& f,
                                hyperscore::MatD x, double delta = 1e-5) {
    hyperscore::MatD g(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
            const double saved = x(r, c);
            x(r, c) = saved + delta;
            const double up = f(x);
            x(r, c) = saved - delta;
            const double down = f(x);
            x(r, c) = saved;
            g(r, c) = (up - down) / (2 * delta);
        }
    }
    return g;
}

/// Worst elementwise error of `analytic` against `reference` under tolerance
/// max(abs_floor, rel * |reference|); returns the largest violation ratio
/// (<= 1 means pass).
inline double grad_violation(const hyperscore::MatD& analytic, const hyperscore::MatD& reference,
                             double rel, double abs_floor) {
    double worst = 0;
    for (Eigen::Index r = 0; r < analytic.rows(); ++r)
        for (Eigen::Index c = 0; c < analytic.cols(); ++c) {
            const double err = std::abs(analytic(r, c) - reference(r, c));
            const double tol = std::max(abs_floor, rel * std::abs(reference(r, c)));
            worst = std::max(worst, err / tol);
        }
    return worst;
}

}  // namespace testutil
