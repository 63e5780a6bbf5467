#pragma once

#include <string>

#include "hyperscore/common.hpp"

// Dense kernels used by the hypernet head, the per-query scoring network and
// the losses, together with their vector-Jacobian products. Everything here
// is a pure function of its arguments; Eigen does the arithmetic, this layer
// adds shape checking and the exact backward formulas.

namespace hyperscore::linalg {

namespace detail {

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw ShapeError(msg);
}

}  // namespace detail

template <class Scalar>
Mat<Scalar> matmul(const Mat<Scalar>& a, const Mat<Scalar>& b) {
    detail::require(a.cols() == b.rows(),
                    "matmul: incompatible shapes " + shape_str(a) + " * " + shape_str(b));
    return a * b;
}

/// Row-wise softmax with per-row max subtraction.
template <class Scalar>
Mat<Scalar> softmax_rows(const Mat<Scalar>& m) {
    detail::require(m.rows() > 0 && m.cols() > 0,
                    "softmax_rows: empty input " + shape_str(m));
    Mat<Scalar> out(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Scalar mx = m.row(i).maxCoeff();
        out.row(i) = (m.row(i).array() - mx).exp();
        out.row(i) /= out.row(i).sum();
    }
    return out;
}

/// (v - mean) / sqrt(popvar + eps), population variance (divide by length).
template <class Scalar>
Vec<Scalar> layer_norm(const Vec<Scalar>& v, Scalar eps) {
    detail::require(v.size() >= 1, "layer_norm: empty input");
    Scalar mean = v.mean();
    Vec<Scalar> centered = v.array() - mean;
    Scalar var = centered.squaredNorm() / Scalar(v.size());
    return centered / std::sqrt(var + eps);
}

/// layer_norm applied to each row independently.
template <class Scalar>
Mat<Scalar> layer_norm_rows(const Mat<Scalar>& m, Scalar eps) {
    detail::require(m.rows() > 0 && m.cols() > 0,
                    "layer_norm_rows: empty input " + shape_str(m));
    Mat<Scalar> out(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Scalar mean = m.row(i).mean();
        auto centered = (m.row(i).array() - mean).eval();
        Scalar var = centered.matrix().squaredNorm() / Scalar(m.cols());
        out.row(i) = centered / std::sqrt(var + eps);
    }
    return out;
}

template <class Derived>
auto relu(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    return m.cwiseMax(Scalar(0)).eval();
}

// ---------------------------------------------------------------------------
// Vector-Jacobian products. Each takes the forward inputs it needs plus the
// upstream gradient and returns the exact reverse-mode gradient.
// ---------------------------------------------------------------------------

/// d(a*b)/da contracted with upstream: upstream * b^T.
template <class Scalar>
Mat<Scalar> matmul_vjp_a(const Mat<Scalar>& b, const Mat<Scalar>& upstream) {
    detail::require(upstream.cols() == b.cols(),
                    "matmul_vjp_a: upstream " + shape_str(upstream) + " vs b " + shape_str(b));
    return upstream * b.transpose();
}

/// d(a*b)/db contracted with upstream: a^T * upstream.
template <class Scalar>
Mat<Scalar> matmul_vjp_b(const Mat<Scalar>& a, const Mat<Scalar>& upstream) {
    detail::require(upstream.rows() == a.rows(),
                    "matmul_vjp_b: upstream " + shape_str(upstream) + " vs a " + shape_str(a));
    return a.transpose() * upstream;
}

/// Backward through softmax_rows given its output y: y .* (up - rowsum(up .* y)).
template <class Scalar>
Mat<Scalar> softmax_rows_vjp(const Mat<Scalar>& softmax_out, const Mat<Scalar>& upstream) {
    detail::require(softmax_out.rows() == upstream.rows() && softmax_out.cols() == upstream.cols(),
                    "softmax_rows_vjp: mismatched shapes " + shape_str(softmax_out) + " vs " +
                        shape_str(upstream));
    Mat<Scalar> out(upstream.rows(), upstream.cols());
    for (Eigen::Index i = 0; i < upstream.rows(); ++i) {
        Scalar dot = upstream.row(i).dot(softmax_out.row(i));
        out.row(i) = softmax_out.row(i).array() * (upstream.row(i).array() - dot);
    }
    return out;
}

/// Backward through layer_norm at input v.
template <class Scalar>
Vec<Scalar> layer_norm_vjp(const Vec<Scalar>& v, Scalar eps, const Vec<Scalar>& upstream) {
    detail::require(v.size() == upstream.size(),
                    "layer_norm_vjp: mismatched sizes " + shape_str(v) + " vs " + shape_str(upstream));
    const Scalar n = Scalar(v.size());
    Scalar mean = v.mean();
    Vec<Scalar> centered = v.array() - mean;
    Scalar var = centered.squaredNorm() / n;
    Scalar denom = std::sqrt(var + eps);
    Vec<Scalar> y = centered / denom;
    Scalar up_mean = upstream.mean();
    Scalar up_dot_y = upstream.dot(y);
    return (upstream.array() - up_mean - y.array() * (up_dot_y / n)) / denom;
}

template <class Scalar>
Mat<Scalar> layer_norm_rows_vjp(const Mat<Scalar>& m, Scalar eps, const Mat<Scalar>& upstream) {
    detail::require(m.rows() == upstream.rows() && m.cols() == upstream.cols(),
                    "layer_norm_rows_vjp: mismatched shapes " + shape_str(m) + " vs " +
                        shape_str(upstream));
    Mat<Scalar> out(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Vec<Scalar> vi = m.row(i).transpose();
        Vec<Scalar> ui = upstream.row(i).transpose();
        out.row(i) = layer_norm_vjp(vi, eps, ui).transpose();
    }
    return out;
}

/// Gate at the sign of the forward input (derivative 0 at exactly 0).
template <class Derived, class DerivedUp>
auto relu_vjp(const Eigen::MatrixBase<Derived>& input,
              const Eigen::MatrixBase<DerivedUp>& upstream) {
    using Scalar = typename Derived::Scalar;
    detail::require(input.rows() == upstream.rows() && input.cols() == upstream.cols(),
                    "relu_vjp: mismatched shapes " + shape_str(input) + " vs " + shape_str(upstream));
    return (input.array() > Scalar(0))
        .select(upstream, Eigen::MatrixBase<DerivedUp>::Zero(upstream.rows(), upstream.cols()))
        .eval();
}

}  // namespace hyperscore::linalg
