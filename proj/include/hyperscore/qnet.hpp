#pragma once

#include <vector>

#include "hyperscore/common.hpp"
#include "hyperscore/linalg.hpp"
#include "hyperscore/rng.hpp"

namespace hyperscore {

/// Per-query scoring network: a stack of square layers with residual
/// connections (except on the last layer) followed by a scalar projection.
template <class Scalar>
struct QNet {
    std::vector<Mat<Scalar>> hidden_weights;  // depth x (dim x dim)
    std::vector<Vec<Scalar>> hidden_biases;   // depth x dim
    Mat<Scalar> out_weight;                   // 1 x dim
    Scalar out_bias = Scalar(0);
    Scalar eps = Scalar(kLayerNormEps);

    int depth() const { return int(hidden_weights.size()); }
    Eigen::Index dim() const { return out_weight.cols(); }

    void validate() const {
        if (hidden_weights.empty()) throw ShapeError("qnet: needs at least one hidden layer");
        if (hidden_weights.size() != hidden_biases.size())
            throw ShapeError("qnet: weight/bias layer counts differ");
        Eigen::Index h = dim();
        for (size_t i = 0; i < hidden_weights.size(); ++i) {
            if (hidden_weights[i].rows() != h || hidden_weights[i].cols() != h)
                throw ShapeError("qnet: hidden weight " + std::to_string(i) + " is " +
                                 shape_str(hidden_weights[i]) + ", expected " + shape_str(h, h));
            if (hidden_biases[i].size() != h)
                throw ShapeError("qnet: hidden bias " + std::to_string(i) + " has length " +
                                 std::to_string(hidden_biases[i].size()));
        }
        if (out_weight.rows() != 1)
            throw ShapeError("qnet: output weight is " + shape_str(out_weight) + ", expected 1x" +
                             std::to_string(h));
    }
};

/// Applies the network to one document vector.
///
/// Layers 1..depth-1 are residual: x <- lnorm(relu(W x + b)) + x.
/// The last layer drops the residual, then the scalar projection is applied.
template <class Scalar>
Scalar score(const QNet<Scalar>& q, const Vec<Scalar>& doc) {
    if (doc.size() != q.dim())
        throw ShapeError("score: document has length " + std::to_string(doc.size()) +
                         ", network expects " + std::to_string(q.dim()));
    Vec<Scalar> x = doc;
    const int depth = q.depth();
    for (int i = 0; i < depth; ++i) {
        Vec<Scalar> z = q.hidden_weights[i] * x + q.hidden_biases[i];
        Vec<Scalar> activated = linalg::layer_norm<Scalar>(linalg::relu(z), q.eps);
        if (i + 1 < depth)
            x += activated;
        else
            x = activated;
    }
    return q.out_weight.row(0).dot(x) + q.out_bias;
}

/// One score per row of `docs`. Each row goes through the exact same code
/// path as score(), so batch and scalar results are bit-identical.
template <class Scalar>
Vec<Scalar> score_batch(const QNet<Scalar>& q, const Mat<Scalar>& docs) {
    if (docs.cols() != q.dim())
        throw ShapeError("score_batch: documents are " + shape_str(docs) + ", network expects dim " +
                         std::to_string(q.dim()));
    Vec<Scalar> out(docs.rows());
    Vec<Scalar> row(docs.cols());
    for (Eigen::Index i = 0; i < docs.rows(); ++i) {
        row = docs.row(i).transpose();
        out[i] = score(q, row);
    }
    return out;
}

/// Gaussian-initialized network, for benchmarks and search tests.
template <class Scalar>
QNet<Scalar> random_qnet(int dim, int depth, std::uint64_t seed) {
    if (dim < 1 || depth < 1) throw ConfigError("random_qnet: dim and depth must be >= 1");
    Rng rng(seed);
    QNet<Scalar> q;
    Scalar scale = Scalar(1) / std::sqrt(Scalar(dim));
    for (int i = 0; i < depth; ++i) {
        Mat<Scalar> w(dim, dim);
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = Scalar(rng.gaussian()) * scale;
        Vec<Scalar> b(dim);
        for (Eigen::Index r = 0; r < b.size(); ++r) b[r] = Scalar(rng.gaussian()) * Scalar(0.1);
        q.hidden_weights.push_back(std::move(w));
        q.hidden_biases.push_back(std::move(b));
    }
    q.out_weight.resize(1, dim);
    for (Eigen::Index c = 0; c < dim; ++c) q.out_weight(0, c) = Scalar(rng.gaussian()) * scale;
    q.out_bias = Scalar(rng.gaussian()) * Scalar(0.1);
    return q;
}

template <class To, class From>
QNet<To> cast_qnet(const QNet<From>& q) {
    QNet<To> out;
    for (const auto& w : q.hidden_weights) out.hidden_weights.push_back(w.template cast<To>());
    for (const auto& b : q.hidden_biases) out.hidden_biases.push_back(b.template cast<To>());
    out.out_weight = q.out_weight.template cast<To>();
    out.out_bias = To(q.out_bias);
    out.eps = To(q.eps);
    return out;
}

}  // namespace hyperscore
