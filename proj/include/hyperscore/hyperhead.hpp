#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hyperscore/common.hpp"
#include "hyperscore/linalg.hpp"
#include "hyperscore/qnet.hpp"
#include "hyperscore/rng.hpp"

// The hypernet head: turns the contextualized query token matrix (n x h) into
// the weights and biases of the per-query scoring network. Each generated
// tensor comes from its own attention block: keys/values are projected from
// the token embeddings (with an appended ones column so a bias is folded into
// the projection), a set of learnable attention queries reads them, and a
// shared per-row feed-forward plus a base tensor produces the final weights.

namespace hyperscore {

/// Parameters generating one tensor (either a weight matrix or a bias row).
/// `r` below is the row count of the generated tensor: h for hidden weights,
/// 1 for every bias and for the final projection.
template <class Scalar>
struct HyperheadPath {
    Mat<Scalar> key_proj;    // (h+1) x h
    Mat<Scalar> value_proj;  // (h+1) x h
    Mat<Scalar> attn_query;  // r x h, learnable attention queries
    Mat<Scalar> ff_weight;   // h x h, shared across rows
    Vec<Scalar> ff_bias;     // h
    Mat<Scalar> base;        // r x h, query-independent base tensor

    Eigen::Index out_rows() const { return base.rows(); }
    Eigen::Index dim() const { return base.cols(); }
};

/// One q-net layer worth of generation parameters: a weight path and a bias
/// path with identical structure (the bias path always has r = 1).
template <class Scalar>
struct HyperheadLayer {
    HyperheadPath<Scalar> weight;
    HyperheadPath<Scalar> bias;
};

/// qnet_layers + 1 records: one per hidden layer plus the final projection.
template <class Scalar>
struct HyperheadParams {
    int dim = 0;
    std::vector<HyperheadLayer<Scalar>> layers;

    int qnet_layers() const { return int(layers.size()) - 1; }
};

namespace detail {

template <class Scalar>
void check_path(const HyperheadPath<Scalar>& p, Eigen::Index h, Eigen::Index r,
                const std::string& where) {
    auto fail = [&](const std::string& field, const Mat<Scalar>& m, Eigen::Index er,
                    Eigen::Index ec) {
        throw ShapeError(where + "." + field + " is " + shape_str(m) + ", expected " +
                         shape_str(er, ec));
    };
    if (p.key_proj.rows() != h + 1 || p.key_proj.cols() != h)
        fail("key_proj", p.key_proj, h + 1, h);
    if (p.value_proj.rows() != h + 1 || p.value_proj.cols() != h)
        fail("value_proj", p.value_proj, h + 1, h);
    if (p.attn_query.rows() != r || p.attn_query.cols() != h)
        fail("attn_query", p.attn_query, r, h);
    if (p.ff_weight.rows() != h || p.ff_weight.cols() != h) fail("ff_weight", p.ff_weight, h, h);
    if (p.ff_bias.size() != h)
        throw ShapeError(where + ".ff_bias has length " + std::to_string(p.ff_bias.size()) +
                         ", expected " + std::to_string(h));
    if (p.base.rows() != r || p.base.cols() != h) fail("base", p.base, r, h);
}

}  // namespace detail

template <class Scalar>
void validate(const HyperheadParams<Scalar>& params) {
    if (params.dim < 1) throw ShapeError("hyperhead: dim must be >= 1");
    if (params.layers.size() < 2)
        throw ShapeError("hyperhead: needs at least one hidden layer plus the projection");
    const Eigen::Index h = params.dim;
    for (size_t i = 0; i < params.layers.size(); ++i) {
        const bool final_projection = (i + 1 == params.layers.size());
        const std::string where = "layer " + std::to_string(i);
        detail::check_path(params.layers[i].weight, h, final_projection ? 1 : h, where + ".weight");
        detail::check_path(params.layers[i].bias, h, 1, where + ".bias");
    }
}

/// K = [E_q; 1] * key_proj, V = [E_q; 1] * value_proj, both n x h.
template <class Scalar>
std::pair<Mat<Scalar>, Mat<Scalar>> make_keys_values(const Mat<Scalar>& query_embeddings,
                                                     const HyperheadPath<Scalar>& path) {
    const Eigen::Index n = query_embeddings.rows();
    const Eigen::Index h = query_embeddings.cols();
    if (n < 1) throw ShapeError("make_keys_values: query has no token embeddings");
    if (path.key_proj.rows() != h + 1)
        throw ShapeError("make_keys_values: embeddings are " + shape_str(query_embeddings) +
                         " but key projection is " + shape_str(path.key_proj));
    Mat<Scalar> augmented(n, h + 1);
    augmented.leftCols(h) = query_embeddings;
    augmented.col(h).setOnes();
    return {linalg::matmul(augmented, path.key_proj), linalg::matmul(augmented, path.value_proj)};
}

/// Single-head scaled-dot-product attention: softmax(q k^T / sqrt(d)) v.
template <class Scalar>
Mat<Scalar> attend(const Mat<Scalar>& queries, const Mat<Scalar>& keys, const Mat<Scalar>& values,
                   Eigen::Index scale_dim) {
    if (queries.cols() != keys.cols())
        throw ShapeError("attend: queries " + shape_str(queries) + " vs keys " + shape_str(keys));
    if (keys.rows() != values.rows())
        throw ShapeError("attend: keys " + shape_str(keys) + " vs values " + shape_str(values));
    Mat<Scalar> logits = queries * keys.transpose() / std::sqrt(Scalar(scale_dim));
    return linalg::matmul(linalg::softmax_rows(logits), values);
}

/// Runs one generation path end to end, returning the r x h tensor:
/// attn -> relu -> lnorm -> per-row affine -> plus base.
template <class Scalar>
Mat<Scalar> build_layer_tensor(const Mat<Scalar>& query_embeddings,
                               const HyperheadPath<Scalar>& path, Scalar eps) {
    auto [keys, values] = make_keys_values(query_embeddings, path);
    Mat<Scalar> attended = attend(path.attn_query, keys, values, path.dim());
    Mat<Scalar> normalized = linalg::layer_norm_rows(linalg::relu(attended), eps);
    Mat<Scalar> transformed = normalized * path.ff_weight.transpose();
    transformed.rowwise() += path.ff_bias.transpose();
    return transformed + path.base;
}

/// Materializes the full scoring network for one query.
template <class Scalar>
QNet<Scalar> build_qnet(const Mat<Scalar>& query_embeddings, const HyperheadParams<Scalar>& params,
                        Scalar eps = Scalar(kLayerNormEps)) {
    validate(params);
    if (query_embeddings.cols() != params.dim)
        throw ShapeError("build_qnet: embeddings are " + shape_str(query_embeddings) +
                         " but head dim is " + std::to_string(params.dim));
    QNet<Scalar> q;
    q.eps = eps;
    const int hidden = params.qnet_layers();
    for (int i = 0; i < hidden; ++i) {
        q.hidden_weights.push_back(build_layer_tensor(query_embeddings, params.layers[i].weight, eps));
        Mat<Scalar> bias_row = build_layer_tensor(query_embeddings, params.layers[i].bias, eps);
        q.hidden_biases.push_back(bias_row.row(0).transpose());
    }
    const auto& projection = params.layers[hidden];
    q.out_weight = build_layer_tensor(query_embeddings, projection.weight, eps);
    Mat<Scalar> out_bias_row = build_layer_tensor(query_embeddings, projection.bias, eps);
    q.out_bias = out_bias_row(0, 0);
    return q;
}

// ---------------------------------------------------------------------------
// Initialization and parameter iteration.
// ---------------------------------------------------------------------------

namespace detail {

template <class Scalar>
void fill_gaussian(Mat<Scalar>& m, Rng& rng, double sigma) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = Scalar(rng.gaussian() * sigma);
}

template <class Scalar>
void fill_uniform_fan_in(Mat<Scalar>& m, Rng& rng, Eigen::Index fan_in) {
    double bound = 1.0 / std::sqrt(double(fan_in));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            m(r, c) = Scalar((rng.uniform() * 2.0 - 1.0) * bound);
}

template <class Scalar>
HyperheadPath<Scalar> init_path(Eigen::Index h, Eigen::Index r, Rng& rng) {
    // key/value/attention-query/ff tensors start small so the generated
    // tensors begin near the base, but nonzero: with a zero value path no
    // gradient can reach value_proj or ff_weight at all (the relu sits at
    // exactly zero), which would freeze the head as query-independent.
    constexpr double sigma = 0.02;
    HyperheadPath<Scalar> p;
    p.key_proj.resize(h + 1, h);
    fill_gaussian(p.key_proj, rng, sigma);
    p.value_proj.resize(h + 1, h);
    fill_gaussian(p.value_proj, rng, sigma);
    p.attn_query.resize(r, h);
    fill_gaussian(p.attn_query, rng, sigma);
    p.ff_weight.resize(h, h);
    fill_gaussian(p.ff_weight, rng, sigma);
    p.ff_bias = Vec<Scalar>::Zero(h);
    p.base.resize(r, h);
    fill_uniform_fan_in(p.base, rng, h);
    return p;
}

}  // namespace detail

template <class Scalar>
HyperheadParams<Scalar> init_hyperhead(int dim, int qnet_layers, std::uint64_t seed) {
    if (dim < 1 || qnet_layers < 1)
        throw ConfigError("init_hyperhead: dim and qnet_layers must be >= 1");
    Rng rng(seed);
    HyperheadParams<Scalar> params;
    params.dim = dim;
    for (int i = 0; i < qnet_layers + 1; ++i) {
        const bool final_projection = (i == qnet_layers);
        HyperheadLayer<Scalar> layer;
        layer.weight = detail::init_path<Scalar>(dim, final_projection ? 1 : dim, rng);
        layer.bias = detail::init_path<Scalar>(dim, 1, rng);
        params.layers.push_back(std::move(layer));
    }
    return params;
}

/// Calls fn(name, tensor&) for every learnable tensor, in a fixed order.
/// `tensor` is Mat<Scalar>& or Vec<Scalar>&; callers dispatch with if-constexpr
/// when the distinction matters (serialization ranks, for instance).
template <class Scalar, class Fn>
void visit_tensors(HyperheadParams<Scalar>& params, Fn&& fn) {
    for (size_t i = 0; i < params.layers.size(); ++i) {
        for (auto [path, tag] : {std::pair{&params.layers[i].weight, "weight"},
                                 std::pair{&params.layers[i].bias, "bias"}}) {
            std::string prefix = "layers." + std::to_string(i) + "." + tag + ".";
            fn(prefix + "key_proj", path->key_proj);
            fn(prefix + "value_proj", path->value_proj);
            fn(prefix + "attn_query", path->attn_query);
            fn(prefix + "ff_weight", path->ff_weight);
            fn(prefix + "ff_bias", path->ff_bias);
            fn(prefix + "base", path->base);
        }
    }
}

template <class Scalar, class Fn>
void visit_tensors(const HyperheadParams<Scalar>& params, Fn&& fn) {
    visit_tensors(const_cast<HyperheadParams<Scalar>&>(params),
                  [&fn](const std::string& name, const auto& tensor) { fn(name, tensor); });
}

/// Structural copy with every tensor zeroed; gradient accumulators start here.
template <class Scalar>
HyperheadParams<Scalar> zeros_like(const HyperheadParams<Scalar>& params) {
    HyperheadParams<Scalar> z = params;
    visit_tensors(z, [](const std::string&, auto& tensor) { tensor.setZero(); });
    return z;
}

}  // namespace hyperscore
