#include "hyperscore/trainer.hpp"

#include <cmath>

#include "hyperscore/losses.hpp"
#include "hyperscore/qnet.hpp"
#include "hyperscore/rng.hpp"
#include "hyperscore/tensor_io.hpp"

namespace hyperscore {

MatD ToyQueryEncoder::encode(const std::vector<int>& tokens) const {
    if (tokens.empty()) throw ShapeError("encode: query has no tokens");
    MatD eq(Eigen::Index(tokens.size()), embedding.cols());
    for (std::size_t r = 0; r < tokens.size(); ++r) {
        if (tokens[r] < 0 || tokens[r] >= vocab_size)
            throw ConfigError("encode: token " + std::to_string(tokens[r]) +
                              " outside vocab of size " + std::to_string(vocab_size));
        eq.row(Eigen::Index(r)) = embedding.row(tokens[r]);
    }
    return eq;
}

ToyModel init_toy_model(const TrainConfig& config) {
    if (config.dim < 1 || config.qnet_layers < 1 || config.vocab < 1)
        throw ConfigError("init_toy_model: dim, qnet_layers and vocab must be >= 1");
    Rng rng(config.seed);
    ToyModel model;
    model.eps = config.eps;
    model.encoder.vocab_size = config.vocab;
    model.encoder.dim = config.dim;
    model.encoder.embedding.resize(config.vocab, config.dim);
    for (Eigen::Index r = 0; r < model.encoder.embedding.rows(); ++r)
        for (Eigen::Index c = 0; c < model.encoder.embedding.cols(); ++c)
            model.encoder.embedding(r, c) = rng.gaussian();
    model.head = init_hyperhead<double>(config.dim, config.qnet_layers, rng.next());
    return model;
}

ModelGrads zero_grads(const ToyModel& model) {
    ModelGrads grads;
    grads.head = zeros_like(model.head);
    grads.embedding = MatD::Zero(model.encoder.embedding.rows(), model.encoder.embedding.cols());
    return grads;
}

namespace {

void validate_example(const TrainingExample& ex, const ToyModel& model, int position) {
    const std::string where = "example " + std::to_string(position);
    const Eigen::Index h = model.encoder.dim;
    if (ex.query_tokens.empty()) throw ShapeError(where + ": empty query");
    if (ex.positive.size() != h)
        throw ShapeError(where + ": positive has dim " + std::to_string(ex.positive.size()) +
                         ", model expects " + std::to_string(h));
    if (ex.negatives.empty()) throw ShapeError(where + ": no negatives");
    for (const auto& neg : ex.negatives)
        if (neg.size() != h) throw ShapeError(where + ": negative with wrong dim");
    if (ex.teacher_negs.size() != Eigen::Index(ex.negatives.size()))
        throw ShapeError(where + ": " + std::to_string(ex.teacher_negs.size()) +
                         " teacher scores for " + std::to_string(ex.negatives.size()) +
                         " negatives");
    if (!std::isfinite(ex.teacher_pos) || !all_finite(ex.teacher_negs))
        throw NumericError(where + ": non-finite teacher scores");
}

// Intermediate values of one build_layer_tensor call, kept for the backward.
struct PathCache {
    MatD aug;        // n x (h+1), embeddings with ones column
    MatD keys;       // n x h
    MatD values;     // n x h
    MatD attn;       // r x n, softmax output
    MatD pre_act;    // r x h, attn * values
    MatD activated;  // r x h, relu
    MatD normed;     // r x h, row layer norm
};

// Mirrors build_layer_tensor operation for operation so generated tensors
// match build_qnet bitwise.
MatD build_tensor_cached(const MatD& eq, const HyperheadPath<double>& p, double eps,
                         PathCache& c) {
    const Eigen::Index n = eq.rows();
    const Eigen::Index h = eq.cols();
    c.aug.resize(n, h + 1);
    c.aug.leftCols(h) = eq;
    c.aug.col(h).setOnes();
    c.keys = c.aug * p.key_proj;
    c.values = c.aug * p.value_proj;
    MatD logits = p.attn_query * c.keys.transpose() / std::sqrt(double(p.dim()));
    c.attn = linalg::softmax_rows(logits);
    c.pre_act = c.attn * c.values;
    c.activated = linalg::relu(c.pre_act);
    c.normed = linalg::layer_norm_rows(c.activated, eps);
    MatD transformed = c.normed * p.ff_weight.transpose();
    transformed.rowwise() += p.ff_bias.transpose();
    return transformed + p.base;
}

void path_backward(const HyperheadPath<double>& p, const PathCache& c, const MatD& d_tensor,
                   double eps, HyperheadPath<double>& g, MatD& d_eq) {
    const Eigen::Index h = d_eq.cols();
    g.base += d_tensor;
    g.ff_weight += d_tensor.transpose() * c.normed;
    g.ff_bias += d_tensor.colwise().sum().transpose();
    MatD d_normed = d_tensor * p.ff_weight;
    MatD d_activated = linalg::layer_norm_rows_vjp(c.activated, eps, d_normed);
    MatD d_pre = linalg::relu_vjp(c.pre_act, d_activated);
    MatD d_attn = linalg::matmul_vjp_a(c.values, d_pre);
    MatD d_values = linalg::matmul_vjp_b(c.attn, d_pre);
    MatD d_logits = linalg::softmax_rows_vjp(c.attn, d_attn);
    const double scale = 1.0 / std::sqrt(double(h));
    g.attn_query += d_logits * c.keys * scale;
    MatD d_keys = d_logits.transpose() * p.attn_query * scale;
    g.key_proj += c.aug.transpose() * d_keys;
    g.value_proj += c.aug.transpose() * d_values;
    MatD d_aug = d_keys * p.key_proj.transpose() + d_values * p.value_proj.transpose();
    d_eq += d_aug.leftCols(h);
}

struct ExampleForward {
    MatD eq;
    std::vector<PathCache> weight_paths;  // one per layer record
    std::vector<PathCache> bias_paths;
    QNet<double> qnet;
};

ExampleForward forward_example(const ToyModel& model, const TrainingExample& ex) {
    ExampleForward f;
    f.eq = model.encoder.encode(ex.query_tokens);
    const int hidden = model.head.qnet_layers();
    f.weight_paths.resize(hidden + 1);
    f.bias_paths.resize(hidden + 1);
    f.qnet.eps = model.eps;
    for (int i = 0; i < hidden; ++i) {
        f.qnet.hidden_weights.push_back(
            build_tensor_cached(f.eq, model.head.layers[i].weight, model.eps, f.weight_paths[i]));
        MatD bias_row =
            build_tensor_cached(f.eq, model.head.layers[i].bias, model.eps, f.bias_paths[i]);
        f.qnet.hidden_biases.push_back(bias_row.row(0).transpose());
    }
    f.qnet.out_weight = build_tensor_cached(f.eq, model.head.layers[hidden].weight, model.eps,
                                            f.weight_paths[hidden]);
    MatD out_bias_row =
        build_tensor_cached(f.eq, model.head.layers[hidden].bias, model.eps, f.bias_paths[hidden]);
    f.qnet.out_bias = out_bias_row(0, 0);
    return f;
}

// Per-document forward pass with everything the backward needs.
struct DocCache {
    std::vector<VecD> inputs;     // x entering layer i
    std::vector<VecD> pre_act;    // W x + b
    std::vector<VecD> activated;  // relu of pre_act (layer norm input)
    VecD final_x;
    double value = 0;
};

DocCache score_with_cache(const QNet<double>& q, const VecD& doc) {
    DocCache c;
    VecD x = doc;
    const int depth = q.depth();
    for (int i = 0; i < depth; ++i) {
        c.inputs.push_back(x);
        VecD z = q.hidden_weights[i] * x + q.hidden_biases[i];
        c.pre_act.push_back(z);
        c.activated.push_back(linalg::relu(z));
        VecD activated = linalg::layer_norm<double>(c.activated.back(), q.eps);
        if (i + 1 < depth)
            x += activated;
        else
            x = activated;
    }
    c.final_x = x;
    c.value = q.out_weight.row(0).dot(x) + q.out_bias;
    return c;
}

struct QNetGrads {
    std::vector<MatD> d_weights;
    std::vector<VecD> d_biases;
    MatD d_out_weight;
    double d_out_bias = 0;

    explicit QNetGrads(const QNet<double>& q) {
        const Eigen::Index h = q.dim();
        for (int i = 0; i < q.depth(); ++i) {
            d_weights.push_back(MatD::Zero(h, h));
            d_biases.push_back(VecD::Zero(h));
        }
        d_out_weight = MatD::Zero(1, h);
    }
};

void doc_backward(const QNet<double>& q, const DocCache& c, double ds, QNetGrads& g) {
    if (ds == 0) return;
    const int depth = q.depth();
    g.d_out_weight.row(0) += ds * c.final_x.transpose();
    g.d_out_bias += ds;
    VecD dx = ds * q.out_weight.row(0).transpose();
    for (int i = depth - 1; i >= 0; --i) {
        VecD d_activated = linalg::layer_norm_vjp(c.activated[i], q.eps, dx);
        VecD d_pre = linalg::relu_vjp(c.pre_act[i], d_activated);
        g.d_weights[i] += d_pre * c.inputs[i].transpose();
        g.d_biases[i] += d_pre;
        VecD dx_prev = q.hidden_weights[i].transpose() * d_pre;
        if (i + 1 < depth) dx_prev += dx;
        dx = std::move(dx_prev);
    }
}

void example_backward(const ToyModel& model, const TrainingExample& ex, const ExampleForward& f,
                      const QNetGrads& qg, ModelGrads& grads) {
    const int hidden = model.head.qnet_layers();
    const Eigen::Index n = f.eq.rows();
    const Eigen::Index h = f.eq.cols();
    MatD d_eq = MatD::Zero(n, h);
    for (int i = 0; i < hidden; ++i) {
        path_backward(model.head.layers[i].weight, f.weight_paths[i], qg.d_weights[i], model.eps,
                      grads.head.layers[i].weight, d_eq);
        MatD d_bias_row = qg.d_biases[i].transpose();
        path_backward(model.head.layers[i].bias, f.bias_paths[i], d_bias_row, model.eps,
                      grads.head.layers[i].bias, d_eq);
    }
    path_backward(model.head.layers[hidden].weight, f.weight_paths[hidden], qg.d_out_weight,
                  model.eps, grads.head.layers[hidden].weight, d_eq);
    MatD d_out_bias_row = MatD::Zero(1, h);
    d_out_bias_row(0, 0) = qg.d_out_bias;
    path_backward(model.head.layers[hidden].bias, f.bias_paths[hidden], d_out_bias_row, model.eps,
                  grads.head.layers[hidden].bias, d_eq);
    for (std::size_t r = 0; r < ex.query_tokens.size(); ++r)
        grads.embedding.row(ex.query_tokens[r]) += d_eq.row(Eigen::Index(r));
}

}  // namespace

double batch_loss(const ToyModel& model, const std::vector<TrainingExample>& batch,
                  const TrainConfig& config) {
    if (batch.empty()) throw ConfigError("batch_loss: empty batch");
    const int b = int(batch.size());
    for (int i = 0; i < b; ++i) validate_example(batch[i], model, i);
    const bool use_ce = config.ce_weight != 0 && b >= 2;

    std::vector<QNet<double>> qnets;
    qnets.reserve(b);
    for (const auto& ex : batch) qnets.push_back(build_qnet(model.encoder.encode(ex.query_tokens),
                                                            model.head, model.eps));
    double margin_total = 0;
    MatD ce_scores;
    if (use_ce) ce_scores.resize(b, b);
    for (int i = 0; i < b; ++i) {
        double s_pos = score(qnets[i], batch[i].positive);
        VecD s_negs(Eigen::Index(batch[i].negatives.size()));
        for (std::size_t j = 0; j < batch[i].negatives.size(); ++j)
            s_negs[Eigen::Index(j)] = score(qnets[i], batch[i].negatives[j]);
        margin_total += margin_mse(s_pos, s_negs, batch[i].teacher_pos, batch[i].teacher_negs);
        if (use_ce)
            for (int j = 0; j < b; ++j)
                ce_scores(i, j) = j == i ? s_pos : score(qnets[i], batch[j].positive);
    }
    double loss = config.margin_weight * margin_total / b;
    if (use_ce) loss += config.ce_weight * in_batch_ce(ce_scores);
    return loss;
}

std::pair<double, ModelGrads> batch_grad(const ToyModel& model,
                                         const std::vector<TrainingExample>& batch,
                                         const TrainConfig& config) {
    if (batch.empty()) throw ConfigError("batch_grad: empty batch");
    const int b = int(batch.size());
    for (int i = 0; i < b; ++i) validate_example(batch[i], model, i);
    const bool use_ce = config.ce_weight != 0 && b >= 2;

    std::vector<ExampleForward> fwd;
    fwd.reserve(b);
    for (const auto& ex : batch) fwd.push_back(forward_example(model, ex));

    // Forward scores with caches: own positive and negatives always, other
    // queries' positives only when the CE term is active.
    std::vector<std::vector<DocCache>> pos_caches(b);  // [i][j]: qnet i on positive j
    std::vector<std::vector<DocCache>> neg_caches(b);  // [i][j]: qnet i on own negative j
    double margin_total = 0;
    std::vector<MarginMseGrad<double>> margin_grads(b);
    MatD ce_scores;
    if (use_ce) ce_scores.resize(b, b);
    for (int i = 0; i < b; ++i) {
        pos_caches[i].resize(use_ce ? b : 1);
        const int own = use_ce ? i : 0;
        pos_caches[i][own] = score_with_cache(fwd[i].qnet, batch[i].positive);
        double s_pos = pos_caches[i][own].value;
        VecD s_negs(Eigen::Index(batch[i].negatives.size()));
        for (std::size_t j = 0; j < batch[i].negatives.size(); ++j) {
            neg_caches[i].push_back(score_with_cache(fwd[i].qnet, batch[i].negatives[j]));
            s_negs[Eigen::Index(j)] = neg_caches[i].back().value;
        }
        margin_total += margin_mse(s_pos, s_negs, batch[i].teacher_pos, batch[i].teacher_negs);
        margin_grads[i] = margin_mse_backward(s_pos, s_negs, batch[i].teacher_pos,
                                              batch[i].teacher_negs, config.margin_weight / b);
        if (use_ce) {
            for (int j = 0; j < b; ++j) {
                if (j == i) continue;
                pos_caches[i][j] = score_with_cache(fwd[i].qnet, batch[j].positive);
            }
            for (int j = 0; j < b; ++j) ce_scores(i, j) = pos_caches[i][j].value;
        }
    }
    double loss = config.margin_weight * margin_total / b;
    if (use_ce) loss += config.ce_weight * in_batch_ce(ce_scores);

    ModelGrads grads = zero_grads(model);
    MatD d_ce;
    if (use_ce) d_ce = in_batch_ce_backward(ce_scores, config.ce_weight);
    for (int i = 0; i < b; ++i) {
        QNetGrads qg(fwd[i].qnet);
        const int own = use_ce ? i : 0;
        double d_pos = margin_grads[i].d_pos + (use_ce ? d_ce(i, i) : 0.0);
        doc_backward(fwd[i].qnet, pos_caches[i][own], d_pos, qg);
        if (use_ce)
            for (int j = 0; j < b; ++j)
                if (j != i) doc_backward(fwd[i].qnet, pos_caches[i][j], d_ce(i, j), qg);
        for (std::size_t j = 0; j < batch[i].negatives.size(); ++j)
            doc_backward(fwd[i].qnet, neg_caches[i][j], margin_grads[i].d_negs[Eigen::Index(j)],
                         qg);
        example_backward(model, batch[i], fwd[i], qg, grads);
    }
    return {loss, grads};
}

Adam::Adam(double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(ToyModel& model, const ModelGrads& grads) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, double(t_));
    const double bc2 = 1.0 - std::pow(beta2_, double(t_));

    struct Ref {
        std::string name;
        double* data;
        Eigen::Index size;
    };
    std::vector<Ref> params, gradient;
    visit_model(model, [&](const std::string& name, auto& t) {
        params.push_back({name, t.data(), t.size()});
    });
    visit_grads(const_cast<ModelGrads&>(grads), [&](const std::string& name, auto& t) {
        gradient.push_back({name, t.data(), t.size()});
    });
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].name != gradient[i].name || params[i].size != gradient[i].size)
            throw ShapeError("Adam: parameter/gradient mismatch at " + params[i].name);
        Eigen::Map<VecD> p(params[i].data, params[i].size);
        Eigen::Map<const VecD> g(gradient[i].data, gradient[i].size);
        VecD& m = m_.try_emplace(params[i].name, VecD::Zero(params[i].size)).first->second;
        VecD& v = v_.try_emplace(params[i].name, VecD::Zero(params[i].size)).first->second;
        m = beta1_ * m + (1.0 - beta1_) * g;
        v = (beta2_ * v.array() + (1.0 - beta2_) * g.array().square()).matrix();
        if (lr_ != 0)
            p.array() -= lr_ * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps_);
    }
}

TrainResult train_toy(const std::vector<TrainingExample>& dataset, const TrainConfig& config) {
    if (dataset.empty()) throw ConfigError("train_toy: empty dataset");
    if (config.steps < 0 || config.batch_size < 1)
        throw ConfigError("train_toy: steps must be >= 0 and batch_size >= 1");
    TrainResult result;
    result.model = init_toy_model(config);
    for (std::size_t i = 0; i < dataset.size(); ++i)
        validate_example(dataset[i], result.model, int(i));

    Adam adam(config.lr, config.adam_beta1, config.adam_beta2, config.adam_eps);
    Rng sampler(config.seed ^ 0x9E3779B97F4A7C15ULL);
    const std::uint32_t n = std::uint32_t(dataset.size());
    const std::uint32_t take = std::min<std::uint32_t>(std::uint32_t(config.batch_size), n);
    std::vector<TrainingExample> batch;
    for (int step = 0; step < config.steps; ++step) {
        auto picks = sample_without_replacement(sampler, n, take);
        batch.clear();
        for (auto idx : picks) batch.push_back(dataset[idx]);
        auto [loss, grads] = batch_grad(result.model, batch, config);
        if (!std::isfinite(loss))
            throw NumericError("train_toy: non-finite loss " + std::to_string(loss) + " at step " +
                               std::to_string(step));
        result.loss_trace.push_back(loss);
        adam.step(result.model, grads);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Model persistence.
// ---------------------------------------------------------------------------

void save_model(const ToyModel& model, const std::string& path) {
    std::vector<TensorEntry> tensors;
    visit_model(model, [&](const std::string& name, const auto& t) {
        tensors.push_back(make_entry(name, t));
    });
    tensors.push_back(make_scalar_entry("meta.dim", double(model.encoder.dim)));
    tensors.push_back(make_scalar_entry("meta.qnet_layers", double(model.head.qnet_layers())));
    tensors.push_back(make_scalar_entry("meta.vocab", double(model.encoder.vocab_size)));
    tensors.push_back(make_scalar_entry("meta.eps", model.eps));
    save_tensors(tensors, path);
}

ToyModel load_model(const std::string& path) {
    auto tensors = load_tensors(path);
    std::map<std::string, const TensorEntry*> by_name;
    for (const auto& e : tensors) by_name[e.name] = &e;
    auto find = [&](const std::string& name) -> const TensorEntry& {
        auto it = by_name.find(name);
        if (it == by_name.end())
            throw FormatError(FormatError::Code::malformed, "model file missing tensor " + name);
        return *it->second;
    };
    TrainConfig shape;
    shape.dim = int(entry_as_scalar(find("meta.dim")));
    shape.qnet_layers = int(entry_as_scalar(find("meta.qnet_layers")));
    shape.vocab = int(entry_as_scalar(find("meta.vocab")));

    ToyModel model;
    model.eps = entry_as_scalar(find("meta.eps"));
    model.encoder.dim = shape.dim;
    model.encoder.vocab_size = shape.vocab;
    model.head = init_hyperhead<double>(shape.dim, shape.qnet_layers, 0);
    visit_model(model, [&](const std::string& name, auto& t) {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, VecD>)
            t = entry_as_vector<double>(find(name));
        else
            t = entry_as_matrix<double>(find(name));
    });
    validate(model.head);
    if (model.encoder.embedding.rows() != shape.vocab ||
        model.encoder.embedding.cols() != shape.dim)
        throw FormatError(FormatError::Code::malformed, "model embedding shape mismatch");
    return model;
}

}  // namespace hyperscore
