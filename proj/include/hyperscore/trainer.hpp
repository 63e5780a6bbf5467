#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hyperscore/common.hpp"
#include "hyperscore/hyperhead.hpp"

// End-to-end training of the hyperhead plus a toy query encoder. The encoder
// is a plain embedding table; the interesting gradients flow through qnet
// scoring and weight generation, written by hand and checked against finite
// differences in the tests. Training runs in f64.

namespace hyperscore {

struct ToyQueryEncoder {
    int vocab_size = 0;
    int dim = 0;
    MatD embedding;  // vocab_size x dim

    /// Stacks the embedding rows of `tokens` into an n x h matrix.
    MatD encode(const std::vector<int>& tokens) const;
};

struct TrainingExample {
    std::vector<int> query_tokens;
    VecD positive;
    std::vector<VecD> negatives;  // at least one
    double teacher_pos = 0;
    VecD teacher_negs;
};

struct TrainConfig {
    int dim = 8;
    int qnet_layers = 2;
    int vocab = 16;
    double lr = 1e-3;
    int steps = 500;
    int batch_size = 4;
    std::uint64_t seed = 0;
    double margin_weight = 1.0;
    double ce_weight = 0.2;
    double eps = kLayerNormEps;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
};

struct ToyModel {
    ToyQueryEncoder encoder;
    HyperheadParams<double> head;
    double eps = kLayerNormEps;
};

/// Gradient accumulator shaped exactly like the trainable tensors.
struct ModelGrads {
    HyperheadParams<double> head;
    MatD embedding;
};

template <class Fn>
void visit_model(ToyModel& model, Fn&& fn) {
    visit_tensors(model.head, fn);
    fn(std::string("encoder.embedding"), model.encoder.embedding);
}

template <class Fn>
void visit_model(const ToyModel& model, Fn&& fn) {
    visit_tensors(model.head, fn);
    fn(std::string("encoder.embedding"), model.encoder.embedding);
}

template <class Fn>
void visit_grads(ModelGrads& grads, Fn&& fn) {
    visit_tensors(grads.head, fn);
    fn(std::string("encoder.embedding"), grads.embedding);
}

ToyModel init_toy_model(const TrainConfig& config);
ModelGrads zero_grads(const ToyModel& model);

/// Combined loss over one batch:
/// margin_weight * mean_i margin_mse_i + ce_weight * in_batch_ce(S),
/// where S(i, j) scores query i against the positive of query j. The CE term
/// is skipped for batches of size 1 or ce_weight = 0.
double batch_loss(const ToyModel& model, const std::vector<TrainingExample>& batch,
                  const TrainConfig& config);

/// Same loss plus exact reverse-mode gradients for every tensor.
std::pair<double, ModelGrads> batch_grad(const ToyModel& model,
                                         const std::vector<TrainingExample>& batch,
                                         const TrainConfig& config);

class Adam {
  public:
    Adam(double lr, double beta1, double beta2, double eps);
    void step(ToyModel& model, const ModelGrads& grads);

  private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::map<std::string, VecD> m_, v_;  // flattened per-tensor moments
};

struct TrainResult {
    ToyModel model;
    std::vector<double> loss_trace;  // one combined loss per step
};

/// Seeded full loop: init, sample a batch per step, Adam update. Non-finite
/// loss aborts with a NumericError naming the step.
TrainResult train_toy(const std::vector<TrainingExample>& dataset, const TrainConfig& config);

void save_model(const ToyModel& model, const std::string& path);
ToyModel load_model(const std::string& path);

/// JSONL records {query_tokens, positive, negatives, teacher_scores} with
/// teacher_scores listing the positive first, then the negatives in order.
std::vector<TrainingExample> read_dataset(const std::string& path);
void write_dataset(const std::vector<TrainingExample>& dataset, const std::string& path);

}  // namespace hyperscore
