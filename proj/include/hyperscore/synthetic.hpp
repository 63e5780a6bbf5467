#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hyperscore/evalkit.hpp"
#include "hyperscore/index.hpp"
#include "hyperscore/radon.hpp"
#include "hyperscore/trainer.hpp"

// Deterministic synthetic retrieval tasks.
//   xor: four docs at the XOR corners (lifted into R^h); each query marks one
//        diagonal as relevant, so no single linear scorer can solve every
//        query but a per-query network can.
//   radon: h+2 random points split by radon_partition; each query marks one
//        side as relevant, the certified-inseparable generalization of xor.
//   clusters: Gaussian cluster mixture for search benchmarks at larger N.
// Every query gets two private tokens, so the encoder can specialize freely.

namespace hyperscore {

struct SyntheticQuery {
    std::string qid;
    std::vector<int> tokens;
};

struct SyntheticTask {
    std::vector<SyntheticQuery> queries;
    Corpus<double> corpus;
    eval::Qrels qrels;
    std::vector<TrainingExample> training;
    int vocab_size = 0;
    std::optional<RadonInstance> radon;  // populated for kind=radon
};

struct SyntheticSizes {
    int n_queries = 8;
    int dim = 8;
    // clusters only:
    int n_docs = 1000;
    int n_clusters = 20;
    double noise_std = 0.15;
    int negatives = 4;
};

SyntheticTask gen_xor_task(int n_queries, int dim, std::uint64_t seed);
SyntheticTask gen_radon_task(int n_queries, int dim, std::uint64_t seed);
SyntheticTask gen_cluster_task(const SyntheticSizes& sizes, std::uint64_t seed);

/// kind is one of "xor", "radon", "clusters".
SyntheticTask gen_synthetic_task(const std::string& kind, const SyntheticSizes& sizes,
                                 std::uint64_t seed);

}  // namespace hyperscore
