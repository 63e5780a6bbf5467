#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "hyperscore/common.hpp"
#include "hyperscore/parallel.hpp"
#include "hyperscore/qnet.hpp"
#include "hyperscore/rng.hpp"

// Document-side storage and retrieval. Documents are single vectors; the
// scorer is a per-query network, so the index only stores vectors plus a
// k-nearest-neighbor graph built once from euclidean distance. Search is
// either exhaustive or a greedy frontier walk over the graph.
//
// Tie handling is uniform: candidate admission and top-k membership break
// ties by ascending doc index, the final ranking presents equal scores by
// ascending doc id.

namespace hyperscore {

template <class Scalar>
struct Corpus {
    std::vector<std::string> doc_ids;
    Mat<Scalar> vectors;  // N x h

    std::size_t size() const { return doc_ids.size(); }
};

template <class To, class From>
Corpus<To> cast_corpus(const Corpus<From>& c) {
    Corpus<To> out;
    out.doc_ids = c.doc_ids;
    out.vectors = c.vectors.template cast<To>();
    return out;
}

template <class Scalar>
void validate(const Corpus<Scalar>& c) {
    if (Eigen::Index(c.doc_ids.size()) != c.vectors.rows())
        throw ShapeError("corpus has " + std::to_string(c.doc_ids.size()) + " ids but " +
                         std::to_string(c.vectors.rows()) + " vectors");
}

/// Row i holds the g nearest neighbors of doc i, nearest first.
struct DocGraph {
    Eigen::Matrix<std::uint32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> neighbors;

    Eigen::Index docs() const { return neighbors.rows(); }
    Eigen::Index degree() const { return neighbors.cols(); }
};

struct SearchParams {
    std::uint32_t initial_candidates = 100;  // size of the random seed set
    std::uint32_t n_candidates = 16;         // frontier winners expanded per iteration
    std::uint32_t max_iter = 16;
    std::uint32_t k = 10;
    bool early_stop = true;
    std::uint64_t rng_seed = 0;
};

struct SearchStats {
    std::uint64_t scored_count = 0;
    std::uint32_t iterations = 0;
    bool early_stopped = false;
};

struct SearchResult {
    std::vector<std::pair<std::string, double>> ranked;  // (doc_id, score), best first
    SearchStats stats;
};

namespace detail {

// (score, index) ordering used for admission: higher score wins, equal
// scores go to the smaller index.
inline bool better_candidate(double score_a, std::uint32_t idx_a, double score_b,
                             std::uint32_t idx_b) {
    if (score_a != score_b) return score_a > score_b;
    return idx_a < idx_b;
}

template <class Scalar>
std::vector<std::pair<std::string, double>> present(
    const Corpus<Scalar>& corpus, std::vector<std::pair<double, std::uint32_t>> top) {
    std::vector<std::pair<std::string, double>> ranked;
    ranked.reserve(top.size());
    for (const auto& [score, idx] : top) ranked.emplace_back(corpus.doc_ids[idx], score);
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return ranked;
}

}  // namespace detail

/// Exact nearest-neighbor graph: g closest rows for every row, squared
/// euclidean distance, ties by ascending index. O(N^2 h), parallel over rows.
template <class Scalar>
DocGraph build_graph(const Corpus<Scalar>& corpus, std::uint32_t g) {
    validate(corpus);
    const Eigen::Index n = corpus.vectors.rows();
    if (g < 1 || Eigen::Index(g) >= n)
        throw ConfigError("build_graph: need 1 <= g < N, got g=" + std::to_string(g) +
                          " with N=" + std::to_string(n));
    DocGraph graph;
    graph.neighbors.resize(n, g);
    parallel_for(0, n, [&](std::int64_t i) {
        Vec<Scalar> dist =
            (corpus.vectors.rowwise() - corpus.vectors.row(i)).rowwise().squaredNorm();
        // Bounded worst-first heap over (distance, index).
        auto worse = [](const std::pair<Scalar, std::uint32_t>& a,
                        const std::pair<Scalar, std::uint32_t>& b) {
            if (a.first != b.first) return a.first < b.first;
            return a.second < b.second;
        };
        std::vector<std::pair<Scalar, std::uint32_t>> heap;
        heap.reserve(g + 1);
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            std::pair<Scalar, std::uint32_t> cand{dist(j), std::uint32_t(j)};
            if (heap.size() < g) {
                heap.push_back(cand);
                std::push_heap(heap.begin(), heap.end(), worse);
            } else if (worse(cand, heap.front())) {
                std::pop_heap(heap.begin(), heap.end(), worse);
                heap.back() = cand;
                std::push_heap(heap.begin(), heap.end(), worse);
            }
        }
        std::sort(heap.begin(), heap.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first < b.first;
            return a.second < b.second;
        });
        for (std::uint32_t c = 0; c < g; ++c) graph.neighbors(i, c) = heap[c].second;
    });
    return graph;
}

/// Scores every document and returns the exact top k.
template <class Scalar>
SearchResult exhaustive_search(const QNet<Scalar>& qnet, const Corpus<Scalar>& corpus,
                               std::uint32_t k) {
    validate(corpus);
    const Eigen::Index n = corpus.vectors.rows();
    if (k < 1 || Eigen::Index(k) > n)
        throw ConfigError("exhaustive_search: need 1 <= k <= N, got k=" + std::to_string(k) +
                          " with N=" + std::to_string(n));
    Vec<Scalar> scores = score_batch(qnet, corpus.vectors);
    std::vector<std::pair<double, std::uint32_t>> order(n);
    for (Eigen::Index j = 0; j < n; ++j) order[j] = {double(scores(j)), std::uint32_t(j)};
    auto by_admission = [](const auto& a, const auto& b) {
        return detail::better_candidate(a.first, a.second, b.first, b.second);
    };
    std::nth_element(order.begin(), order.begin() + (k - 1), order.end(), by_admission);
    order.resize(k);
    SearchResult result;
    result.ranked = detail::present(corpus, std::move(order));
    result.stats.scored_count = std::uint64_t(n);
    result.stats.iterations = 1;
    return result;
}

/// Greedy graph walk. A random seed set is scored, the best n_candidates are
/// expanded through their neighbor lists, and the loop repeats on the newly
/// discovered docs. Every doc is scored at most once. The walk stops when the
/// frontier dies out, when max_iter rounds complete, or (with early_stop) when
/// the best fresh candidate cannot beat the current k-th best.
template <class Scalar>
SearchResult graph_search(const QNet<Scalar>& qnet, const DocGraph& graph,
                          const Corpus<Scalar>& corpus, const SearchParams& params) {
    validate(corpus);
    const Eigen::Index n = corpus.vectors.rows();
    if (n == 0) throw ConfigError("graph_search: empty corpus");
    if (graph.docs() != n)
        throw ConfigError("graph_search: graph covers " + std::to_string(graph.docs()) +
                          " docs, corpus has " + std::to_string(n));
    if (params.k < 1 || Eigen::Index(params.k) > n)
        throw ConfigError("graph_search: need 1 <= k <= N, got k=" + std::to_string(params.k) +
                          " with N=" + std::to_string(n));
    if (params.initial_candidates < 1 || params.n_candidates < 1)
        throw ConfigError("graph_search: initial_candidates and n_candidates must be >= 1");

    const std::uint32_t seed_count =
        std::uint32_t(std::min<std::uint64_t>(params.initial_candidates, std::uint64_t(n)));
    Rng rng(params.rng_seed);
    std::vector<std::uint32_t> frontier = sample_without_replacement(rng, std::uint32_t(n), seed_count);

    std::vector<char> enqueued(n, 0);  // sampled or queued for scoring, never re-added
    for (std::uint32_t idx : frontier) enqueued[idx] = 1;
    std::vector<double> score_of(n, 0.0);

    // Worst-first heap of the best k seen so far.
    auto worst_first = [](const std::pair<double, std::uint32_t>& a,
                          const std::pair<double, std::uint32_t>& b) {
        return detail::better_candidate(a.first, a.second, b.first, b.second);
    };
    std::vector<std::pair<double, std::uint32_t>> top;
    top.reserve(params.k + 1);

    SearchResult result;
    std::vector<std::pair<double, std::uint32_t>> candidates;
    while (!frontier.empty() && result.stats.iterations < params.max_iter) {
        candidates.clear();
        candidates.reserve(frontier.size());
        for (std::uint32_t idx : frontier) {
            Vec<Scalar> doc = corpus.vectors.row(idx).transpose();
            score_of[idx] = double(score(qnet, doc));
            candidates.emplace_back(score_of[idx], idx);
        }
        result.stats.scored_count += frontier.size();

        const std::size_t keep = std::min<std::size_t>(params.n_candidates, candidates.size());
        auto by_admission = [](const auto& a, const auto& b) {
            return detail::better_candidate(a.first, a.second, b.first, b.second);
        };
        std::partial_sort(candidates.begin(), candidates.begin() + keep, candidates.end(),
                          by_admission);
        candidates.resize(keep);
        result.stats.iterations += 1;

        if (params.early_stop && top.size() == params.k &&
            candidates.front().first < top.front().first) {
            result.stats.early_stopped = true;
            break;
        }

        for (const auto& cand : candidates) {
            if (top.size() < params.k) {
                top.push_back(cand);
                std::push_heap(top.begin(), top.end(), worst_first);
            } else if (detail::better_candidate(cand.first, cand.second, top.front().first,
                                                top.front().second)) {
                std::pop_heap(top.begin(), top.end(), worst_first);
                top.back() = cand;
                std::push_heap(top.begin(), top.end(), worst_first);
            }
        }

        frontier.clear();
        for (const auto& [cand_score, idx] : candidates) {
            (void)cand_score;
            for (Eigen::Index c = 0; c < graph.degree(); ++c) {
                std::uint32_t nb = graph.neighbors(idx, c);
                if (!enqueued[nb]) {
                    enqueued[nb] = 1;
                    frontier.push_back(nb);
                }
            }
        }
    }

    result.ranked = detail::present(corpus, std::move(top));
    return result;
}

}  // namespace hyperscore
