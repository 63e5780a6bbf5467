#include "hyperscore/synthetic.hpp"

#include <cmath>
#include <cstdio>

#include "hyperscore/rng.hpp"

namespace hyperscore {

namespace {

// Two fresh tokens per query; queries alternate between the two relevance
// groups, and each relevant doc becomes a positive with the whole opposite
// group as negatives (teacher 1 vs 0).
SyntheticTask two_sided_task(MatD points, const std::vector<std::string>& ids,
                             const std::vector<int>& side_a, const std::vector<int>& side_b,
                             int n_queries, int dim) {
    SyntheticTask task;
    task.corpus.doc_ids = ids;
    task.corpus.vectors = std::move(points);
    task.vocab_size = 2 * n_queries;
    for (int i = 0; i < n_queries; ++i) {
        SyntheticQuery query;
        query.qid = "q" + std::to_string(i);
        query.tokens = {2 * i, 2 * i + 1};
        const auto& relevant = (i % 2 == 0) ? side_a : side_b;
        const auto& irrelevant = (i % 2 == 0) ? side_b : side_a;
        for (int doc : relevant) task.qrels[query.qid][ids[doc]] = 1;
        for (int pos : relevant) {
            TrainingExample ex;
            ex.query_tokens = query.tokens;
            ex.positive = task.corpus.vectors.row(pos).transpose();
            for (int neg : irrelevant)
                ex.negatives.push_back(task.corpus.vectors.row(neg).transpose());
            ex.teacher_pos = 1.0;
            ex.teacher_negs = VecD::Zero(Eigen::Index(ex.negatives.size()));
            task.training.push_back(std::move(ex));
        }
        task.queries.push_back(std::move(query));
    }
    return task;
}

}  // namespace

SyntheticTask gen_xor_task(int n_queries, int dim, std::uint64_t seed) {
    if (n_queries < 1 || dim < 2)
        throw ConfigError("gen_xor_task: need n_queries >= 1 and dim >= 2");
    // Affine lift of the corners: corner (x, y) maps to c + (2x-1)u + (2y-1)v
    // with random directions u, v. Affinity preserves the defining dependence
    // v00 + v11 = v10 + v01, so no linear scorer can split the diagonals, but
    // every doc has full-dimensional structure instead of zero padding.
    Rng rng(seed);
    VecD u(dim), v(dim), c(dim);
    const double scale = 1.0 / std::sqrt(2.0);
    for (Eigen::Index i = 0; i < dim; ++i) {
        u[i] = rng.gaussian() * scale;
        v[i] = rng.gaussian() * scale;
        c[i] = rng.gaussian() * 0.5;
    }
    const double corners[4][2] = {{0, 0}, {1, 1}, {1, 0}, {0, 1}};
    MatD points(4, dim);
    for (int r = 0; r < 4; ++r) {
        const double sx = 2 * corners[r][0] - 1;
        const double sy = 2 * corners[r][1] - 1;
        points.row(r) = (c + sx * u + sy * v).transpose();
    }
    std::vector<std::string> ids = {"xor-00", "xor-11", "xor-10", "xor-01"};
    return two_sided_task(std::move(points), ids, {0, 1}, {2, 3}, n_queries, dim);
}

SyntheticTask gen_radon_task(int n_queries, int dim, std::uint64_t seed) {
    if (n_queries < 1 || dim < 1)
        throw ConfigError("gen_radon_task: need n_queries >= 1 and dim >= 1");
    Rng rng(seed);
    MatD points(dim + 2, dim);
    for (Eigen::Index r = 0; r < points.rows(); ++r)
        for (Eigen::Index c = 0; c < points.cols(); ++c) points(r, c) = rng.gaussian();
    RadonInstance instance = radon_partition(points);
    std::vector<std::string> ids;
    for (Eigen::Index i = 0; i < points.rows(); ++i) ids.push_back("radon-" + std::to_string(i));
    SyntheticTask task = two_sided_task(std::move(points), ids, instance.side_a, instance.side_b,
                                        n_queries, dim);
    task.radon = std::move(instance);
    return task;
}

SyntheticTask gen_cluster_task(const SyntheticSizes& sizes, std::uint64_t seed) {
    if (sizes.n_docs < 2 || sizes.n_clusters < 2 || sizes.dim < 1 || sizes.n_queries < 1 ||
        sizes.negatives < 1 || sizes.n_clusters > sizes.n_docs)
        throw ConfigError("gen_cluster_task: inconsistent sizes");
    Rng rng(seed);
    MatD centers(sizes.n_clusters, sizes.dim);
    for (Eigen::Index r = 0; r < centers.rows(); ++r)
        for (Eigen::Index c = 0; c < centers.cols(); ++c) centers(r, c) = rng.gaussian();

    SyntheticTask task;
    task.corpus.vectors.resize(sizes.n_docs, sizes.dim);
    std::vector<int> cluster_of(sizes.n_docs);
    char id_buf[32];
    for (int i = 0; i < sizes.n_docs; ++i) {
        cluster_of[i] = i % sizes.n_clusters;
        for (Eigen::Index c = 0; c < sizes.dim; ++c)
            task.corpus.vectors(i, c) =
                centers(cluster_of[i], c) + sizes.noise_std * rng.gaussian();
        std::snprintf(id_buf, sizeof(id_buf), "doc-%06d", i);
        task.corpus.doc_ids.push_back(id_buf);
    }

    task.vocab_size = 2 * sizes.n_queries;
    for (int q = 0; q < sizes.n_queries; ++q) {
        SyntheticQuery query;
        query.qid = "q" + std::to_string(q);
        query.tokens = {2 * q, 2 * q + 1};
        const int target = q % sizes.n_clusters;
        for (int i = 0; i < sizes.n_docs; ++i)
            if (cluster_of[i] == target) task.qrels[query.qid][task.corpus.doc_ids[i]] = 1;

        TrainingExample ex;
        ex.query_tokens = query.tokens;
        const int pos = target + sizes.n_clusters * int(rng.bounded(
                            std::uint32_t((sizes.n_docs - 1 - target) / sizes.n_clusters + 1)));
        ex.positive = task.corpus.vectors.row(pos).transpose();
        for (int j = 0; j < sizes.negatives; ++j) {
            std::uint32_t pick = rng.bounded(std::uint32_t(sizes.n_docs));
            while (cluster_of[pick] == target) pick = rng.bounded(std::uint32_t(sizes.n_docs));
            ex.negatives.push_back(task.corpus.vectors.row(pick).transpose());
        }
        ex.teacher_pos = 1.0;
        ex.teacher_negs = VecD::Zero(sizes.negatives);
        task.training.push_back(std::move(ex));
        task.queries.push_back(std::move(query));
    }
    return task;
}

SyntheticTask gen_synthetic_task(const std::string& kind, const SyntheticSizes& sizes,
                                 std::uint64_t seed) {
    if (kind == "xor") return gen_xor_task(sizes.n_queries, sizes.dim, seed);
    if (kind == "radon") return gen_radon_task(sizes.n_queries, sizes.dim, seed);
    if (kind == "clusters") return gen_cluster_task(sizes, seed);
    throw ConfigError("gen_synthetic_task: unknown kind '" + kind +
                      "', expected xor, radon or clusters");
}

}  // namespace hyperscore
