#include <doctest.h>

#include "helpers.hpp"
#include "hyperscore/qnet.hpp"

using namespace hyperscore;
using testutil::random_mat;
using testutil::random_vec;

namespace {

QNet<double> zero_qnet(int dim, int depth) {
    QNet<double> q;
    for (int i = 0; i < depth; ++i) {
        q.hidden_weights.push_back(MatD::Zero(dim, dim));
        q.hidden_biases.push_back(VecD::Zero(dim));
    }
    q.out_weight = MatD::Zero(1, dim);
    q.out_bias = 0;
    return q;
}

// Straight-line evaluator with explicit loops, used as an oracle.
double ref_score(const QNet<double>& q, const VecD& doc) {
    std::vector<double> x(doc.data(), doc.data() + doc.size());
    const int h = int(doc.size());
    const int depth = q.depth();
    for (int layer = 0; layer < depth; ++layer) {
        std::vector<double> z(h, 0.0);
        for (int i = 0; i < h; ++i) {
            for (int j = 0; j < h; ++j) z[i] += q.hidden_weights[layer](i, j) * x[j];
            z[i] += q.hidden_biases[layer][i];
            z[i] = std::max(0.0, z[i]);
        }
        double mean = 0;
        for (int i = 0; i < h; ++i) mean += z[i];
        mean /= h;
        double var = 0;
        for (int i = 0; i < h; ++i) var += (z[i] - mean) * (z[i] - mean);
        var /= h;
        const double denom = std::sqrt(var + q.eps);
        for (int i = 0; i < h; ++i) {
            const double normed = (z[i] - mean) / denom;
            x[i] = (layer + 1 < depth) ? x[i] + normed : normed;
        }
    }
    double out = q.out_bias;
    for (int i = 0; i < h; ++i) out += q.out_weight(0, i) * x[i];
    return out;
}

}  // namespace

TEST_CASE("zero-weight collapse to the output bias") {
    SUBCASE("single layer") {
        QNet<double> q = zero_qnet(4, 1);
        q.out_bias = 2.5;
        q.out_weight.setRandom();
        Rng rng(1);
        CHECK(score(q, random_vec(rng, 4)) == 2.5);
    }
    SUBCASE("two layers, residual passes x through layer 1") {
        QNet<double> q = zero_qnet(4, 2);
        q.out_bias = -7.0;
        q.out_weight.setOnes();
        Rng rng(2);
        CHECK(score(q, random_vec(rng, 4)) == -7.0);
    }
}

TEST_CASE("score matches the straight-line evaluator") {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        QNet<double> q = random_qnet<double>(8, 3, seed);
        Rng rng(seed + 1000);
        VecD doc = random_vec(rng, 8);
        CHECK(score(q, doc) == doctest::Approx(ref_score(q, doc)).epsilon(1e-12));
    }
}

TEST_CASE("score_batch is bit-exact against scalar calls") {
    QNet<double> q = random_qnet<double>(8, 3, 42);
    Rng rng(7);
    MatD docs = random_mat(rng, 64, 8);
    VecD batch = score_batch(q, docs);
    REQUIRE(batch.size() == 64);
    for (Eigen::Index i = 0; i < docs.rows(); ++i) {
        VecD row = docs.row(i).transpose();
        CHECK(batch[i] == score(q, row));
    }

    MatD dup(2, 8);
    dup.row(0) = docs.row(5);
    dup.row(1) = docs.row(5);
    VecD pair = score_batch(q, dup);
    CHECK(pair[0] == pair[1]);

    MatD one = docs.topRows(1);
    CHECK(score_batch(q, one)[0] == batch[0]);
}

TEST_CASE("scoring is not an inner product") {
    int witnesses = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        QNet<double> q = random_qnet<double>(8, 2, seed);
        Rng rng(seed + 55);
        VecD x = random_vec(rng, 8), y = random_vec(rng, 8);
        const double additive = score(q, x) + score(q, y) - score(q, VecD::Zero(8).eval());
        if (std::abs(score(q, (x + y).eval()) - additive) > 1e-6) ++witnesses;
    }
    CHECK(witnesses > 0);
}

TEST_CASE("tiny input perturbations move the score only slightly") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        QNet<double> q = random_qnet<double>(8, 2, seed);
        Rng rng(seed + 99);
        VecD doc = random_vec(rng, 8);
        VecD bumped = doc;
        bumped[int(rng.bounded(8))] += 1e-9;
        CHECK(std::abs(score(q, doc) - score(q, bumped)) <= 1e-3);
    }
}

TEST_CASE("dimension mismatches throw shape errors") {
    QNet<double> q = random_qnet<double>(8, 2, 1);
    Rng rng(3);
    CHECK_THROWS_AS(score(q, random_vec(rng, 7)), ShapeError);
    CHECK_THROWS_AS(score_batch(q, random_mat(rng, 4, 9)), ShapeError);
    QNet<double> broken = q;
    broken.hidden_biases[0] = VecD::Zero(3);
    CHECK_THROWS_AS(broken.validate(), ShapeError);
}
