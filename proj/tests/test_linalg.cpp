#include <doctest.h>

#include "helpers.hpp"
#include "hyperscore/linalg.hpp"

using namespace hyperscore;
using testutil::fd_grad;
using testutil::grad_violation;
using testutil::random_mat;
using testutil::random_vec;

TEST_CASE("matmul basics") {
    MatD a(2, 2);
    a << 1, 2, 3, 4;
    MatD identity = MatD::Identity(2, 2);
    CHECK((linalg::matmul(identity, a) - a).cwiseAbs().maxCoeff() == 0);

    MatD ones(2, 1);
    ones << 1, 1;
    MatD product = linalg::matmul(a, ones);
    CHECK(product(0, 0) == 3);
    CHECK(product(1, 0) == 7);

    Rng rng(1);
    MatD zeros = MatD::Zero(3, 3);
    CHECK(linalg::matmul(zeros, random_mat(rng, 3, 3)).isZero(0));
}

TEST_CASE("matmul rejects mismatched shapes, names both") {
    MatD a(2, 3), b(2, 2);
    a.setZero();
    b.setZero();
    CHECK_THROWS_WITH_AS(linalg::matmul(a, b), doctest::Contains("2x3"), ShapeError);
}

TEST_CASE("matmul associativity on random 4x4 triples") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        MatD a = random_mat(rng, 4, 4), b = random_mat(rng, 4, 4), c = random_mat(rng, 4, 4);
        MatD left = linalg::matmul(linalg::matmul(a, b), c);
        MatD right = linalg::matmul(a, linalg::matmul(b, c));
        CHECK((left - right).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("softmax_rows trivial fixtures") {
    MatD two_zeros(1, 2);
    two_zeros << 0, 0;
    MatD out = linalg::softmax_rows(two_zeros);
    CHECK(out(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(out(0, 1) == doctest::Approx(0.5).epsilon(1e-12));

    MatD big(1, 2);
    big << 1000, 1000;
    out = linalg::softmax_rows(big);
    CHECK(out(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(all_finite(out));

    MatD single(1, 1);
    single << -123.5;
    CHECK(linalg::softmax_rows(single)(0, 0) == 1.0);
}

TEST_CASE("softmax_rows rows sum to one for |x| up to 1e6") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        Rng rng(seed);
        MatD m = random_mat(rng, 5, 7, 1e6 * rng.uniform());
        MatD out = linalg::softmax_rows(m);
        REQUIRE(all_finite(out));
        for (Eigen::Index i = 0; i < out.rows(); ++i)
            CHECK(std::abs(out.row(i).sum() - 1.0) < 1e-12);
    }
}

TEST_CASE("layer_norm trivial fixtures") {
    VecD constant(4);
    constant << 5, 5, 5, 5;
    CHECK(linalg::layer_norm<double>(constant, 1e-5).isZero(0));

    VecD pair(2);
    pair << 1, -1;
    VecD out = linalg::layer_norm<double>(pair, 1e-5);
    CHECK(out[0] == doctest::Approx(0.99999500003749972).epsilon(1e-12));
    CHECK(out[1] == doctest::Approx(-0.99999500003749972).epsilon(1e-12));

    VecD zeros = VecD::Zero(2);
    CHECK(linalg::layer_norm<double>(zeros, 1e-5).isZero(0));
}

TEST_CASE("layer_norm output mean is zero") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        Rng rng(seed);
        VecD v = random_vec(rng, 9, 10.0);
        VecD out = linalg::layer_norm<double>(v, 1e-5);
        CHECK(std::abs(out.mean()) < 1e-12);
    }
}

TEST_CASE("relu fixtures") {
    VecD v(2);
    v << -1, 2;
    VecD out = linalg::relu(v);
    CHECK(out[0] == 0);
    CHECK(out[1] == 2);

    VecD zero(1);
    zero << 0;
    CHECK(linalg::relu(zero)[0] == 0);

    VecD negatives(3);
    negatives << -5, -0.5, -100;
    CHECK(linalg::relu(negatives).isZero(0));
}

TEST_CASE("relu vjp gates at the sign of the input") {
    VecD input(2);
    input << 2, -3;
    VecD up(2);
    up << 1, 1;
    VecD g = linalg::relu_vjp(input, up);
    CHECK(g[0] == 1);
    CHECK(g[1] == 0);

    VecD at_zero(1);
    at_zero << 0;
    CHECK(linalg::relu_vjp(at_zero, up.head(1))[0] == 0);
}

TEST_CASE("matmul vjp closed form on a 2x2 case") {
    MatD a(2, 2), b(2, 2), up(2, 2);
    a << 1, 2, 3, 4;
    b << 5, 6, 7, 8;
    up << 1, 0, 0, 1;
    MatD da = linalg::matmul_vjp_a(b, up);
    MatD db = linalg::matmul_vjp_b(a, up);
    CHECK((da - up * b.transpose()).isZero(0));
    CHECK((db - a.transpose() * up).isZero(0));
}

// Finite-difference oracles. Each op f gets the scalar probe
// g(X) = sum(f(X) .* U) for a random upstream U, whose exact gradient is the
// vjp at U.
TEST_CASE("matmul vjps match finite differences") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed);
        MatD a = random_mat(rng, 3, 4), b = random_mat(rng, 4, 2), up = random_mat(rng, 3, 2);
        MatD da = linalg::matmul_vjp_a<double>(b, up);
        MatD fd_a = fd_grad([&](const MatD& x) { return (linalg::matmul(x, b).array() * up.array()).sum(); }, a);
        CHECK(grad_violation(da, fd_a, 1e-4, 1e-6) <= 1.0);

        MatD db = linalg::matmul_vjp_b<double>(a, up);
        MatD fd_b = fd_grad([&](const MatD& x) { return (linalg::matmul(a, x).array() * up.array()).sum(); }, b);
        CHECK(grad_violation(db, fd_b, 1e-4, 1e-6) <= 1.0);
    }
}

TEST_CASE("softmax vjp matches finite differences tightly") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed);
        MatD x = random_mat(rng, 3, 5), up = random_mat(rng, 3, 5);
        MatD analytic = linalg::softmax_rows_vjp<double>(linalg::softmax_rows(x), up);
        MatD fd = fd_grad(
            [&](const MatD& m) { return (linalg::softmax_rows(m).array() * up.array()).sum(); }, x);
        CHECK(grad_violation(analytic, fd, 1e-6, 1e-9) <= 1.0);
    }
}

TEST_CASE("layer_norm vjp matches finite differences tightly") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed);
        VecD x = random_vec(rng, 8), up = random_vec(rng, 8);
        VecD analytic = linalg::layer_norm_vjp<double>(x, 1e-5, up);
        MatD fd = fd_grad(
            [&](const MatD& m) {
                VecD v = m.row(0).transpose();
                return (linalg::layer_norm<double>(v, 1e-5).array() * up.array()).sum();
            },
            x.transpose());
        CHECK(grad_violation(analytic.transpose(), fd, 1e-6, 1e-9) <= 1.0);
    }
}

TEST_CASE("layer_norm_rows vjp matches finite differences") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        MatD x = random_mat(rng, 4, 6), up = random_mat(rng, 4, 6);
        MatD analytic = linalg::layer_norm_rows_vjp<double>(x, 1e-5, up);
        MatD fd = fd_grad(
            [&](const MatD& m) {
                return (linalg::layer_norm_rows<double>(m, 1e-5).array() * up.array()).sum();
            },
            x);
        CHECK(grad_violation(analytic, fd, 1e-6, 1e-9) <= 1.0);
    }
}

TEST_CASE("relu vjp matches finite differences away from the kink") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed);
        MatD x = random_mat(rng, 4, 4), up = random_mat(rng, 4, 4);
        // keep inputs away from 0 so central differences do not straddle it
        x = x.unaryExpr([](double v) { return std::abs(v) < 1e-3 ? v + 0.1 : v; });
        MatD analytic = linalg::relu_vjp(x, up);
        MatD fd = fd_grad([&](const MatD& m) { return (linalg::relu(m).array() * up.array()).sum(); }, x);
        CHECK(grad_violation(analytic, fd, 1e-4, 1e-6) <= 1.0);
    }
}

TEST_CASE("f32 operations mirror f64 within single precision") {
    Rng rng(7);
    MatD xd = random_mat(rng, 3, 4);
    MatF xf = xd.cast<float>();
    MatF sf = linalg::softmax_rows(xf);
    MatD sd = linalg::softmax_rows(xd);
    CHECK((sf.cast<double>() - sd).cwiseAbs().maxCoeff() < 1e-6);

    VecD vd = random_vec(rng, 6);
    VecF vf = vd.cast<float>();
    VecF nf = linalg::layer_norm<float>(vf, 1e-5f);
    VecD nd = linalg::layer_norm<double>(vd, 1e-5);
    CHECK((nf.cast<double>() - nd).cwiseAbs().maxCoeff() < 1e-5);
}
