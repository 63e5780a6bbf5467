#pragma once

#include <vector>

#include "hyperscore/common.hpp"

// Radon's theorem: any h+2 points in R^h can be split into two sets whose
// convex hulls intersect. The split comes from a nontrivial affine dependence
// sum(lambda_i) = 0, sum(lambda_i p_i) = 0: positive coefficients form one
// side, the rest the other, and normalizing each sign class yields a common
// point of both hulls. No linear scorer can rank one side strictly above the
// other, which is the separation argument the hypernet head escapes.

namespace hyperscore {

struct RadonInstance {
    MatD points;                   // (h+2) x h
    std::vector<int> side_a;       // indices with lambda > 0
    std::vector<int> side_b;       // indices with lambda < 0, plus exact zeros
    VecD coefficients;             // lambda, scaled to unit max magnitude
};

/// Splits exactly h+2 points via an affine dependence found with full-pivot
/// LU. Coefficients are canonicalized so the lowest-index nonzero is positive;
/// zero coefficients go to side_b.
RadonInstance radon_partition(const MatD& points);

/// The common hull point reconstructed from side_a's normalized coefficients.
VecD radon_witness(const RadonInstance& instance);

/// Distance between the two per-side reconstructions of the witness point.
double radon_witness_residual(const RadonInstance& instance);

}  // namespace hyperscore
