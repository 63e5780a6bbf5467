#pragma once

#include <cmath>
#include <string>

#include "hyperscore/common.hpp"
#include "hyperscore/linalg.hpp"

// Distillation and contrastive losses. Each forward has a hand-written
// backward companion; the trainer composes them with the network VJPs.

namespace hyperscore {

/// Mean over negatives of squared margin error:
/// mean_j ((s_pos - s_neg[j]) - (t_pos - t_neg[j]))^2.
template <class Scalar>
Scalar margin_mse(Scalar student_pos, const Vec<Scalar>& student_negs, Scalar teacher_pos,
                  const Vec<Scalar>& teacher_negs) {
    if (student_negs.size() == 0) throw ShapeError("margin_mse: no negatives");
    if (student_negs.size() != teacher_negs.size())
        throw ShapeError("margin_mse: " + std::to_string(student_negs.size()) +
                         " student vs " + std::to_string(teacher_negs.size()) +
                         " teacher negatives");
    Scalar total = 0;
    for (Eigen::Index j = 0; j < student_negs.size(); ++j) {
        Scalar e = (student_pos - student_negs[j]) - (teacher_pos - teacher_negs[j]);
        total += e * e;
    }
    return total / Scalar(student_negs.size());
}

template <class Scalar>
struct MarginMseGrad {
    Scalar d_pos = 0;
    Vec<Scalar> d_negs;
};

/// Gradient of margin_mse times `upstream` with respect to the student scores.
template <class Scalar>
MarginMseGrad<Scalar> margin_mse_backward(Scalar student_pos, const Vec<Scalar>& student_negs,
                                          Scalar teacher_pos, const Vec<Scalar>& teacher_negs,
                                          Scalar upstream) {
    if (student_negs.size() == 0) throw ShapeError("margin_mse_backward: no negatives");
    if (student_negs.size() != teacher_negs.size())
        throw ShapeError("margin_mse_backward: negative list length mismatch");
    const Scalar scale = upstream * Scalar(2) / Scalar(student_negs.size());
    MarginMseGrad<Scalar> g;
    g.d_negs = Vec<Scalar>::Zero(student_negs.size());
    for (Eigen::Index j = 0; j < student_negs.size(); ++j) {
        Scalar e = (student_pos - student_negs[j]) - (teacher_pos - teacher_negs[j]);
        g.d_pos += scale * e;
        g.d_negs[j] = -scale * e;
    }
    return g;
}

/// In-batch cross entropy over a B x B score matrix where entry (i, j) is
/// query i scored against the positive doc of query j; the diagonal is the
/// positive class. Returns mean_i -log softmax(row_i)[i].
template <class Scalar>
Scalar in_batch_ce(const Mat<Scalar>& scores) {
    if (scores.rows() != scores.cols())
        throw ShapeError("in_batch_ce: score matrix is " + shape_str(scores) + ", expected square");
    const Eigen::Index b = scores.rows();
    if (b < 2) throw ShapeError("in_batch_ce: needs batch size >= 2");
    Scalar total = 0;
    for (Eigen::Index i = 0; i < b; ++i) {
        Scalar row_max = scores.row(i).maxCoeff();
        Scalar sum_exp = (scores.row(i).array() - row_max).exp().sum();
        total += row_max + std::log(sum_exp) - scores(i, i);
    }
    return total / Scalar(b);
}

/// Gradient of in_batch_ce times `upstream` with respect to the score matrix:
/// (softmax(row_i) - onehot_i) * upstream / B.
template <class Scalar>
Mat<Scalar> in_batch_ce_backward(const Mat<Scalar>& scores, Scalar upstream) {
    if (scores.rows() != scores.cols())
        throw ShapeError("in_batch_ce_backward: score matrix is " + shape_str(scores) +
                         ", expected square");
    const Eigen::Index b = scores.rows();
    if (b < 2) throw ShapeError("in_batch_ce_backward: needs batch size >= 2");
    Mat<Scalar> grad = linalg::softmax_rows(scores);
    for (Eigen::Index i = 0; i < b; ++i) grad(i, i) -= Scalar(1);
    return grad * (upstream / Scalar(b));
}

}  // namespace hyperscore
