#include "hyperscore/radon.hpp"

#include <Eigen/LU>
#include <cmath>

namespace hyperscore {

RadonInstance radon_partition(const MatD& points) {
    const Eigen::Index h = points.cols();
    if (points.rows() != h + 2)
        throw ShapeError("radon_partition: " + std::to_string(points.rows()) + " points in R^" +
                         std::to_string(h) + ", need exactly h+2");
    if (!all_finite(points)) throw NumericError("radon_partition: non-finite input points");

    // Affine dependence = kernel of the (h+1) x (h+2) system whose column i
    // is [p_i; 1].
    MatD system(h + 1, h + 2);
    system.topRows(h) = points.transpose();
    system.row(h).setOnes();
    Eigen::FullPivLU<MatD> lu(system);
    lu.setThreshold(1e-12);
    MatD kernel = lu.kernel();
    if (kernel.cols() < 1 || kernel.isZero(0))
        throw NumericError("radon_partition: no affine dependence found");
    VecD lambda = kernel.col(0);

    lambda /= lambda.cwiseAbs().maxCoeff();
    const double zero_tol = 1e-9;
    Eigen::Index lead = -1;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (std::abs(lambda[i]) > zero_tol) {
            lead = i;
            break;
        }
    }
    if (lead < 0) throw NumericError("radon_partition: dependence vector is numerically zero");
    if (lambda[lead] < 0) lambda = -lambda;

    RadonInstance instance;
    instance.points = points;
    instance.coefficients = lambda;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (lambda[i] > zero_tol)
            instance.side_a.push_back(int(i));
        else
            instance.side_b.push_back(int(i));
    }
    if (instance.side_a.empty() || instance.side_b.empty())
        throw NumericError("radon_partition: degenerate one-sided dependence");
    return instance;
}

namespace {

VecD side_point(const RadonInstance& inst, bool positive) {
    const VecD& lambda = inst.coefficients;
    double total = 0;
    VecD point = VecD::Zero(inst.points.cols());
    const auto& side = positive ? inst.side_a : inst.side_b;
    for (int i : side) {
        double w = positive ? lambda[i] : -lambda[i];
        if (w <= 0) continue;  // zero-coefficient members contribute nothing
        total += w;
        point += w * inst.points.row(i).transpose();
    }
    if (total <= 0) throw NumericError("radon witness: side has no positive mass");
    return point / total;
}

}  // namespace

VecD radon_witness(const RadonInstance& instance) { return side_point(instance, true); }

double radon_witness_residual(const RadonInstance& instance) {
    return (side_point(instance, true) - side_point(instance, false)).norm();
}

}  // namespace hyperscore
