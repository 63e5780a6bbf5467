#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace hyperscore {

/// Dense row-major matrix, the storage type for every tensor in the project.
template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatF = Mat<float>;
using MatD = Mat<double>;
using VecF = Vec<float>;
using VecD = Vec<double>;

/// Shared epsilon for the parameter-free layer normalization.
inline constexpr double kLayerNormEps = 1e-5;

// ---------------------------------------------------------------------------
// Error taxonomy. The CLI maps these onto exit codes: ShapeError/ConfigError
// are usage problems (2), FormatError is bad input data (3), NumericError is
// a numerical failure such as training divergence (4).
// ---------------------------------------------------------------------------

class ShapeError : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

class FormatError : public std::runtime_error {
   public:
    enum class Code { bad_magic, bad_version, truncated, malformed };

    FormatError(Code code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    Code code() const { return code_; }

   private:
    Code code_;
};

class NumericError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

inline std::string shape_str(Eigen::Index rows, Eigen::Index cols) {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

template <class Derived>
std::string shape_str(const Eigen::MatrixBase<Derived>& m) {
    return shape_str(m.rows(), m.cols());
}

template <class Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
    return m.allFinite();
}

}  // namespace hyperscore
