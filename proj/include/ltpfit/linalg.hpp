#pragma once

#include <string_view>

#include <Eigen/Dense>

namespace ltpfit {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace linalg {

/// Lower Cholesky factor of a symmetric positive definite matrix. Throws
/// FactorizationError naming `what` (e.g. "matvar: U") on failure.
MatrixXd choleskyLower(const MatrixXd& m, std::string_view what);

/// Same as choleskyLower but accepts positive semi-definite input: falls back
/// to an eigen square root with negative eigenvalues zeroed. The result R
/// satisfies R R^T = m (up to the clipping) but is not triangular on fallback.
MatrixXd psdSqrt(const MatrixXd& m, std::string_view what);

/// log|m| for symmetric positive definite m.
double logDetSpd(const MatrixXd& m, std::string_view what);

/// Inverse of a symmetric positive definite matrix via Cholesky.
MatrixXd inverseSpd(const MatrixXd& m, std::string_view what);

inline MatrixXd symmetrize(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

bool isSymmetric(const MatrixXd& m, double tol);

}  // namespace linalg
}  // namespace ltpfit
