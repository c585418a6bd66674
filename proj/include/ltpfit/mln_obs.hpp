#pragma once

// Multinomial observation model in additive log-ratio (ALR) coordinates, with
// category D as the reference. eta is (D-1) x N; counts Y are D x N.

#include <vector>

#include "ltpfit/linalg.hpp"

namespace ltpfit {

/// Nonnegative integer counts stored as doubles, D x N, with cached totals.
class CountMatrix {
 public:
  CountMatrix() = default;
  /// Throws DomainError on negative or non-integer entries, ParameterError if D < 2.
  explicit CountMatrix(MatrixXd y);

  const MatrixXd& Y() const { return y_; }
  const VectorXd& totals() const { return n_; }
  Index D() const { return y_.rows(); }
  Index N() const { return y_.cols(); }

 private:
  MatrixXd y_;
  VectorXd n_;
};

/// Block-diagonal Hessian: N blocks of size (D-1) x (D-1).
struct BlockDiagonal {
  std::vector<MatrixXd> blocks;

  Index blockSize() const { return blocks.empty() ? 0 : blocks.front().rows(); }
  MatrixXd toDense() const;
  /// out += scale * this, with out dense of matching size.
  void addTo(MatrixXd& out, double scale) const;
};

MatrixXd alrInverse(const MatrixXd& eta);
/// Columns must be strictly positive; they are not required to sum to one.
MatrixXd alrForward(const MatrixXd& pi);
/// ALR_D coordinates to CLR: append a zero row then center each column.
MatrixXd clrFromAlr(const MatrixXd& m);

/// g(eta) = sum_j (sum_i eta_ij Y_ij - n_j log(1 + sum_i e^{eta_ij})), without
/// the multinomial coefficient.
double multinomLogLik(const CountMatrix& y, const MatrixXd& eta);
VectorXd multinomGradient(const CountMatrix& y, const MatrixXd& eta);
BlockDiagonal multinomHessian(const CountMatrix& y, const MatrixXd& eta);

}  // namespace ltpfit
