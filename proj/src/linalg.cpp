#include "ltpfit/linalg.hpp"

#include <cmath>
#include <string>

#include "ltpfit/error.hpp"

namespace ltpfit::linalg {

namespace {

std::string notPd(std::string_view what) {
  return std::string(what) + " is not symmetric positive definite";
}

}  // namespace

MatrixXd choleskyLower(const MatrixXd& m, std::string_view what) {
  if (m.rows() != m.cols())
    throw ParameterError(std::string(what) + " must be square");
  if (m.rows() == 0) return MatrixXd(0, 0);
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw FactorizationError(notPd(what));
  return llt.matrixL();
}

MatrixXd psdSqrt(const MatrixXd& m, std::string_view what) {
  if (m.rows() != m.cols())
    throw ParameterError(std::string(what) + " must be square");
  if (m.rows() == 0) return MatrixXd(0, 0);
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(symmetrize(m));
  if (eig.info() != Eigen::Success) throw FactorizationError(notPd(what));
  const VectorXd& lam = eig.eigenvalues();
  double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
  if (lam.minCoeff() < -1e-8 * scale)
    throw FactorizationError(std::string(what) + " is not positive semi-definite");
  return eig.eigenvectors() * lam.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

double logDetSpd(const MatrixXd& m, std::string_view what) {
  MatrixXd l = choleskyLower(m, what);
  return 2.0 * l.diagonal().array().log().sum();
}

MatrixXd inverseSpd(const MatrixXd& m, std::string_view what) {
  if (m.rows() == 0) return MatrixXd(0, 0);
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw FactorizationError(notPd(what));
  return llt.solve(MatrixXd::Identity(m.rows(), m.cols()));
}

bool isSymmetric(const MatrixXd& m, double tol) {
  if (m.rows() != m.cols()) return false;
  double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

}  // namespace ltpfit::linalg
