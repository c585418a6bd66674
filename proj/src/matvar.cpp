#include "ltpfit/matvar.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "ltpfit/error.hpp"
#include "ltpfit/matt_calculus.hpp"

namespace ltpfit {

namespace {

void requireSquare(const MatrixXd& m, Index n, const char* what) {
  if (m.rows() != n || m.cols() != n)
    throw ParameterError(std::string("matvar: ") + what + " must be " + std::to_string(n) + "x" +
                         std::to_string(n) + ", got " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
}

}  // namespace

void MatrixNormalParams::validate() const {
  requireSquare(U, M.rows(), "U");
  requireSquare(V, M.cols(), "V");
}

void InverseWishartParams::validate() const {
  requireSquare(Xi, Xi.rows(), "Xi");
  if (!(upsilon > 0.0)) throw ParameterError("matvar: inverse-Wishart upsilon must be > 0");
}

void MatrixTParams::validate() const {
  requireSquare(K, B.rows(), "K");
  requireSquare(A, B.cols(), "A");
  if (!(upsilon > 0.0)) throw ParameterError("matvar: matrix-t upsilon must be > 0");
}

MatrixXd sampleMatrixNormalFactored(const MatrixXd& mean, const MatrixXd& lu, const MatrixXd& lv,
                                    Rng& rng) {
  MatrixXd z = rng.standardNormal(mean.rows(), mean.cols());
  return mean + lu * z * lv.transpose();
}

MatrixXd sampleMatrixNormal(const MatrixNormalParams& params, Rng& rng) {
  params.validate();
  MatrixXd lu = linalg::choleskyLower(params.U, "matvar: matrix-normal row covariance U");
  MatrixXd lv = linalg::choleskyLower(params.V, "matvar: matrix-normal column covariance V");
  return sampleMatrixNormalFactored(params.M, lu, lv, rng);
}

MatrixXd sampleInverseWishart(const InverseWishartParams& params, Rng& rng) {
  params.validate();
  const Index p = params.Xi.rows();
  if (!(params.upsilon > static_cast<double>(p) - 1.0))
    throw ParameterError("matvar: inverse-Wishart sampling requires upsilon > P - 1 (upsilon=" +
                         std::to_string(params.upsilon) + ", P=" + std::to_string(p) + ")");
  if (p == 0) return MatrixXd(0, 0);

  // Bartlett factor of W ~ Wishart(I, upsilon).
  MatrixXd bartlett = MatrixXd::Zero(p, p);
  for (Index i = 0; i < p; ++i) {
    bartlett(i, i) = std::sqrt(rng.chiSquared(params.upsilon - static_cast<double>(i)));
    for (Index j = 0; j < i; ++j) bartlett(i, j) = rng.normal();
  }
  // With Xi = L L^T, Sigma^{-1} = L^{-T} W L^{-1} ~ Wishart(Xi^{-1}, upsilon), hence
  // Sigma = (L W_B^{-T})(L W_B^{-T})^T; compute root^T = W_B^{-1} L^T by a triangular solve.
  MatrixXd l = linalg::psdSqrt(params.Xi, "matvar: inverse-Wishart scale Xi");
  MatrixXd rootT = bartlett.triangularView<Eigen::Lower>().solve(l.transpose());
  MatrixXd sigma = rootT.transpose() * rootT;
  return linalg::symmetrize(sigma);
}

double logMultivariateGamma(Index p, double a) {
  double out = 0.25 * static_cast<double>(p * (p - 1)) * std::log(std::numbers::pi);
  for (Index j = 1; j <= p; ++j) out += std::lgamma(a + 0.5 * static_cast<double>(1 - j));
  return out;
}

double logDensityMatrixT(const MatrixXd& eta, const MatrixTParams& params) {
  params.validate();
  if (eta.rows() != params.P() || eta.cols() != params.N())
    throw ParameterError("matvar: eta dimensions do not match matrix-t parameters");
  const double p = static_cast<double>(params.P());
  const double n = static_cast<double>(params.N());
  const double u = params.upsilon;
  double out = logMultivariateGamma(params.P(), 0.5 * (u + n + p - 1.0)) -
               logMultivariateGamma(params.P(), 0.5 * (u + p - 1.0)) -
               0.5 * n * p * std::log(std::numbers::pi);
  out -= 0.5 * n * linalg::logDetSpd(params.K, "matvar: matrix-t row scale K");
  out -= 0.5 * p * linalg::logDetSpd(params.A, "matvar: matrix-t column scale A");
  MatrixTKernel kernel(params);
  out -= params.kernelScale() * kernel.logDetS(eta);
  return out;
}

MatrixXd sampleMatrixT(const MatrixTParams& params, Rng& rng) {
  params.validate();
  MatrixXd sigma = sampleInverseWishart({params.K, params.upsilon}, rng);
  MatrixXd c = linalg::psdSqrt(sigma, "matvar: sampled Sigma");
  MatrixXd la = linalg::choleskyLower(params.A, "matvar: matrix-t column scale A");
  MatrixXd x = rng.standardNormal(params.P(), params.N()) * la.transpose();
  return params.B + c * x;
}

}  // namespace ltpfit
