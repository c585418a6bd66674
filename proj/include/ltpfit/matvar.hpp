#pragma once

// Matrix-variate distributions: matrix-normal, inverse-Wishart, matrix-t.
//
// Conventions
//   Y ~ N(M, U, V)      means vec(Y) ~ N(vec(M), V (x) U); U is the row
//                        covariance (m x m) and V the column covariance (n x n).
//   Sigma ~ IW(Xi, u)   has density proportional to
//                        |Sigma|^{-(P+u+1)/2} exp(-tr(Xi Sigma^{-1}) / 2),
//                        so E[Sigma] = Xi / (u - P - 1).
//   eta ~ T(u, B, K, A) is the matrix-t obtained from Sigma ~ IW(K, u),
//                        X ~ N(0, I, A), eta = B + chol(Sigma) X.

#include "ltpfit/linalg.hpp"
#include "ltpfit/rng.hpp"

namespace ltpfit {

struct MatrixNormalParams {
  MatrixXd M;  // m x n mean
  MatrixXd U;  // m x m row covariance
  MatrixXd V;  // n x n column covariance

  void validate() const;
};

struct InverseWishartParams {
  MatrixXd Xi;  // P x P scale
  double upsilon = 0.0;

  void validate() const;
};

struct MatrixTParams {
  double upsilon = 0.0;
  MatrixXd B;  // P x N location
  MatrixXd K;  // P x P row scale
  MatrixXd A;  // N x N column scale

  Index P() const { return B.rows(); }
  Index N() const { return B.cols(); }
  /// The exponent (upsilon + N + P - 1) / 2 multiplying log|S| in the kernel.
  double kernelScale() const { return 0.5 * (upsilon + static_cast<double>(N() + P()) - 1.0); }
  void validate() const;
};

MatrixXd sampleMatrixNormal(const MatrixNormalParams& params, Rng& rng);

/// Matrix-normal draw given precomputed square roots of U and V
/// (lu lu^T = U, lv lv^T = V). Used in hot loops.
MatrixXd sampleMatrixNormalFactored(const MatrixXd& mean, const MatrixXd& lu, const MatrixXd& lv,
                                    Rng& rng);

/// Bartlett-decomposition draw of Sigma^{-1} ~ Wishart, returned as Sigma.
/// Requires upsilon > P - 1.
MatrixXd sampleInverseWishart(const InverseWishartParams& params, Rng& rng);

/// log Gamma_p(a), the multivariate gamma function.
double logMultivariateGamma(Index p, double a);

/// Full matrix-t log density including normalizing constants.
double logDensityMatrixT(const MatrixXd& eta, const MatrixTParams& params);

MatrixXd sampleMatrixT(const MatrixTParams& params, Rng& rng);

}  // namespace ltpfit
