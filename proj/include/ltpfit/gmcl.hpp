#pragma once

// Conjugate multivariate linear model behind an arbitrary link:
//
//   eta_j ~ N(Lambda X_j, Sigma),  Lambda ~ N(Theta, Sigma, Gamma),  Sigma ~ IW(Xi, upsilon)
//
// Marginalizing Lambda and Sigma gives eta ~ T(upsilon, Theta X, Xi, I_N + X^T Gamma X).

#include "ltpfit/matvar.hpp"

namespace ltpfit {

struct GmclHyper {
  MatrixXd Theta;  // P x Q
  MatrixXd Gamma;  // Q x Q
  MatrixXd Xi;     // P x P
  double upsilon = 0.0;

  Index P() const { return Theta.rows(); }
  Index Q() const { return Theta.cols(); }
  void validate() const;
};

struct GmclPosteriorParams {
  double upsilonN = 0.0;
  MatrixXd GammaN;   // Q x Q
  MatrixXd LambdaN;  // P x Q
  MatrixXd XiN;      // P x P
};

struct GmclDraw {
  MatrixXd Lambda;  // P x Q
  MatrixXd Sigma;   // P x P
};

MatrixTParams collapseGmcl(const GmclHyper& hyper, const MatrixXd& X);

/// Conditional posterior p(Lambda, Sigma | eta) for fixed X. Everything that
/// does not depend on eta (Gamma^{-1}, Gamma_N and its factor) is computed
/// once at construction, so one instance serves a whole batch of draws.
class GmclUncollapser {
 public:
  GmclUncollapser(GmclHyper hyper, MatrixXd X);

  GmclPosteriorParams posterior(const MatrixXd& eta) const;
  GmclDraw operator()(const MatrixXd& eta, Rng& rng) const;

  const GmclHyper& hyper() const { return hyper_; }
  const MatrixXd& X() const { return x_; }

 private:
  GmclHyper hyper_;
  MatrixXd x_;
  MatrixXd gammaInv_;
  MatrixXd gammaN_;
  MatrixXd gammaNRoot_;
};

GmclDraw uncollapseGmcl(const MatrixXd& eta, const MatrixXd& X, const GmclHyper& hyper, Rng& rng);

struct GmclPoint {
  MatrixXd LambdaN;
  MatrixXd SigmaMean;  // Xi_N / (upsilon_N - P - 1)
};

GmclPoint uncollapsePointGmcl(const MatrixXd& etaHat, const MatrixXd& X, const GmclHyper& hyper);

}  // namespace ltpfit
