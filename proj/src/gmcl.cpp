#include "ltpfit/gmcl.hpp"

#include <string>

#include "ltpfit/error.hpp"

namespace ltpfit {

void GmclHyper::validate() const {
  if (Gamma.rows() != Q() || Gamma.cols() != Q())
    throw ParameterError("gmcl: Gamma must be Q x Q with Q = " + std::to_string(Q()));
  if (Xi.rows() != P() || Xi.cols() != P())
    throw ParameterError("gmcl: Xi must be P x P with P = " + std::to_string(P()));
  if (!(upsilon > 0.0)) throw ParameterError("gmcl: upsilon must be > 0");
}

MatrixTParams collapseGmcl(const GmclHyper& hyper, const MatrixXd& X) {
  hyper.validate();
  if (X.rows() != hyper.Q())
    throw ParameterError("gmcl: X has " + std::to_string(X.rows()) + " rows, expected Q = " +
                         std::to_string(hyper.Q()));
  MatrixTParams out;
  out.upsilon = hyper.upsilon;
  out.B = hyper.Theta * X;
  out.K = hyper.Xi;
  out.A = MatrixXd::Identity(X.cols(), X.cols()) + X.transpose() * hyper.Gamma * X;
  out.A = linalg::symmetrize(out.A);
  return out;
}

GmclUncollapser::GmclUncollapser(GmclHyper hyper, MatrixXd X)
    : hyper_(std::move(hyper)), x_(std::move(X)) {
  hyper_.validate();
  if (x_.rows() != hyper_.Q())
    throw ParameterError("gmcl: X has " + std::to_string(x_.rows()) + " rows, expected Q = " +
                         std::to_string(hyper_.Q()));
  gammaInv_ = linalg::inverseSpd(hyper_.Gamma, "gmcl: Gamma");
  MatrixXd precision = linalg::symmetrize(x_ * x_.transpose() + gammaInv_);
  gammaN_ = linalg::inverseSpd(precision, "gmcl: X X^T + Gamma^{-1}");
  gammaN_ = linalg::symmetrize(gammaN_);
  gammaNRoot_ = linalg::choleskyLower(gammaN_, "gmcl: Gamma_N");
}

GmclPosteriorParams GmclUncollapser::posterior(const MatrixXd& eta) const {
  if (eta.rows() != hyper_.P() || eta.cols() != x_.cols())
    throw ParameterError("gmcl: eta is " + std::to_string(eta.rows()) + "x" +
                         std::to_string(eta.cols()) + ", expected " + std::to_string(hyper_.P()) +
                         "x" + std::to_string(x_.cols()));
  GmclPosteriorParams post;
  post.upsilonN = hyper_.upsilon + static_cast<double>(x_.cols());
  post.GammaN = gammaN_;
  post.LambdaN = (eta * x_.transpose() + hyper_.Theta * gammaInv_) * gammaN_;
  MatrixXd resid = eta - post.LambdaN * x_;
  MatrixXd shift = post.LambdaN - hyper_.Theta;
  post.XiN = hyper_.Xi + resid * resid.transpose() + shift * gammaInv_ * shift.transpose();
  post.XiN = linalg::symmetrize(post.XiN);
  return post;
}

GmclDraw GmclUncollapser::operator()(const MatrixXd& eta, Rng& rng) const {
  GmclPosteriorParams post = posterior(eta);
  GmclDraw draw;
  draw.Sigma = sampleInverseWishart({post.XiN, post.upsilonN}, rng);
  MatrixXd sigmaRoot = linalg::psdSqrt(draw.Sigma, "gmcl: sampled Sigma");
  draw.Lambda = sampleMatrixNormalFactored(post.LambdaN, sigmaRoot, gammaNRoot_, rng);
  return draw;
}

GmclDraw uncollapseGmcl(const MatrixXd& eta, const MatrixXd& X, const GmclHyper& hyper, Rng& rng) {
  return GmclUncollapser(hyper, X)(eta, rng);
}

GmclPoint uncollapsePointGmcl(const MatrixXd& etaHat, const MatrixXd& X, const GmclHyper& hyper) {
  GmclPosteriorParams post = GmclUncollapser(hyper, X).posterior(etaHat);
  const double denom = post.upsilonN - static_cast<double>(hyper.P()) - 1.0;
  if (!(denom > 0.0))
    throw ParameterError("gmcl: posterior mean of Sigma needs upsilon + N > P + 1");
  return {post.LambdaN, post.XiN / denom};
}

}  // namespace ltpfit
