#pragma once

// Matrix-variate dynamic linear model behind an arbitrary link. For t = 1..T:
//
//   eta_t^T   = F_t^T Theta_t + nu_t^T,       nu_t ~ N(0, gamma_t Sigma)
//   Theta_t   = G_t Theta_{t-1} + Omega_t,    Omega_t ~ N(0, W_t, Sigma)
//   Theta_0   ~ N(M_0, C_0, Sigma),           Sigma ~ IW(Xi, upsilon)
//
// Theta_t is Q x P; eta_t is column t of the P x T matrix eta. Time is 1-based
// in the model; vectors below store step t at index t - 1 unless noted.

#include <optional>
#include <vector>

#include "ltpfit/matvar.hpp"

namespace ltpfit {

struct DlmSpec {
  std::vector<VectorXd> F;   // T vectors of length Q
  std::vector<MatrixXd> G;   // T matrices Q x Q
  std::vector<MatrixXd> W;   // T matrices Q x Q
  std::vector<double> gamma; // T positive scalars
  MatrixXd M0;               // Q x P
  MatrixXd C0;               // Q x Q
  MatrixXd Xi;               // P x P
  double upsilon = 0.0;

  Index T() const { return static_cast<Index>(F.size()); }
  Index Q() const { return M0.rows(); }
  Index P() const { return M0.cols(); }
  void validate() const;
};

/// Forward-filtering output. Quantities indexed 0..T (M, C, Xi, upsilon)
/// include the prior at index 0; the per-step ones (a, R, f, q, e, S) hold
/// step t at index t - 1.
struct FilterState {
  std::vector<MatrixXd> a;  // prior state mean  G_t M_{t-1}            (Q x P)
  std::vector<MatrixXd> R;  // prior state scale G_t C_{t-1} G_t^T + W_t (Q x Q)
  std::vector<VectorXd> f;  // forecast mean                             (P)
  std::vector<double> q;    // forecast scale
  std::vector<VectorXd> e;  // forecast error                            (P)
  std::vector<VectorXd> S;  // adaptive vector R_t F_t / q_t              (Q)
  std::vector<MatrixXd> M;  // posterior state mean                      (Q x P)
  std::vector<MatrixXd> C;  // posterior state scale                     (Q x Q)
  std::vector<MatrixXd> Xi;
  std::vector<double> upsilon;
};

struct DlmDraw {
  std::vector<MatrixXd> Theta;  // index t = 0..T, each Q x P
  MatrixXd Sigma;
  bool pseudoInverseUsed = false;  // some R_{t+1} was singular
};

MatrixTParams collapseGmdlm(const DlmSpec& spec);

FilterState filterGmdlm(const MatrixXd& eta, const DlmSpec& spec);

/// Smoothed moments given eta and Sigma: Theta_t | eta, Sigma ~ N(mean[t], scale[t], Sigma),
/// t = 0..T.
struct SmoothedMoments {
  std::vector<MatrixXd> mean;   // Q x P
  std::vector<MatrixXd> scale;  // Q x Q
  bool pseudoInverseUsed = false;
};

SmoothedMoments smoothedMomentsGmdlm(const FilterState& filter, const DlmSpec& spec);

/// One joint draw from p(Theta_{0:T}, Sigma | eta) by backward sampling, or
/// from p(Theta_{0:T} | eta, Sigma) when `sigma` is given.
DlmDraw smoothGmdlm(const FilterState& filter, const DlmSpec& spec, Rng& rng,
                    const std::optional<MatrixXd>& sigma = std::nullopt);

/// Filter-then-smooth conditional sampler, callable as cuSample's uncollapser.
class GmdlmUncollapser {
 public:
  explicit GmdlmUncollapser(DlmSpec spec);
  DlmDraw operator()(const MatrixXd& eta, Rng& rng) const;
  const DlmSpec& spec() const { return spec_; }

 private:
  DlmSpec spec_;
};

inline GmdlmUncollapser gmdlmUncollapser(DlmSpec spec) { return GmdlmUncollapser(std::move(spec)); }

}  // namespace ltpfit
