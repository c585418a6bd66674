#pragma once

// Derivatives of log|S| with S = I_P + K^{-1} (eta - B) A^{-1} (eta - B)^T, the
// eta-dependent part of the matrix-t log kernel. Derivatives are taken with
// respect to vec(eta) in column-major order (entry (i, j) at index i + P j).
//
// The -(upsilon + N + P - 1)/2 factor that turns these into derivatives of the
// log density is applied by the caller (see MatrixTParams::kernelScale).

#include "ltpfit/matvar.hpp"

namespace ltpfit {

/// Which of the two Sylvester-equivalent forms of S to use.
enum class SForm {
  kAuto,       // P x P form when P <= N, N x N form otherwise
  kStandard,   // S = I_P + K^{-1} D A^{-1} D^T,  C = A^{-1} D^T,  R = S^{-1} K^{-1}
  kSylvester,  // S = I_N + A^{-1} D^T K^{-1} D,  C = K^{-1} D,    R = S^{-1} A^{-1}
};

/// Intermediate quantities at one eta. `form` records which dual was used.
struct MattWorkspace {
  SForm form = SForm::kStandard;
  MatrixXd S;
  MatrixXd C;
  MatrixXd R;
  double logDetS = 0.0;
};

/// Matrix-t kernel with K^{-1} and A^{-1} cached. Immutable after construction;
/// every method is const and safe to call concurrently.
class MatrixTKernel {
 public:
  explicit MatrixTKernel(const MatrixTParams& params);

  const MatrixTParams& params() const { return params_; }
  const MatrixXd& kInverse() const { return kInv_; }
  const MatrixXd& aInverse() const { return aInv_; }
  Index P() const { return params_.P(); }
  Index N() const { return params_.N(); }

  MattWorkspace workspace(const MatrixXd& eta, SForm form = SForm::kAuto) const;

  double logDetS(const MatrixXd& eta, SForm form = SForm::kAuto) const;
  VectorXd gradLogDetS(const MatrixXd& eta, SForm form = SForm::kAuto) const;
  /// Raw (unsymmetrized) Hessian, always in the P x P form.
  MatrixXd hessLogDetS(const MatrixXd& eta) const;

  /// Adds scale * hessLogDetS(eta) into `out` (PN x PN) without a second
  /// dense allocation.
  void addHessLogDetS(const MatrixXd& eta, double scale, MatrixXd& out) const;

 private:
  void checkEta(const MatrixXd& eta) const;

  MatrixTParams params_;
  MatrixXd kInv_;
  MatrixXd aInv_;
};

double logDetS(const MatrixXd& eta, const MatrixTParams& params);
VectorXd gradLogDetS(const MatrixXd& eta, const MatrixTParams& params);
MatrixXd hessLogDetS(const MatrixXd& eta, const MatrixTParams& params);

/// Applies the vec-transposition matrix T_{m,n} to the rows of x (mn x c):
/// row i*n + j of the result is row j*m + i of x (0-based, i < m, j < n).
MatrixXd vecTransposeRows(const MatrixXd& x, Index m, Index n);

}  // namespace ltpfit
