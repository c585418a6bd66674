#include "ltpfit/matt_calculus.hpp"

#include <cmath>
#include <string>

#include "ltpfit/error.hpp"

namespace ltpfit {

namespace {

SForm resolve(SForm form, Index p, Index n) {
  if (form != SForm::kAuto) return form;
  return p <= n ? SForm::kStandard : SForm::kSylvester;
}

}  // namespace

MatrixTKernel::MatrixTKernel(const MatrixTParams& params) : params_(params) {
  params_.validate();
  kInv_ = linalg::inverseSpd(params_.K, "matt: row scale K");
  aInv_ = linalg::inverseSpd(params_.A, "matt: column scale A");
}

void MatrixTKernel::checkEta(const MatrixXd& eta) const {
  if (eta.rows() != P() || eta.cols() != N())
    throw ParameterError("matt: eta is " + std::to_string(eta.rows()) + "x" +
                         std::to_string(eta.cols()) + ", expected " + std::to_string(P()) + "x" +
                         std::to_string(N()));
}

MattWorkspace MatrixTKernel::workspace(const MatrixXd& eta, SForm form) const {
  checkEta(eta);
  MattWorkspace ws;
  ws.form = resolve(form, P(), N());
  const MatrixXd delta = eta - params_.B;
  Eigen::PartialPivLU<MatrixXd> lu;
  if (ws.form == SForm::kStandard) {
    ws.C = aInv_ * delta.transpose();
    ws.S = MatrixXd::Identity(P(), P()) + kInv_ * (delta * ws.C);
    if (P() == 0) return ws;
    lu.compute(ws.S);
    ws.R = lu.solve(kInv_);
  } else {
    ws.C = kInv_ * delta;
    ws.S = MatrixXd::Identity(N(), N()) + aInv_ * (delta.transpose() * ws.C);
    if (N() == 0) return ws;
    lu.compute(ws.S);
    ws.R = lu.solve(aInv_);
  }
  // S is similar to I + (PSD), so its determinant is positive.
  ws.logDetS = lu.matrixLU().diagonal().cwiseAbs().array().log().sum();
  if (!std::isfinite(ws.logDetS)) throw FactorizationError("matt: S is singular");
  return ws;
}

double MatrixTKernel::logDetS(const MatrixXd& eta, SForm form) const {
  return workspace(eta, form).logDetS;
}

VectorXd MatrixTKernel::gradLogDetS(const MatrixXd& eta, SForm form) const {
  MattWorkspace ws = workspace(eta, form);
  MatrixXd g;
  if (P() == 0 || N() == 0) {
    g = MatrixXd::Zero(P(), N());
  } else if (ws.form == SForm::kStandard) {
    g = (ws.R + ws.R.transpose()) * ws.C.transpose();
  } else {
    g = ws.C * (ws.R + ws.R.transpose());
  }
  return Eigen::Map<const VectorXd>(g.data(), g.size());
}

MatrixXd MatrixTKernel::hessLogDetS(const MatrixXd& eta) const {
  MatrixXd out = MatrixXd::Zero(P() * N(), P() * N());
  addHessLogDetS(eta, 1.0, out);
  return out;
}

void MatrixTKernel::addHessLogDetS(const MatrixXd& eta, double scale, MatrixXd& out) const {
  const Index p = P();
  const Index n = N();
  if (out.rows() != p * n || out.cols() != p * n)
    throw ParameterError("matt: Hessian accumulator has the wrong size");
  if (p == 0 || n == 0) return;
  MattWorkspace ws = workspace(eta, SForm::kStandard);
  const MatrixXd& c = ws.C;  // N x P
  const MatrixXd& r = ws.R;  // P x P
  const MatrixXd rSym = r + r.transpose();
  const MatrixXd crct = c * r * c.transpose();  // N x N
  const MatrixXd rct = r * c.transpose();       // P x N
  const MatrixXd crt = c * r.transpose();       // N x P
  const MatrixXd rtct = r.transpose() * c.transpose();
  const MatrixXd cr = c * r;

  // (A^{-1} (x) (R + R^T)) - (L + L^T), L = C R C^T (x) R^T, block by block.
  for (Index l = 0; l < n; ++l) {
    for (Index j = 0; j < n; ++j) {
      out.block(j * p, l * p, p, p).noalias() +=
          scale * (aInv_(j, l) * rSym - crct(j, l) * r.transpose() - crct(l, j) * r);
    }
  }

  // - T_{N,P} [(R C^T (x) C R^T) + (R^T C^T (x) C R)], one block column at a time.
  MatrixXd kronCols(p * n, p);
  for (Index l = 0; l < n; ++l) {
    for (Index a = 0; a < p; ++a) {
      kronCols.middleRows(a * n, n).noalias() = rct(a, l) * crt + rtct(a, l) * cr;
    }
    out.middleCols(l * p, p).noalias() -= scale * vecTransposeRows(kronCols, n, p);
  }
}

MatrixXd vecTransposeRows(const MatrixXd& x, Index m, Index n) {
  if (m < 0 || n < 0 || x.rows() != m * n)
    throw ParameterError("matt: vecTransposeRows needs " + std::to_string(m) + "*" +
                         std::to_string(n) + " rows, got " + std::to_string(x.rows()));
  MatrixXd out(x.rows(), x.cols());
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) out.row(i * n + j) = x.row(j * m + i);
  return out;
}

double logDetS(const MatrixXd& eta, const MatrixTParams& params) {
  return MatrixTKernel(params).logDetS(eta);
}

VectorXd gradLogDetS(const MatrixXd& eta, const MatrixTParams& params) {
  return MatrixTKernel(params).gradLogDetS(eta);
}

MatrixXd hessLogDetS(const MatrixXd& eta, const MatrixTParams& params) {
  return MatrixTKernel(params).hessLogDetS(eta);
}

}  // namespace ltpfit
