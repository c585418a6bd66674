#include "ltpfit/gmdlm.hpp"

#include <cmath>
#include <string>

#include "ltpfit/error.hpp"

namespace ltpfit {

namespace {

std::string at(std::size_t t) { return " at t=" + std::to_string(t); }

void requireShape(const MatrixXd& m, Index rows, Index cols, const std::string& what) {
  if (m.rows() != rows || m.cols() != cols)
    throw ParameterError("gmdlm: " + what + " must be " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
}

}  // namespace

void DlmSpec::validate() const {
  const std::size_t t = F.size();
  if (G.size() != t || W.size() != t || gamma.size() != t)
    throw ParameterError("gmdlm: F, G, W and gamma must all have length T");
  const Index q = Q();
  const Index p = P();
  for (std::size_t i = 0; i < t; ++i) {
    if (F[i].size() != q) throw ParameterError("gmdlm: F has the wrong length" + at(i + 1));
    requireShape(G[i], q, q, "G" + at(i + 1));
    requireShape(W[i], q, q, "W" + at(i + 1));
    if (!(gamma[i] > 0.0)) throw ParameterError("gmdlm: gamma must be > 0" + at(i + 1));
  }
  requireShape(C0, q, q, "C0");
  requireShape(Xi, p, p, "Xi");
  if (!(upsilon > 0.0)) throw ParameterError("gmdlm: upsilon must be > 0");
}

MatrixTParams collapseGmdlm(const DlmSpec& spec) {
  spec.validate();
  const Index t = spec.T();
  const Index q = spec.Q();
  MatrixTParams out;
  out.upsilon = spec.upsilon;
  out.K = spec.Xi;
  out.B.resize(spec.P(), t);
  out.A.resize(t, t);

  // Unconditional state mean and scale: mean_s = G_s mean_{s-1}, V_s = G_s V_{s-1} G_s^T + W_s.
  MatrixXd mean = spec.M0;
  MatrixXd v = spec.C0;
  for (Index s = 0; s < t; ++s) {
    const auto si = static_cast<std::size_t>(s);
    mean = spec.G[si] * mean;
    v = spec.G[si] * v * spec.G[si].transpose() + spec.W[si];
    out.B.col(s) = (spec.F[si].transpose() * mean).transpose();
    // Cov(eta_t, eta_s) scale for t >= s: F_t^T G_t ... G_{s+1} V_s F_s.
    VectorXd u = v * spec.F[si];
    out.A(s, s) = spec.F[si].dot(u) + spec.gamma[si];
    for (Index r = s + 1; r < t; ++r) {
      const auto ri = static_cast<std::size_t>(r);
      u = spec.G[ri] * u;
      out.A(r, s) = spec.F[ri].dot(u);
      out.A(s, r) = out.A(r, s);
    }
  }
  (void)q;
  return out;
}

FilterState filterGmdlm(const MatrixXd& eta, const DlmSpec& spec) {
  spec.validate();
  const Index t = spec.T();
  if (eta.rows() != spec.P() || eta.cols() != t)
    throw ParameterError("gmdlm: eta must be P x T = " + std::to_string(spec.P()) + "x" +
                         std::to_string(t));
  FilterState fs;
  const auto n = static_cast<std::size_t>(t);
  fs.a.reserve(n);
  fs.R.reserve(n);
  fs.M.reserve(n + 1);
  fs.C.reserve(n + 1);
  fs.M.push_back(spec.M0);
  fs.C.push_back(spec.C0);
  fs.Xi.push_back(spec.Xi);
  fs.upsilon.push_back(spec.upsilon);
  for (std::size_t i = 0; i < n; ++i) {
    const MatrixXd& g = spec.G[i];
    const VectorXd& fvec = spec.F[i];
    MatrixXd a = g * fs.M.back();
    MatrixXd r = linalg::symmetrize(g * fs.C.back() * g.transpose() + spec.W[i]);
    VectorXd f = (fvec.transpose() * a).transpose();
    const double q = spec.gamma[i] + fvec.dot(r * fvec);
    if (!(q > 0.0) || !std::isfinite(q))
      throw NumericalError("gmdlm: forecast scale q is not positive" + at(i + 1));
    VectorXd e = eta.col(static_cast<Index>(i)) - f;
    VectorXd s = r * fvec / q;
    fs.M.push_back(a + s * e.transpose());
    fs.C.push_back(linalg::symmetrize(r - q * s * s.transpose()));
    fs.upsilon.push_back(fs.upsilon.back() + 1.0);
    fs.Xi.push_back(linalg::symmetrize(fs.Xi.back() + e * e.transpose() / q));
    fs.a.push_back(std::move(a));
    fs.R.push_back(std::move(r));
    fs.f.push_back(std::move(f));
    fs.q.push_back(q);
    fs.e.push_back(std::move(e));
    fs.S.push_back(std::move(s));
  }
  return fs;
}

namespace {

void checkFilter(const FilterState& filter, const DlmSpec& spec) {
  const std::size_t n = filter.a.size();
  if (filter.M.size() != n + 1 || filter.C.size() != n + 1 || filter.R.size() != n ||
      spec.G.size() != n)
    throw ParameterError("gmdlm: filter state is incomplete");
}

// Z_t = C_t G_{t+1}^T R_{t+1}^{-1}; index t is 0-based so filter.R[t] is R_{t+1}.
MatrixXd smoothingGain(const FilterState& filter, const DlmSpec& spec, std::size_t t,
                       bool& pseudoInverseUsed) {
  const MatrixXd& rNext = filter.R[t];
  const MatrixXd cg = filter.C[t] * spec.G[t].transpose();
  MatrixXd z;
  Eigen::LLT<MatrixXd> llt(rNext);
  if (llt.info() == Eigen::Success) {
    z = llt.solve(cg.transpose()).transpose();
  } else {
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(rNext);
    z = cg * cod.pseudoInverse();
    pseudoInverseUsed = true;
  }
  if (!z.allFinite()) throw NumericalError("gmdlm: smoothing gain is not finite" + at(t));
  return z;
}

}  // namespace

SmoothedMoments smoothedMomentsGmdlm(const FilterState& filter, const DlmSpec& spec) {
  checkFilter(filter, spec);
  const std::size_t n = filter.a.size();
  SmoothedMoments out;
  out.mean.resize(n + 1);
  out.scale.resize(n + 1);
  out.mean[n] = filter.M[n];
  out.scale[n] = filter.C[n];
  for (std::size_t t = n; t-- > 0;) {
    const MatrixXd z = smoothingGain(filter, spec, t, out.pseudoInverseUsed);
    out.mean[t] = filter.M[t] + z * (out.mean[t + 1] - filter.a[t]);
    out.scale[t] = linalg::symmetrize(filter.C[t] -
                                      z * (filter.R[t] - out.scale[t + 1]) * z.transpose());
  }
  return out;
}

DlmDraw smoothGmdlm(const FilterState& filter, const DlmSpec& spec, Rng& rng,
                    const std::optional<MatrixXd>& sigma) {
  checkFilter(filter, spec);
  const std::size_t n = filter.a.size();
  DlmDraw draw;
  if (sigma) {
    if (sigma->rows() != spec.P() || sigma->cols() != spec.P())
      throw ParameterError("gmdlm: fixed Sigma must be P x P");
    draw.Sigma = *sigma;
  } else {
    draw.Sigma = sampleInverseWishart({filter.Xi.back(), filter.upsilon.back()}, rng);
  }
  const MatrixXd sigmaRoot = linalg::psdSqrt(draw.Sigma, "gmdlm: Sigma");
  draw.Theta.resize(n + 1);
  draw.Theta[n] = sampleMatrixNormalFactored(
      filter.M[n], linalg::psdSqrt(filter.C[n], "gmdlm: C_T"), sigmaRoot, rng);

  for (std::size_t t = n; t-- > 0;) {
    // Backward step from Theta_{t+1}; filter.a[t] and filter.R[t] are step t+1.
    const MatrixXd z = smoothingGain(filter, spec, t, draw.pseudoInverseUsed);
    MatrixXd mStar = filter.M[t] + z * (draw.Theta[t + 1] - filter.a[t]);
    MatrixXd cStar = linalg::symmetrize(filter.C[t] - z * filter.R[t] * z.transpose());
    draw.Theta[t] = sampleMatrixNormalFactored(
        mStar, linalg::psdSqrt(cStar, "gmdlm: smoothed scale C*" + at(t)), sigmaRoot, rng);
  }
  return draw;
}

GmdlmUncollapser::GmdlmUncollapser(DlmSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

DlmDraw GmdlmUncollapser::operator()(const MatrixXd& eta, Rng& rng) const {
  return smoothGmdlm(filterGmdlm(eta, spec_), spec_, rng);
}

}  // namespace ltpfit
