#include <cmath>

#include <gtest/gtest.h>

#include "ltpfit/error.hpp"
#include "ltpfit/gmcl.hpp"
#include "ltpfit/gmdlm.hpp"
#include "ltpfit/ltp_engine.hpp"
#include "test_support.hpp"

using namespace ltpfit;
using namespace ltpfit::testing;

namespace {

DlmSpec randomSpec(Index t, Index q, Index p, Rng& rng) {
  DlmSpec s;
  for (Index i = 0; i < t; ++i) {
    s.F.push_back(rng.standardNormal(q, 1));
    s.G.push_back(MatrixXd::Identity(q, q) + 0.3 * rng.standardNormal(q, q));
    s.W.push_back(0.5 * randomSpd(q, rng));
    s.gamma.push_back(0.5 + rng.uniform());
  }
  s.M0 = rng.standardNormal(q, p);
  s.C0 = randomSpd(q, rng);
  s.Xi = randomSpd(p, rng);
  s.upsilon = static_cast<double>(p) + 5.0;
  return s;
}

DlmSpec localLevel(Index t, double w, double gamma, double c0) {
  DlmSpec s;
  for (Index i = 0; i < t; ++i) {
    s.F.push_back(VectorXd::Ones(1));
    s.G.push_back(MatrixXd::Identity(1, 1));
    s.W.push_back(MatrixXd::Constant(1, 1, w));
    s.gamma.push_back(gamma);
  }
  s.M0 = MatrixXd::Zero(1, 1);
  s.C0 = MatrixXd::Constant(1, 1, c0);
  s.Xi = MatrixXd::Identity(1, 1);
  s.upsilon = 4.0;
  return s;
}

// Joint Gaussian of one column of the model with Sigma = 1, built from the
// independent innovations z = (Theta_0, Omega_1..Omega_T, nu_1..nu_T).
struct JointGaussian {
  std::vector<MatrixXd> state;  // Theta_t = state[t] z, t = 0..T
  MatrixXd obs;                 // eta = obs z
  MatrixXd covZ;
  Index q = 0;

  JointGaussian(const DlmSpec& s) : q(s.Q()) {
    const Index t = s.T();
    const Index dim = q * (t + 1) + t;
    covZ = MatrixXd::Zero(dim, dim);
    covZ.topLeftCorner(q, q) = s.C0;
    MatrixXd phi = MatrixXd::Zero(q, dim);
    phi.leftCols(q).setIdentity();
    state.push_back(phi);
    obs = MatrixXd::Zero(t, dim);
    for (Index i = 0; i < t; ++i) {
      const std::size_t u = static_cast<std::size_t>(i);
      covZ.block(q * (i + 1), q * (i + 1), q, q) = s.W[u];
      covZ(q * (t + 1) + i, q * (t + 1) + i) = s.gamma[u];
      phi = s.G[u] * phi;
      phi.block(0, q * (i + 1), q, q) += MatrixXd::Identity(q, q);
      state.push_back(phi);
      obs.row(i) = s.F[u].transpose() * phi;
      obs(i, q * (t + 1) + i) = 1.0;
    }
  }

  VectorXd meanZ(const VectorXd& m0) const {
    VectorXd m = VectorXd::Zero(covZ.rows());
    m.head(q) = m0;
    return m;
  }

  // Moments of Theta_k given eta_{1:n} for one column (Sigma = 1).
  void condition(Index k, Index n, const VectorXd& m0, const VectorXd& eta, VectorXd& mean,
                 MatrixXd& cov) const {
    const MatrixXd o = obs.topRows(n);
    const MatrixXd sxx = state[static_cast<std::size_t>(k)] * covZ * state[static_cast<std::size_t>(k)].transpose();
    const MatrixXd sxy = state[static_cast<std::size_t>(k)] * covZ * o.transpose();
    const MatrixXd syy = o * covZ * o.transpose();
    const VectorXd mz = meanZ(m0);
    const MatrixXd gain = sxy * syy.inverse();
    mean = state[static_cast<std::size_t>(k)] * mz + gain * (eta.head(n) - o * mz);
    cov = sxx - gain * sxy.transpose();
  }
};

MatrixXd sampleEta(const DlmSpec& s, Rng& rng) {
  const MatrixTParams t = collapseGmdlm(s);
  return sampleMatrixT(t, rng);
}

}  // namespace

TEST(CollapseGmdlm, SingleStepHandCase) {
  DlmSpec s;
  s.F = {(VectorXd(2) << 1.0, 2.0).finished()};
  s.G = {(MatrixXd(2, 2) << 1.0, 1.0, 0.0, 1.0).finished()};
  s.W = {MatrixXd::Identity(2, 2)};
  s.gamma = {0.5};
  s.M0 = (MatrixXd(2, 1) << 1.0, -1.0).finished();
  s.C0 = MatrixXd::Identity(2, 2);
  s.Xi = MatrixXd::Constant(1, 1, 2.0);
  s.upsilon = 3.0;
  const MatrixTParams t = collapseGmdlm(s);
  // G M0 = (0, -1); F^T (0, -1) = -2.
  EXPECT_NEAR(t.B(0, 0), -2.0, 1e-15);
  // R = G G^T + I = [[3, 1], [1, 2]]; F^T R F = 3 + 4 + 8 = 15; plus gamma.
  EXPECT_NEAR(t.A(0, 0), 15.5, 1e-14);
  EXPECT_EQ(t.K, s.Xi);
  EXPECT_EQ(t.upsilon, 3.0);
}

TEST(CollapseGmdlm, LocalLevelClosedForm) {
  // A_{t,s} = c0 + w min(t, s) + gamma [t == s].
  const double w = 0.7, g = 0.3, c0 = 2.0;
  const MatrixTParams t = collapseGmdlm(localLevel(6, w, g, c0));
  for (Index i = 1; i <= 6; ++i)
    for (Index j = 1; j <= 6; ++j)
      EXPECT_NEAR(t.A(i - 1, j - 1), c0 + w * static_cast<double>(std::min(i, j)) + (i == j ? g : 0.0),
                  1e-13);
  EXPECT_EQ(t.B, MatrixXd::Zero(1, 6));
}

TEST(CollapseGmdlm, MatchesJointGaussianConstruction) {
  Rng rng(1);
  for (int rep = 0; rep < 10; ++rep) {
    const DlmSpec s = randomSpec(rng.uniformInt(1, 6), rng.uniformInt(1, 3), rng.uniformInt(1, 3), rng);
    const JointGaussian jg(s);
    const MatrixTParams t = collapseGmdlm(s);
    EXPECT_LT(relErr(t.A, jg.obs * jg.covZ * jg.obs.transpose()), 1e-12) << rep;
    for (Index p = 0; p < s.P(); ++p)
      EXPECT_LT(relErr(t.B.row(p).transpose(), jg.obs * jg.meanZ(s.M0.col(p))), 1e-12) << rep;
    EXPECT_EQ(t.K, s.Xi);
  }
}

TEST(CollapseGmdlm, HierarchicalSimulationMoments) {
  Rng rng(2);
  DlmSpec s = randomSpec(3, 2, 1, rng);
  s.upsilon = 8.0;
  const MatrixTParams t = collapseGmdlm(s);
  const int n = 200000;
  MatrixXd sum = MatrixXd::Zero(3, 1), outer = MatrixXd::Zero(3, 3);
  for (int i = 0; i < n; ++i) {
    const double sigma = sampleInverseWishart({s.Xi, s.upsilon}, rng)(0, 0);
    VectorXd theta = s.M0.col(0) + std::sqrt(sigma) * MatrixXd(s.C0.llt().matrixL()) * rng.standardNormal(2, 1);
    VectorXd eta(3);
    for (std::size_t k = 0; k < 3; ++k) {
      theta = s.G[k] * theta +
              std::sqrt(sigma) * MatrixXd(s.W[k].llt().matrixL()) * rng.standardNormal(2, 1);
      eta(static_cast<Index>(k)) = s.F[k].dot(theta) + std::sqrt(sigma * s.gamma[k]) * rng.normal();
    }
    sum += eta;
    outer += eta * eta.transpose();
  }
  const VectorXd mean = sum / n;
  const MatrixXd cov = (outer - n * mean * mean.transpose()) / (n - 1);
  const MatrixXd expected = t.A * s.Xi(0, 0) / (s.upsilon - 2.0);
  EXPECT_LT((mean - t.B.row(0).transpose()).cwiseAbs().maxCoeff(),
            4.0 * std::sqrt(expected.diagonal().maxCoeff() / n));
  EXPECT_LT(relErr(cov, expected, expected.norm()), 0.05);
}

TEST(CollapseGmdlm, DiffuseObservationNoiseDominates) {
  DlmSpec s = localLevel(4, 0.5, 1e12, 1.0);
  const MatrixTParams t = collapseGmdlm(s);
  EXPECT_NEAR(t.A(0, 0) / 1e12, 1.0, 1e-10);
  EXPECT_LT(t.A(0, 1), 10.0);
}

TEST(CollapseGmdlm, RejectsInconsistentSpec) {
  Rng rng(3);
  DlmSpec s = randomSpec(3, 2, 2, rng);
  s.gamma.pop_back();
  EXPECT_THROW(collapseGmdlm(s), ParameterError);
  s = randomSpec(3, 2, 2, rng);
  s.gamma[1] = 0.0;
  EXPECT_THROW(collapseGmdlm(s), ParameterError);
  s = randomSpec(3, 2, 2, rng);
  s.F[2] = VectorXd::Ones(3);
  EXPECT_THROW(collapseGmdlm(s), ParameterError);
}

TEST(FilterGmdlm, SingleStepHandCase) {
  const DlmSpec s = localLevel(1, 1.0, 1.0, 2.0);
  const FilterState f = filterGmdlm(MatrixXd::Constant(1, 1, 4.0), s);
  // R = 3, q = 4, e = 4, S = 3/4.
  EXPECT_NEAR(f.R[0](0, 0), 3.0, 1e-15);
  EXPECT_NEAR(f.q[0], 4.0, 1e-15);
  EXPECT_NEAR(f.e[0](0), 4.0, 1e-15);
  EXPECT_NEAR(f.M[1](0, 0), 3.0, 1e-15);
  EXPECT_NEAR(f.C[1](0, 0), 3.0 - 9.0 / 4.0, 1e-15);
  EXPECT_NEAR(f.Xi[1](0, 0), 1.0 + 16.0 / 4.0, 1e-15);
  EXPECT_EQ(f.upsilon[1], 5.0);
  ASSERT_EQ(f.M.size(), 2u);
  EXPECT_EQ(f.M[0], s.M0);
}

TEST(FilterGmdlm, MatchesJointGaussianConditioning) {
  Rng rng(4);
  for (int rep = 0; rep < 10; ++rep) {
    const DlmSpec s = randomSpec(rng.uniformInt(1, 3), rng.uniformInt(1, 3), rng.uniformInt(1, 3), rng);
    const MatrixXd eta = rng.standardNormal(s.P(), s.T());
    const FilterState f = filterGmdlm(eta, s);
    const JointGaussian jg(s);
    for (Index t = 1; t <= s.T(); ++t) {
      for (Index p = 0; p < s.P(); ++p) {
        VectorXd mean;
        MatrixXd cov;
        jg.condition(t, t, s.M0.col(p), eta.row(p).transpose(), mean, cov);
        EXPECT_LT((f.M[static_cast<std::size_t>(t)].col(p) - mean).cwiseAbs().maxCoeff(), 1e-8)
            << rep << " t=" << t;
        EXPECT_LT((f.C[static_cast<std::size_t>(t)] - cov).cwiseAbs().maxCoeff(), 1e-8) << rep;
      }
    }
  }
}

TEST(FilterGmdlm, FinalScaleMatchesMarginalQuadraticForm) {
  // eta | Sigma ~ N(B, Sigma, A), so Xi_T = Xi + (eta - B) A^{-1} (eta - B)^T.
  Rng rng(5);
  const DlmSpec s = randomSpec(6, 2, 3, rng);
  const MatrixXd eta = rng.standardNormal(3, 6);
  const FilterState f = filterGmdlm(eta, s);
  const MatrixTParams t = collapseGmdlm(s);
  const MatrixXd r = eta - t.B;
  EXPECT_LT(relErr(f.Xi.back(), s.Xi + r * t.A.llt().solve(r.transpose())), 1e-10);
  EXPECT_EQ(f.upsilon.back(), s.upsilon + 6.0);
}

TEST(FilterGmdlm, RejectsWrongShape) {
  Rng rng(6);
  const DlmSpec s = randomSpec(4, 2, 3, rng);
  EXPECT_THROW(filterGmdlm(MatrixXd::Zero(3, 5), s), ParameterError);
}

TEST(SmoothGmdlm, MomentsMatchJointConditioning) {
  Rng rng(7);
  const DlmSpec s = randomSpec(3, 2, 2, rng);
  const MatrixXd eta = rng.standardNormal(2, 3);
  const FilterState f = filterGmdlm(eta, s);
  const JointGaussian jg(s);
  const MatrixXd sigmaMean = f.Xi.back() / (f.upsilon.back() - 3.0);
  const int n = 60000;
  std::vector<MatrixXd> sum(4, MatrixXd::Zero(2, 2));
  MatrixXd sigmaSum = MatrixXd::Zero(2, 2);
  double v00 = 0.0;
  VectorXd mean0;
  MatrixXd cov0;
  jg.condition(0, 3, s.M0.col(0), eta.row(0).transpose(), mean0, cov0);
  for (int i = 0; i < n; ++i) {
    const DlmDraw d = smoothGmdlm(f, s, rng);
    ASSERT_EQ(d.Theta.size(), 4u);
    for (std::size_t k = 0; k < 4; ++k) sum[k] += d.Theta[k];
    sigmaSum += d.Sigma;
    v00 += std::pow(d.Theta[0](0, 0) - mean0(0), 2);
    EXPECT_FALSE(d.pseudoInverseUsed);
  }
  for (Index k = 0; k <= 3; ++k)
    for (Index p = 0; p < 2; ++p) {
      VectorXd m;
      MatrixXd c;
      jg.condition(k, 3, s.M0.col(p), eta.row(p).transpose(), m, c);
      const double tol = 5.0 * std::sqrt(c.diagonal().maxCoeff() * sigmaMean(p, p) / n) + 1e-12;
      EXPECT_LT((sum[static_cast<std::size_t>(k)].col(p) / n - m).cwiseAbs().maxCoeff(), tol)
          << "k=" << k << " p=" << p;
    }
  EXPECT_LT(relErr(sigmaSum / n, sigmaMean, sigmaMean.norm()), 0.03);
  // Var(Theta_0[0, 0]) = cov0_00 * E[Sigma_00].
  EXPECT_NEAR(v00 / n, cov0(0, 0) * sigmaMean(0, 0), 0.04 * cov0(0, 0) * sigmaMean(0, 0));
}

TEST(SmoothGmdlm, DeterministicForSeed) {
  Rng rng(8);
  const DlmSpec s = randomSpec(4, 2, 2, rng);
  const MatrixXd eta = sampleEta(s, rng);
  const GmdlmUncollapser un(s);
  Rng a(9), b(9);
  const DlmDraw da = un(eta, a);
  const DlmDraw db = un(eta, b);
  EXPECT_EQ(da.Sigma, db.Sigma);
  for (std::size_t k = 0; k < da.Theta.size(); ++k) EXPECT_EQ(da.Theta[k], db.Theta[k]);
  EXPECT_EQ(da.Theta[2].rows(), 2);
  EXPECT_EQ(da.Theta[2].cols(), 2);
}

TEST(SmoothGmdlm, SingularStateScaleUsesPseudoInverse) {
  // Theta_0 has a degenerate second coordinate and W = 0, so every R_t is
  // singular; the draw must stay finite and keep that coordinate at M0.
  DlmSpec s;
  for (int i = 0; i < 3; ++i) {
    s.F.push_back((VectorXd(2) << 1.0, 0.0).finished());
    s.G.push_back(MatrixXd::Identity(2, 2));
    s.W.push_back(MatrixXd::Zero(2, 2));
    s.gamma.push_back(1.0);
  }
  s.M0 = (MatrixXd(2, 1) << 0.0, 3.0).finished();
  s.C0 = (MatrixXd(2, 2) << 1.0, 0.0, 0.0, 0.0).finished();
  s.Xi = MatrixXd::Identity(1, 1);
  s.upsilon = 4.0;
  Rng rng(10);
  const DlmDraw d = GmdlmUncollapser(s)(MatrixXd::Constant(1, 3, 0.5), rng);
  EXPECT_TRUE(d.pseudoInverseUsed);
  for (const auto& th : d.Theta) {
    ASSERT_TRUE(th.allFinite());
    EXPECT_NEAR(th(1, 0), 3.0, 1e-10);
  }
  // W = 0 keeps the state constant in time.
  EXPECT_NEAR(d.Theta[0](0, 0), d.Theta[3](0, 0), 1e-10);
}

TEST(GmdlmUncollapser, WorksAsCollapseUncollapseSampler) {
  Rng rng(11);
  const DlmSpec s = randomSpec(5, 2, 2, rng);
  MatrixXd y(3, 5);
  y << 4, 0, 7, 2, 1, 3, 5, 0, 1, 9, 8, 2, 2, 6, 0;
  const LtpModel model(CountMatrix(y), collapseGmdlm(s));
  const auto res = cuSample(model, gmdlmUncollapser(s), 20, {}, RngSeed{3}, 2);
  ASSERT_EQ(res.psi.size(), 20u);
  EXPECT_EQ(res.psi[0].Theta.size(), 6u);
  EXPECT_TRUE(res.fit.converged);
}

TEST(SmoothedMomentsGmdlm, MatchJointGaussianConditioning) {
  Rng rng(12);
  for (int rep = 0; rep < 10; ++rep) {
    const DlmSpec s = randomSpec(rng.uniformInt(1, 4), rng.uniformInt(1, 3), rng.uniformInt(1, 3), rng);
    const MatrixXd eta = rng.standardNormal(s.P(), s.T());
    const SmoothedMoments sm = smoothedMomentsGmdlm(filterGmdlm(eta, s), s);
    const JointGaussian jg(s);
    ASSERT_EQ(sm.mean.size(), static_cast<std::size_t>(s.T() + 1));
    for (Index t = 0; t <= s.T(); ++t)
      for (Index p = 0; p < s.P(); ++p) {
        VectorXd mean;
        MatrixXd cov;
        jg.condition(t, s.T(), s.M0.col(p), eta.row(p).transpose(), mean, cov);
        EXPECT_LT((sm.mean[static_cast<std::size_t>(t)].col(p) - mean).cwiseAbs().maxCoeff(), 1e-8);
        EXPECT_LT((sm.scale[static_cast<std::size_t>(t)] - cov).cwiseAbs().maxCoeff(), 1e-8);
      }
  }
}

TEST(SmoothGmdlm, FixedSigmaDrawsMatchSmoothedMoments) {
  Rng rng(13);
  const DlmSpec s = randomSpec(3, 2, 2, rng);
  const MatrixXd eta = rng.standardNormal(2, 3);
  const FilterState f = filterGmdlm(eta, s);
  const SmoothedMoments sm = smoothedMomentsGmdlm(f, s);
  const MatrixXd sigma = randomSpd(2, rng);
  const int n = 50000;
  MatrixXd sum = MatrixXd::Zero(2, 2);
  double v = 0.0;
  for (int i = 0; i < n; ++i) {
    const DlmDraw d = smoothGmdlm(f, s, rng, sigma);
    ASSERT_EQ(d.Sigma, sigma);
    sum += d.Theta[1];
    v += std::pow(d.Theta[1](1, 0) - sm.mean[1](1, 0), 2);
  }
  const double var = sm.scale[1](1, 1) * sigma(0, 0);
  EXPECT_LT((sum / n - sm.mean[1]).cwiseAbs().maxCoeff(),
            5.0 * std::sqrt(sm.scale[1].diagonal().maxCoeff() * sigma.diagonal().maxCoeff() / n));
  EXPECT_NEAR(v / n, var, 0.04 * var);
  EXPECT_THROW(smoothGmdlm(f, s, rng, MatrixXd::Identity(3, 3)), ParameterError);
}
