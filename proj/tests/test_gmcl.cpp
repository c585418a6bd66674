#include <cmath>
#include <algorithm>
#include <numeric>

#include <gtest/gtest.h>

#include "ltpfit/error.hpp"
#include "ltpfit/gmcl.hpp"
#include "test_support.hpp"

using namespace ltpfit;
using namespace ltpfit::testing;

namespace {

GmclHyper randomHyper(Index p, Index q, Rng& rng) {
  return {rng.standardNormal(p, q), randomSpd(q, rng), randomSpd(p, rng),
          static_cast<double>(p) + 4.0};
}

}  // namespace

TEST(CollapseGmcl, ScalarHandCase) {
  const GmclHyper h{MatrixXd::Constant(1, 1, 2.0), MatrixXd::Constant(1, 1, 3.0),
                    MatrixXd::Constant(1, 1, 0.5), 6.0};
  MatrixXd x(1, 2);
  x << 1.0, -2.0;
  const MatrixTParams t = collapseGmcl(h, x);
  EXPECT_EQ(t.upsilon, 6.0);
  EXPECT_NEAR(t.B(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(t.B(0, 1), -4.0, 1e-15);
  EXPECT_NEAR(t.K(0, 0), 0.5, 1e-15);
  MatrixXd a(2, 2);
  a << 4.0, -6.0, -6.0, 13.0;
  EXPECT_LT((t.A - a).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(CollapseGmcl, ZeroCovariatesGiveIdentityColumnScale) {
  Rng rng(1);
  const GmclHyper h = randomHyper(3, 2, rng);
  const MatrixTParams t = collapseGmcl(h, MatrixXd::Zero(2, 4));
  EXPECT_EQ(t.B, MatrixXd::Zero(3, 4));
  EXPECT_EQ(t.A, MatrixXd::Identity(4, 4));
  EXPECT_EQ(t.K, h.Xi);
}

TEST(CollapseGmcl, RejectsBadShapes) {
  Rng rng(2);
  GmclHyper h = randomHyper(3, 2, rng);
  EXPECT_THROW(collapseGmcl(h, MatrixXd::Zero(3, 4)), ParameterError);
  h.Gamma = MatrixXd::Identity(3, 3);
  EXPECT_THROW(collapseGmcl(h, MatrixXd::Zero(2, 4)), ParameterError);
  h = randomHyper(3, 2, rng);
  h.upsilon = 0.0;
  EXPECT_THROW(collapseGmcl(h, MatrixXd::Zero(2, 4)), ParameterError);
}

TEST(CollapseGmcl, MatchesHierarchicalSimulation) {
  // Draw Sigma, Lambda, eta from the hierarchy and compare the first two
  // moments of eta with the collapsed matrix-t: E = Theta X and
  // Cov(eta_ij, eta_kl) = Xi_ik A_jl / (upsilon - P - 1).
  Rng rng(3);
  const Index p = 2, q = 2, n = 3;
  GmclHyper h = randomHyper(p, q, rng);
  h.upsilon = 9.0;
  const MatrixXd x = rng.standardNormal(q, n);
  const MatrixTParams t = collapseGmcl(h, x);
  const int s = 200000;
  VectorXd sum = VectorXd::Zero(p * n);
  MatrixXd outer = MatrixXd::Zero(p * n, p * n);
  for (int i = 0; i < s; ++i) {
    const MatrixXd sigma = sampleInverseWishart({h.Xi, h.upsilon}, rng);
    const MatrixXd lambda = sampleMatrixNormal({h.Theta, sigma, h.Gamma}, rng);
    const MatrixXd eta = lambda * x + sampleMatrixNormal({MatrixXd::Zero(p, n), sigma, MatrixXd::Identity(n, n)}, rng);
    const VectorXd v = vec(eta);
    sum += v;
    outer += v * v.transpose();
  }
  const VectorXd mean = sum / s;
  const MatrixXd cov = (outer - s * mean * mean.transpose()) / (s - 1);
  MatrixXd expected(p * n, p * n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < p; ++i)
      for (Index l = 0; l < n; ++l)
        for (Index k = 0; k < p; ++k)
          expected(j * p + i, l * p + k) = t.K(i, k) * t.A(j, l) / (h.upsilon - p - 1);
  for (Index i = 0; i < p * n; ++i) {
    EXPECT_NEAR(mean(i), vec(t.B)(i), 4.0 * std::sqrt(expected(i, i) / s));
    for (Index j = 0; j < p * n; ++j)
      EXPECT_NEAR(cov(i, j), expected(i, j), 0.05 * std::sqrt(expected(i, i) * expected(j, j)))
          << i << "," << j;
  }
}

TEST(GmclPosterior, MatchesCompletedSquareForm) {
  // Xi_N = Xi + eta eta^T + Theta Gamma^{-1} Theta^T - Lambda_N Gamma_N^{-1} Lambda_N^T.
  Rng rng(4);
  for (int rep = 0; rep < 10; ++rep) {
    const Index p = rng.uniformInt(1, 5), q = rng.uniformInt(1, 4), n = rng.uniformInt(1, 8);
    const GmclHyper h = randomHyper(p, q, rng);
    const MatrixXd x = rng.standardNormal(q, n);
    const MatrixXd eta = rng.standardNormal(p, n);
    const GmclPosteriorParams post = GmclUncollapser(h, x).posterior(eta);
    const MatrixXd gInv = h.Gamma.inverse();
    const MatrixXd precN = x * x.transpose() + gInv;
    const MatrixXd lambdaN = (eta * x.transpose() + h.Theta * gInv) * precN.inverse();
    const MatrixXd xiN = h.Xi + eta * eta.transpose() + h.Theta * gInv * h.Theta.transpose() -
                         lambdaN * precN * lambdaN.transpose();
    EXPECT_EQ(post.upsilonN, h.upsilon + static_cast<double>(n));
    EXPECT_LT(relErr(post.GammaN, precN.inverse()), 1e-10) << rep;
    EXPECT_LT(relErr(post.LambdaN, lambdaN), 1e-10) << rep;
    EXPECT_LT(relErr(post.XiN, xiN), 1e-9) << rep;
  }
}

TEST(GmclPosterior, ScalarNormalInverseGammaOracle) {
  // P = Q = 1, X = 1: sigma^2 ~ IG(u/2, xi/2), lambda | sigma^2 ~ N(theta, g sigma^2).
  const double theta = 0.3, g = 2.0, xi = 1.5, u = 5.0;
  const VectorXd y = (VectorXd(4) << 1.0, -0.5, 2.0, 0.7).finished();
  const GmclHyper h{MatrixXd::Constant(1, 1, theta), MatrixXd::Constant(1, 1, g),
                    MatrixXd::Constant(1, 1, xi), u};
  const GmclPosteriorParams post = GmclUncollapser(h, MatrixXd::Ones(1, 4)).posterior(y.transpose());
  const double n = 4.0;
  const double ybar = y.mean();
  const double gN = 1.0 / (n + 1.0 / g);
  const double mN = gN * (n * ybar + theta / g);
  const double ss = (y.array() - ybar).square().sum();
  const double bN = xi + ss + (n / (1.0 + n * g)) * (ybar - theta) * (ybar - theta);
  EXPECT_NEAR(post.GammaN(0, 0), gN, 1e-14);
  EXPECT_NEAR(post.LambdaN(0, 0), mN, 1e-14);
  EXPECT_NEAR(post.XiN(0, 0), bN, 1e-12);
  EXPECT_EQ(post.upsilonN, u + n);
}

TEST(GmclPosterior, NoSamplesReturnsPrior) {
  Rng rng(5);
  const GmclHyper h = randomHyper(3, 2, rng);
  const GmclPosteriorParams post = GmclUncollapser(h, MatrixXd::Zero(2, 0)).posterior(MatrixXd::Zero(3, 0));
  EXPECT_EQ(post.upsilonN, h.upsilon);
  EXPECT_LT(relErr(post.GammaN, h.Gamma), 1e-12);
  EXPECT_LT(relErr(post.LambdaN, h.Theta), 1e-12);
  EXPECT_LT(relErr(post.XiN, h.Xi), 1e-12);
}

TEST(GmclPosterior, TightPriorPinsLambda) {
  Rng rng(6);
  GmclHyper h = randomHyper(3, 2, rng);
  h.Gamma = 1e-12 * MatrixXd::Identity(2, 2);
  const MatrixXd x = rng.standardNormal(2, 10);
  const GmclPosteriorParams post = GmclUncollapser(h, x).posterior(rng.standardNormal(3, 10));
  EXPECT_LT((post.LambdaN - h.Theta).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(GmclPosterior, ColumnPermutationInvariant) {
  Rng rng(7);
  const GmclHyper h = randomHyper(3, 2, rng);
  const MatrixXd x = rng.standardNormal(2, 6);
  const MatrixXd eta = rng.standardNormal(3, 6);
  std::vector<int> perm(6);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::swap(perm[1], perm[4]);
  MatrixXd xp(2, 6), etap(3, 6);
  for (int j = 0; j < 6; ++j) {
    xp.col(j) = x.col(perm[static_cast<std::size_t>(j)]);
    etap.col(j) = eta.col(perm[static_cast<std::size_t>(j)]);
  }
  const auto a = GmclUncollapser(h, x).posterior(eta);
  const auto b = GmclUncollapser(h, xp).posterior(etap);
  EXPECT_LT(relErr(a.LambdaN, b.LambdaN), 1e-12);
  EXPECT_LT(relErr(a.XiN, b.XiN), 1e-12);
  EXPECT_LT(relErr(a.GammaN, b.GammaN), 1e-12);
}

TEST(GmclPosterior, RejectsWrongEtaShape) {
  Rng rng(8);
  const GmclUncollapser un(randomHyper(3, 2, rng), rng.standardNormal(2, 4));
  EXPECT_THROW(un.posterior(MatrixXd::Zero(3, 5)), ParameterError);
  EXPECT_THROW(un.posterior(MatrixXd::Zero(2, 4)), ParameterError);
}

TEST(UncollapseGmcl, DrawMomentsMatchPosterior) {
  Rng rng(9);
  const Index p = 2, q = 2, n = 12;
  const GmclHyper h = randomHyper(p, q, rng);
  const MatrixXd x = rng.standardNormal(q, n);
  const MatrixXd eta = rng.standardNormal(p, n);
  const GmclUncollapser un(h, x);
  const GmclPosteriorParams post = un.posterior(eta);
  const MatrixXd sigmaMean = post.XiN / (post.upsilonN - p - 1);
  const int s = 100000;
  MatrixXd lambdaSum = MatrixXd::Zero(p, q), sigmaSum = MatrixXd::Zero(p, p);
  double l00sq = 0.0;
  for (int i = 0; i < s; ++i) {
    const GmclDraw d = un(eta, rng);
    ASSERT_EQ(d.Lambda.rows(), p);
    ASSERT_EQ(d.Sigma.cols(), p);
    lambdaSum += d.Lambda;
    sigmaSum += d.Sigma;
    l00sq += std::pow(d.Lambda(0, 0) - post.LambdaN(0, 0), 2);
  }
  EXPECT_LT((lambdaSum / s - post.LambdaN).cwiseAbs().maxCoeff(), 0.01);
  EXPECT_LT(relErr(sigmaSum / s, sigmaMean, sigmaMean.norm()), 0.02);
  // Var(Lambda_00) = GammaN_00 * E[Sigma_00].
  EXPECT_NEAR(l00sq / s, post.GammaN(0, 0) * sigmaMean(0, 0), 0.03 * post.GammaN(0, 0) * sigmaMean(0, 0));
}

TEST(UncollapseGmcl, FreeFunctionMatchesClassAndIsDeterministic) {
  Rng rng(10);
  const GmclHyper h = randomHyper(3, 2, rng);
  const MatrixXd x = rng.standardNormal(2, 5);
  const MatrixXd eta = rng.standardNormal(3, 5);
  Rng a(42), b(42);
  const GmclDraw da = uncollapseGmcl(eta, x, h, a);
  const GmclDraw db = GmclUncollapser(h, x)(eta, b);
  EXPECT_EQ(da.Lambda, db.Lambda);
  EXPECT_EQ(da.Sigma, db.Sigma);
}

TEST(UncollapsePointGmcl, EqualsPosteriorMeans) {
  Rng rng(11);
  const GmclHyper h = randomHyper(3, 2, rng);
  const MatrixXd x = rng.standardNormal(2, 7);
  const MatrixXd eta = rng.standardNormal(3, 7);
  const GmclPosteriorParams post = GmclUncollapser(h, x).posterior(eta);
  const GmclPoint pt = uncollapsePointGmcl(eta, x, h);
  EXPECT_LT(relErr(pt.LambdaN, post.LambdaN), 1e-14);
  EXPECT_LT(relErr(pt.SigmaMean, post.XiN / (post.upsilonN - 4.0)), 1e-14);
  GmclHyper small = h;
  small.upsilon = 0.5;
  EXPECT_THROW(uncollapsePointGmcl(MatrixXd::Zero(3, 0), MatrixXd::Zero(2, 0), small), ParameterError);
}
