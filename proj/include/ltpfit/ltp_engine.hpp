#pragma once

// Collapsed-posterior inference for latent matrix-t process models:
//
//   Y ~ f(phi^{-1}(eta)),   eta ~ T(upsilon, B, K, A)
//
// The objective is the negative log collapsed posterior with additive
// constants dropped:
//
//   -log f(Y | eta) + (upsilon + N + P - 1)/2 * log|S(eta)|
//
// where the multinomial coefficient and the matrix-t normalizer are the
// omitted constants. logJointDensity() keeps both.

#include <algorithm>
#include <functional>
#include <memory>
#include <optional>
#include <thread>
#include <vector>

#include "ltpfit/error.hpp"
#include "ltpfit/lbfgs.hpp"
#include "ltpfit/matt_calculus.hpp"
#include "ltpfit/mln_obs.hpp"

namespace ltpfit {

/// Observation model hooks. Defaults are the ALR-multinomial of mln_obs.
struct LikelihoodHooks {
  std::function<double(const MatrixXd&)> logLik;
  std::function<VectorXd(const MatrixXd&)> gradient;
  std::function<BlockDiagonal(const MatrixXd&)> blockHessian;
};

LikelihoodHooks multinomialHooks(const CountMatrix& counts);

class LtpModel {
 public:
  /// Throws ParameterError unless prior is (D-1) x N for D x N counts.
  LtpModel(CountMatrix counts, MatrixTParams prior);

  const CountMatrix& counts() const { return counts_; }
  const MatrixTParams& prior() const { return kernel_->params(); }
  const MatrixTKernel& kernel() const { return *kernel_; }
  const LikelihoodHooks& likelihood() const { return likelihood_; }
  Index P() const { return prior().P(); }
  Index N() const { return prior().N(); }

 private:
  CountMatrix counts_;
  std::shared_ptr<const MatrixTKernel> kernel_;
  LikelihoodHooks likelihood_;
};

enum class InitStrategy { kPseudoCountAlr, kUserSupplied, kPriorMean };

struct OptimizerConfig {
  int memory = 10;
  double gradTol = 1e-4;
  double relFunTol = 1e-11;
  int maxIter = 10000;
  InitStrategy init = InitStrategy::kPseudoCountAlr;
  double pseudoCount = 0.5;

  void validate() const;
};

/// Factorization of the Hessian H of the negative log posterior at the mode.
/// Either the lower Cholesky factor of H, or (after eigenvalue clipping) an
/// eigendecomposition H = V diag(lambda) V^T.
struct HessianFactor {
  enum class Kind { kNone, kCholesky, kEigen };
  Kind kind = Kind::kNone;
  MatrixXd lower;         // kCholesky
  MatrixXd eigenvectors;  // kEigen
  VectorXd eigenvalues;   // kEigen, clipped
};

struct LaplaceFit {
  MatrixXd etaHat;
  HessianFactor hessFactor;
  double logPostAtMode = 0.0;  // -objective, constants dropped
  double gradSupNorm = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  bool objectiveNonIncreasing = true;
  bool clipped = false;  // eigenvalues were clipped to make H positive definite
  LbfgsStatus status = LbfgsStatus::kMaxIterations;
};

double negLogCollapsedPosterior(const MatrixXd& eta, const LtpModel& model);
VectorXd negLogCollapsedPosteriorGradient(const MatrixXd& eta, const LtpModel& model);
/// Raw Hessian (not symmetrized) of the objective.
MatrixXd negLogCollapsedPosteriorHessian(const MatrixXd& eta, const LtpModel& model);
/// log p(eta, Y) with every constant kept: full matrix-t density plus the
/// multinomial log-likelihood including its coefficient.
double logJointDensity(const MatrixXd& eta, const LtpModel& model);

/// Starting point for the optimizer under `config.init`. `user` is required
/// for kUserSupplied and ignored otherwise.
MatrixXd initialEta(const LtpModel& model, const OptimizerConfig& config,
                    const std::optional<MatrixXd>& user = std::nullopt);

LaplaceFit mapEstimate(const LtpModel& model, const OptimizerConfig& config, const MatrixXd& init);
/// Adds the Hessian factor to `fit`. Falls back to eigenvalue clipping at
/// 1e-8 * lambda_max if the Cholesky factorization fails.
LaplaceFit buildLaplace(LaplaceFit fit, const LtpModel& model);
/// S draws of eta from N(vec etaHat, H^{-1}).
std::vector<MatrixXd> sampleLaplace(const LaplaceFit& fit, int draws, Rng& rng);

/// Runs fn(i) for i in [0, n) on up to `threads` threads. Work is split into
/// contiguous chunks; results must not depend on the split.
void parallelFor(int n, int threads, const std::function<void(int)>& fn);

template <class Psi>
struct CuResult {
  LaplaceFit fit;
  std::vector<MatrixXd> eta;
  std::vector<Psi> psi;
};

/// Collapse-uncollapse sampler with a Laplace approximation to p(eta | Y).
/// `uncollapser(eta, rng)` draws Psi ~ p(Psi | eta); draw s uses its own
/// stream derived from `seed`, so output is independent of `threads`.
template <class Uncollapser>
auto cuSample(const LtpModel& model, const Uncollapser& uncollapser, int draws,
              const OptimizerConfig& config, RngSeed seed, int threads = 1,
              const std::optional<MatrixXd>& init = std::nullopt)
    -> CuResult<std::invoke_result_t<const Uncollapser&, const MatrixXd&, Rng&>> {
  using Psi = std::invoke_result_t<const Uncollapser&, const MatrixXd&, Rng&>;
  if (draws < 0) throw ParameterError("ltp: number of draws must be >= 0");
  CuResult<Psi> out;
  out.fit = buildLaplace(mapEstimate(model, config, initialEta(model, config, init)), model);
  Rng laplaceRng = Rng::stream(seed.seed, 0);
  out.eta = sampleLaplace(out.fit, draws, laplaceRng);
  std::vector<std::optional<Psi>> slots(static_cast<std::size_t>(draws));
  parallelFor(draws, threads, [&](int s) {
    Rng rng = Rng::stream(seed.seed, static_cast<std::uint64_t>(s) + 1);
    slots[static_cast<std::size_t>(s)].emplace(uncollapser(out.eta[static_cast<std::size_t>(s)], rng));
  });
  out.psi.reserve(slots.size());
  for (auto& slot : slots) out.psi.push_back(std::move(*slot));
  return out;
}

/// Radial basis function kernel alpha^2 exp(-(t - s)^2 / rho^2) with
/// 1e-10 * alpha^2 added to the diagonal.
MatrixXd rbfKernel(const VectorXd& points, double alpha, double rho);

}  // namespace ltpfit
