#pragma once

// Simulation, evaluation metrics, the pseudo-count baseline and posterior
// predictive checks for the multinomial logistic-normal regression.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ltpfit/gmcl.hpp"
#include "ltpfit/mln_obs.hpp"

namespace ltpfit {

struct GroundTruth {
  MatrixXd Lambda;  // (D-1) x Q
  MatrixXd Sigma;   // (D-1) x (D-1)
  MatrixXd eta;     // (D-1) x N
};

struct Provenance {
  std::uint64_t seed = 0;
  Index N = 0;
  Index D = 0;
  Index Q = 0;
};

struct Dataset {
  CountMatrix Y;  // D x N
  MatrixXd X;     // Q x N
  std::optional<GroundTruth> truth;
  std::optional<Provenance> provenance;
  std::vector<std::string> categoryNames;   // D entries, or empty
  std::vector<std::string> covariateNames;  // Q entries, or empty
  std::vector<std::string> sampleNames;     // N entries, or empty

  void validate() const;
};

/// Per-sample sequencing depth range used by simulateMln.
inline constexpr long kSimDepthMin = 5000;
inline constexpr long kSimDepthMax = 10000;

/// Lambda ~ N(0, I, I), Sigma ~ IW(I, D + 10), X ~ N(0, I, I),
/// eta_j ~ N(Lambda X_j, Sigma), n_j ~ U{5000..10000},
/// Y_j ~ Multinomial(n_j, alrInverse(eta_j)).
Dataset simulateMln(Index N, Index D, Index Q, std::uint64_t seed);

/// Y_j ~ Multinomial(n, pi), drawn as a chain of binomials.
VectorXd sampleMultinomial(long n, const VectorXd& pi, Rng& rng);

/// Fraction of entries of Y that are zero, in [0, 1].
double zeroFraction(const CountMatrix& y);

double rmseLambda(const MatrixXd& estimate, const MatrixXd& truth);
double rmseSd(const MatrixXd& estimateSd, const MatrixXd& referenceSd);
double secondsPerEffectiveSample(double wallSeconds, long draws);

/// Entrywise summaries over a set of equally shaped draws. Quantiles use
/// linear interpolation between order statistics; sd uses the S - 1 divisor
/// and is 0 for a single draw.
struct DrawSummary {
  MatrixXd mean;
  MatrixXd sd;
  MatrixXd q025;
  MatrixXd q975;
};

DrawSummary summarizeDraws(const std::vector<MatrixXd>& draws);

/// Sample quantile at probability p of `values` (sorted in place).
double quantileSorted(std::vector<double>& values, double p);

/// Pseudo-count linear model: eta is fixed at the ALR of the proportions of
/// Y + pseudo, then (Lambda, Sigma) are drawn S times from p(Lambda, Sigma | eta).
std::vector<GmclDraw> pclmFit(const CountMatrix& y, const MatrixXd& X, const GmclHyper& hyper,
                              double pseudo, int draws, Rng& rng);

struct PredictiveCheck {
  MatrixXd mean;  // D x N
  MatrixXd q025;
  MatrixXd q975;
  std::vector<MatrixXd> replicates;  // filled only when requested
};

/// For each draw: eta_rep ~ N(Lambda X, Sigma) columnwise, then
/// Y_rep_j ~ Multinomial(depths_j, alrInverse(eta_rep_j)).
PredictiveCheck posteriorPredictive(const std::vector<GmclDraw>& draws, const MatrixXd& X,
                                    const std::vector<long>& depths, Rng& rng,
                                    bool keepReplicates = false);

/// Theta = 0, Gamma = I_Q, upsilon = D + 3, Xi with diagonal upsilon - D and
/// off-diagonal (upsilon - D) / 2.
GmclHyper defaultPrior(Index D, Index Q);

}  // namespace ltpfit
