#include "ltpfit/bench.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ltpfit/error.hpp"

namespace ltpfit {

namespace {

void requireSameShape(const MatrixXd& a, const MatrixXd& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ParameterError(std::string("bench: ") + what + " shapes differ: " +
                         std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                         std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

double rmse(const MatrixXd& a, const MatrixXd& b, const char* what) {
  requireSameShape(a, b, what);
  if (a.size() == 0) throw ParameterError(std::string("bench: ") + what + " is empty");
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

}  // namespace

void Dataset::validate() const {
  if (Y.N() != X.cols())
    throw ParameterError("bench: counts have " + std::to_string(Y.N()) +
                         " samples but covariates have " + std::to_string(X.cols()));
  if (!categoryNames.empty() && static_cast<Index>(categoryNames.size()) != Y.D())
    throw ParameterError("bench: category name count does not match D");
  if (!covariateNames.empty() && static_cast<Index>(covariateNames.size()) != X.rows())
    throw ParameterError("bench: covariate name count does not match Q");
  if (!sampleNames.empty() && static_cast<Index>(sampleNames.size()) != Y.N())
    throw ParameterError("bench: sample name count does not match N");
}

VectorXd sampleMultinomial(long n, const VectorXd& pi, Rng& rng) {
  VectorXd y = VectorXd::Zero(pi.size());
  double mass = pi.sum();
  long left = n;
  for (Index i = 0; i + 1 < pi.size() && left > 0; ++i) {
    const double p = mass > 0.0 ? std::clamp(pi(i) / mass, 0.0, 1.0) : 0.0;
    const long k = rng.binomial(left, p);
    y(i) = static_cast<double>(k);
    left -= k;
    mass -= pi(i);
  }
  if (pi.size() > 0) y(pi.size() - 1) += static_cast<double>(left);
  return y;
}

Dataset simulateMln(Index N, Index D, Index Q, std::uint64_t seed) {
  if (N < 1 || D < 2 || Q < 1)
    throw ParameterError("bench: simulateMln needs N >= 1, D >= 2, Q >= 1");
  const Index p = D - 1;
  Rng rng(seed);
  GroundTruth truth;
  truth.Lambda = rng.standardNormal(p, Q);
  truth.Sigma = sampleInverseWishart({MatrixXd::Identity(p, p), static_cast<double>(D + 10)}, rng);
  MatrixXd x = rng.standardNormal(Q, N);
  const MatrixXd sigmaRoot = linalg::psdSqrt(truth.Sigma, "bench: simulated Sigma");
  truth.eta = truth.Lambda * x + sigmaRoot * rng.standardNormal(p, N);

  const MatrixXd pi = alrInverse(truth.eta);
  MatrixXd y(D, N);
  for (Index j = 0; j < N; ++j) {
    const long depth = rng.uniformInt(kSimDepthMin, kSimDepthMax);
    y.col(j) = sampleMultinomial(depth, pi.col(j), rng);
  }

  Dataset ds;
  ds.Y = CountMatrix(std::move(y));
  ds.X = std::move(x);
  ds.truth = std::move(truth);
  ds.provenance = Provenance{seed, N, D, Q};
  return ds;
}

double zeroFraction(const CountMatrix& y) {
  if (y.Y().size() == 0) return 0.0;
  return static_cast<double>((y.Y().array() == 0.0).count()) / static_cast<double>(y.Y().size());
}

double rmseLambda(const MatrixXd& estimate, const MatrixXd& truth) {
  return rmse(estimate, truth, "rmseLambda");
}

double rmseSd(const MatrixXd& estimateSd, const MatrixXd& referenceSd) {
  return rmse(estimateSd, referenceSd, "rmseSd");
}

double secondsPerEffectiveSample(double wallSeconds, long draws) {
  if (draws < 1) throw ParameterError("bench: seconds per effective sample needs S >= 1");
  return wallSeconds / static_cast<double>(draws);
}

double quantileSorted(std::vector<double>& values, double p) {
  if (values.empty()) throw ParameterError("bench: quantile of an empty set");
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

DrawSummary summarizeDraws(const std::vector<MatrixXd>& draws) {
  if (draws.empty()) throw ParameterError("bench: no draws to summarize");
  const Index r = draws.front().rows();
  const Index c = draws.front().cols();
  for (const auto& d : draws)
    if (d.rows() != r || d.cols() != c) throw ParameterError("bench: draws differ in shape");
  const double s = static_cast<double>(draws.size());
  DrawSummary out;
  out.mean = MatrixXd::Zero(r, c);
  for (const auto& d : draws) out.mean += d;
  out.mean /= s;
  out.sd = MatrixXd::Zero(r, c);
  if (draws.size() > 1) {
    for (const auto& d : draws) out.sd.array() += (d - out.mean).array().square();
    out.sd = (out.sd / (s - 1.0)).cwiseSqrt();
  }
  out.q025.resize(r, c);
  out.q975.resize(r, c);
  std::vector<double> buf(draws.size());
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) {
      for (std::size_t k = 0; k < draws.size(); ++k) buf[k] = draws[k](i, j);
      out.q025(i, j) = quantileSorted(buf, 0.025);
      out.q975(i, j) = quantileSorted(buf, 0.975);
    }
  return out;
}

std::vector<GmclDraw> pclmFit(const CountMatrix& y, const MatrixXd& X, const GmclHyper& hyper,
                              double pseudo, int draws, Rng& rng) {
  if (!(pseudo > 0.0)) throw ParameterError("bench: PCLM pseudo-count must be > 0");
  if (draws < 0) throw ParameterError("bench: number of draws must be >= 0");
  MatrixXd shifted = y.Y().array() + pseudo;
  shifted.array().rowwise() /= shifted.colwise().sum().array();
  const MatrixXd eta = alrForward(shifted);
  GmclUncollapser uncollapse(hyper, X);
  std::vector<GmclDraw> out;
  out.reserve(static_cast<std::size_t>(draws));
  for (int s = 0; s < draws; ++s) out.push_back(uncollapse(eta, rng));
  return out;
}

PredictiveCheck posteriorPredictive(const std::vector<GmclDraw>& draws, const MatrixXd& X,
                                    const std::vector<long>& depths, Rng& rng,
                                    bool keepReplicates) {
  if (draws.empty()) throw ParameterError("bench: posterior predictive needs at least one draw");
  if (static_cast<Index>(depths.size()) != X.cols())
    throw ParameterError("bench: depths must have one entry per sample");
  for (long n : depths)
    if (n < 0) throw ParameterError("bench: depths must be nonnegative");
  std::vector<MatrixXd> reps;
  reps.reserve(draws.size());
  for (const auto& d : draws) {
    if (d.Lambda.cols() != X.rows())
      throw ParameterError("bench: Lambda columns do not match covariate rows");
    const MatrixXd root = linalg::psdSqrt(d.Sigma, "bench: Sigma draw");
    const MatrixXd eta = d.Lambda * X + root * rng.standardNormal(d.Sigma.rows(), X.cols());
    const MatrixXd pi = alrInverse(eta);
    MatrixXd rep(pi.rows(), pi.cols());
    for (Index j = 0; j < pi.cols(); ++j)
      rep.col(j) = sampleMultinomial(depths[static_cast<std::size_t>(j)], pi.col(j), rng);
    reps.push_back(std::move(rep));
  }
  DrawSummary sum = summarizeDraws(reps);
  PredictiveCheck out{std::move(sum.mean), std::move(sum.q025), std::move(sum.q975), {}};
  if (keepReplicates) out.replicates = std::move(reps);
  return out;
}

GmclHyper defaultPrior(Index D, Index Q) {
  if (D < 2 || Q < 1) throw ParameterError("bench: defaultPrior needs D >= 2 and Q >= 1");
  const Index p = D - 1;
  GmclHyper h;
  h.upsilon = static_cast<double>(D + 3);
  const double diag = h.upsilon - static_cast<double>(D);
  h.Theta = MatrixXd::Zero(p, Q);
  h.Gamma = MatrixXd::Identity(Q, Q);
  h.Xi = MatrixXd::Constant(p, p, diag / 2.0);
  h.Xi.diagonal().setConstant(diag);
  return h;
}

}  // namespace ltpfit
