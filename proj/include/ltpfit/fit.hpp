#pragma once

// End-to-end regression fit: default prior, GMCL collapse, CU sampling with a
// Laplace approximation, and ALR/CLR summaries of Lambda.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ltpfit/bench.hpp"
#include "ltpfit/ltp_engine.hpp"

namespace ltpfit {

/// Flat `key = value` configuration. Lines starting with '#' are comments.
/// Recognized keys:
///
///   draws, seed, pseudo, threads
///   prior.upsilon, prior.gamma (Gamma = gamma * I), prior.xi_diag, prior.xi_offdiag
///   opt.memory, opt.grad_tol, opt.rel_fun_tol, opt.max_iter, opt.init (alr | prior)
///
/// Unknown keys, repeated keys and badly typed values raise ParseError.
struct FitConfig {
  int draws = 2000;
  std::uint64_t seed = 1;
  double pseudo = 0.5;
  int threads = 1;
  std::optional<double> priorUpsilon;
  std::optional<double> priorGamma;
  std::optional<double> priorXiDiag;
  std::optional<double> priorXiOffdiag;
  OptimizerConfig opt;

  void validate() const;
};

FitConfig parseFitConfig(const std::string& text, const std::string& source = "<config>");
FitConfig loadFitConfig(const std::string& path);

/// defaultPrior(D, Q) with any overrides from `config` applied.
GmclHyper priorFor(Index D, Index Q, const FitConfig& config);

struct FitDiagnostics {
  bool converged = false;
  bool clipped = false;
  bool objectiveNonIncreasing = true;
  int iterations = 0;
  int evaluations = 0;
  double gradSupNorm = 0.0;
  double logPostAtMode = 0.0;
  LbfgsStatus status = LbfgsStatus::kMaxIterations;
};

struct FitReport {
  DrawSummary alr;  // (D-1) x Q
  DrawSummary clr;  // D x Q
  std::vector<std::string> categoryNames;  // D entries
  std::vector<std::string> covariateNames; // Q entries
  int draws = 0;
  std::uint64_t seed = 0;
  double wallSeconds = 0.0;
  FitDiagnostics diagnostics;
};

struct FitResult {
  FitReport report;
  std::vector<GmclDraw> draws;
  MatrixXd etaHat;
};

FitResult runFit(const Dataset& data, const FitConfig& config);
/// An empty `configPath` means the default configuration.
FitReport runFit(const std::string& countsPath, const std::string& covariatesPath,
                 const std::string& configPath);

/// Summary table: one row per (coordinate system, category, covariate).
/// Contains no timing, so identical inputs give identical bytes.
std::string formatFitReport(const FitReport& report);
/// `key = value` lines with wall-clock time and optimizer diagnostics.
std::string formatFitMeta(const FitReport& report);
/// Writes the table to `path` and the diagnostics to `path + ".meta"`.
void writeFitReport(const FitReport& report, const std::string& path);

/// Posterior draws of (Lambda, Sigma) as text, for later predictive checks.
std::string formatDraws(const std::vector<GmclDraw>& draws);
std::vector<GmclDraw> parseDraws(const std::string& text, const std::string& source = "<draws>");

std::string statusName(LbfgsStatus status);

}  // namespace ltpfit
