#pragma once

// Limited-memory BFGS with a Wolfe line search.
//
// The line search accepts a step under the strong Wolfe conditions, or under
// the approximate Wolfe conditions of Hager and Zhang once the objective
// difference is lost in rounding. The latter matters for likelihoods summed
// over millions of counts, where f is O(1e6) but the gradient still carries
// full relative precision.

#include <functional>

#include "ltpfit/linalg.hpp"

namespace ltpfit {

struct LbfgsOptions {
  int memory = 10;
  double gradTol = 1e-4;     // stop when ||grad||_inf <= gradTol
  double relFunTol = 1e-11;  // flat when |f_k - f_{k+1}| <= relFunTol * max(1, |f_0 - f_{k+1}|)
  int maxIter = 10000;
  int maxLineSearch = 40;
  double wolfeC1 = 1e-4;
  double wolfeC2 = 0.9;
};

enum class LbfgsStatus {
  kGradientConverged,
  kFunctionConverged,
  kMaxIterations,
  kLineSearchFailed,
};

struct LbfgsResult {
  VectorXd x;
  double f = 0.0;
  VectorXd grad;
  int iterations = 0;
  int evaluations = 0;
  LbfgsStatus status = LbfgsStatus::kMaxIterations;
  bool objectiveNonIncreasing = true;
};

/// f(x, grad) returns the objective and writes the gradient.
using Objective = std::function<double(const VectorXd&, VectorXd&)>;

LbfgsResult minimizeLbfgs(const Objective& f, const VectorXd& x0, const LbfgsOptions& options);

}  // namespace ltpfit
