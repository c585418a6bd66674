#include "ltpfit/ltp_engine.hpp"

#include <cmath>
#include <exception>
#include <mutex>
#include <string>

namespace ltpfit {

LikelihoodHooks multinomialHooks(const CountMatrix& counts) {
  LikelihoodHooks hooks;
  hooks.logLik = [counts](const MatrixXd& eta) { return multinomLogLik(counts, eta); };
  hooks.gradient = [counts](const MatrixXd& eta) { return multinomGradient(counts, eta); };
  hooks.blockHessian = [counts](const MatrixXd& eta) { return multinomHessian(counts, eta); };
  return hooks;
}

LtpModel::LtpModel(CountMatrix counts, MatrixTParams prior) : counts_(std::move(counts)) {
  prior.validate();
  if (prior.P() != counts_.D() - 1 || prior.N() != counts_.N())
    throw ParameterError("ltp: prior is " + std::to_string(prior.P()) + "x" +
                         std::to_string(prior.N()) + " but counts need " +
                         std::to_string(counts_.D() - 1) + "x" + std::to_string(counts_.N()));
  kernel_ = std::make_shared<const MatrixTKernel>(prior);
  likelihood_ = multinomialHooks(counts_);
}

void OptimizerConfig::validate() const {
  if (memory < 1) throw ParameterError("ltp: optimizer memory must be >= 1");
  if (!(gradTol > 0.0) || !(relFunTol > 0.0))
    throw ParameterError("ltp: optimizer tolerances must be positive");
  if (maxIter < 1) throw ParameterError("ltp: optimizer maxIter must be >= 1");
  if (init == InitStrategy::kPseudoCountAlr && !(pseudoCount > 0.0))
    throw ParameterError("ltp: pseudo-count must be positive");
}

double negLogCollapsedPosterior(const MatrixXd& eta, const LtpModel& model) {
  return -model.likelihood().logLik(eta) +
         model.prior().kernelScale() * model.kernel().logDetS(eta);
}

VectorXd negLogCollapsedPosteriorGradient(const MatrixXd& eta, const LtpModel& model) {
  VectorXd g = model.prior().kernelScale() * model.kernel().gradLogDetS(eta);
  g -= model.likelihood().gradient(eta);
  return g;
}

MatrixXd negLogCollapsedPosteriorHessian(const MatrixXd& eta, const LtpModel& model) {
  const Index d = model.P() * model.N();
  MatrixXd h = MatrixXd::Zero(d, d);
  model.kernel().addHessLogDetS(eta, model.prior().kernelScale(), h);
  model.likelihood().blockHessian(eta).addTo(h, -1.0);
  return h;
}

double logJointDensity(const MatrixXd& eta, const LtpModel& model) {
  const MatrixXd& y = model.counts().Y();
  double coef = 0.0;
  for (Index j = 0; j < y.cols(); ++j) {
    coef += std::lgamma(model.counts().totals()(j) + 1.0);
    for (Index i = 0; i < y.rows(); ++i) coef -= std::lgamma(y(i, j) + 1.0);
  }
  return coef + model.likelihood().logLik(eta) + logDensityMatrixT(eta, model.prior());
}

MatrixXd initialEta(const LtpModel& model, const OptimizerConfig& config,
                    const std::optional<MatrixXd>& user) {
  switch (config.init) {
    case InitStrategy::kUserSupplied:
      if (!user) throw ParameterError("ltp: user-supplied initialization requested but none given");
      if (user->rows() != model.P() || user->cols() != model.N())
        throw ParameterError("ltp: initial eta has the wrong shape");
      return *user;
    case InitStrategy::kPriorMean:
      return model.prior().B;
    case InitStrategy::kPseudoCountAlr:
    default: {
      MatrixXd shifted = model.counts().Y().array() + config.pseudoCount;
      shifted.array().rowwise() /= shifted.colwise().sum().array();
      return alrForward(shifted);
    }
  }
}

LaplaceFit mapEstimate(const LtpModel& model, const OptimizerConfig& config, const MatrixXd& init) {
  config.validate();
  if (init.rows() != model.P() || init.cols() != model.N())
    throw ParameterError("ltp: initial eta has the wrong shape");
  if (!init.allFinite()) throw NumericalError("ltp: initial eta is not finite");
  const Index p = model.P();
  const Index n = model.N();

  Objective objective = [&](const VectorXd& x, VectorXd& grad) {
    Eigen::Map<const MatrixXd> eta(x.data(), p, n);
    MatrixXd e = eta;
    grad = negLogCollapsedPosteriorGradient(e, model);
    return negLogCollapsedPosterior(e, model);
  };

  VectorXd x0 = Eigen::Map<const VectorXd>(init.data(), init.size());
  {
    VectorXd g0(x0.size());
    double f0 = objective(x0, g0);
    if (!std::isfinite(f0) || !g0.allFinite())
      throw NumericalError("ltp: objective is not finite at the initial eta");
  }

  LbfgsOptions opt;
  opt.memory = config.memory;
  opt.gradTol = config.gradTol;
  opt.relFunTol = config.relFunTol;
  opt.maxIter = config.maxIter;
  LbfgsResult res = minimizeLbfgs(objective, x0, opt);

  LaplaceFit fit;
  fit.etaHat = Eigen::Map<const MatrixXd>(res.x.data(), p, n);
  fit.logPostAtMode = -res.f;
  fit.gradSupNorm = res.grad.size() ? res.grad.cwiseAbs().maxCoeff() : 0.0;
  fit.iterations = res.iterations;
  fit.evaluations = res.evaluations;
  fit.status = res.status;
  fit.converged = fit.gradSupNorm <= config.gradTol;
  fit.objectiveNonIncreasing = res.objectiveNonIncreasing;
  return fit;
}

LaplaceFit buildLaplace(LaplaceFit fit, const LtpModel& model) {
  if (fit.etaHat.rows() != model.P() || fit.etaHat.cols() != model.N())
    throw ParameterError("ltp: fit has no mode of the right shape");
  const auto assemble = [&] {
    MatrixXd h = negLogCollapsedPosteriorHessian(fit.etaHat, model);
    const Index d = h.rows();
    for (Index j = 0; j < d; ++j)
      for (Index i = j + 1; i < d; ++i) {
        double v = 0.5 * (h(i, j) + h(j, i));
        h(i, j) = v;
        h(j, i) = v;
      }
    return h;
  };

  fit.clipped = false;
  MatrixXd h = assemble();
  {
    // Factor in place; at P*N in the thousands a second dense copy is costly.
    Eigen::LLT<Eigen::Ref<MatrixXd>> llt(h);
    if (llt.info() == Eigen::Success) {
      h.triangularView<Eigen::StrictlyUpper>().setZero();
      fit.hessFactor.kind = HessianFactor::Kind::kCholesky;
      fit.hessFactor.lower = std::move(h);
      fit.hessFactor.eigenvectors.resize(0, 0);
      fit.hessFactor.eigenvalues.resize(0);
      return fit;
    }
  }
  h = assemble();
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(h);
  if (eig.info() != Eigen::Success) throw NumericalError("ltp: Hessian eigendecomposition failed");
  VectorXd lam = eig.eigenvalues();
  const double lamMax = lam.size() ? lam.maxCoeff() : 0.0;
  if (!(lamMax > 0.0)) throw NumericalError("ltp: Hessian has no positive eigenvalue");
  const double floor = 1e-8 * lamMax;
  for (Index i = 0; i < lam.size(); ++i)
    if (lam(i) < floor) {
      lam(i) = floor;
      fit.clipped = true;
    }
  fit.hessFactor.kind = HessianFactor::Kind::kEigen;
  fit.hessFactor.lower.resize(0, 0);
  fit.hessFactor.eigenvectors = eig.eigenvectors();
  fit.hessFactor.eigenvalues = lam;
  return fit;
}

std::vector<MatrixXd> sampleLaplace(const LaplaceFit& fit, int draws, Rng& rng) {
  if (draws < 0) throw ParameterError("ltp: number of draws must be >= 0");
  const Index p = fit.etaHat.rows();
  const Index n = fit.etaHat.cols();
  const Index d = p * n;
  std::vector<MatrixXd> out;
  if (draws == 0) return out;
  if (fit.hessFactor.kind == HessianFactor::Kind::kNone)
    throw ParameterError("ltp: sampleLaplace needs a fit with a Hessian factor");
  MatrixXd z = rng.standardNormal(d, draws);
  if (fit.hessFactor.kind == HessianFactor::Kind::kCholesky) {
    // H = L L^T, so L^{-T} z has covariance H^{-1}.
    fit.hessFactor.lower.triangularView<Eigen::Lower>().transpose().solveInPlace(z);
  } else {
    z = fit.hessFactor.eigenvectors *
        (fit.hessFactor.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal() * z);
  }
  out.reserve(static_cast<std::size_t>(draws));
  for (int s = 0; s < draws; ++s) {
    MatrixXd eta = fit.etaHat;
    eta += Eigen::Map<const MatrixXd>(z.col(s).data(), p, n);
    out.push_back(std::move(eta));
  }
  return out;
}

void parallelFor(int n, int threads, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  threads = std::clamp(threads, 1, n);
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    const int lo = static_cast<int>(static_cast<long>(n) * t / threads);
    const int hi = static_cast<int>(static_cast<long>(n) * (t + 1) / threads);
    pool.emplace_back([&, lo, hi] {
      try {
        for (int i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

MatrixXd rbfKernel(const VectorXd& points, double alpha, double rho) {
  if (!(alpha > 0.0) || !(rho > 0.0))
    throw ParameterError("ltp: rbfKernel needs alpha > 0 and rho > 0");
  const Index t = points.size();
  const double a2 = alpha * alpha;
  MatrixXd k(t, t);
  for (Index i = 0; i < t; ++i)
    for (Index j = 0; j < t; ++j) {
      const double d = (points(i) - points(j)) / rho;
      k(i, j) = a2 * std::exp(-d * d);
    }
  k.diagonal().array() += 1e-10 * a2;
  return k;
}

}  // namespace ltpfit
