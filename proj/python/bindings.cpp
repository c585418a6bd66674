#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ltpfit/bench.hpp"
#include "ltpfit/error.hpp"
#include "ltpfit/fit.hpp"
#include "ltpfit/gmcl.hpp"
#include "ltpfit/gmdlm.hpp"
#include "ltpfit/ltp_engine.hpp"

namespace py = pybind11;
using namespace ltpfit;

namespace {

MatrixTParams tParams(double upsilon, MatrixXd B, MatrixXd K, MatrixXd A) {
  MatrixTParams p{upsilon, std::move(B), std::move(K), std::move(A)};
  p.validate();
  return p;
}

py::dict summaryDict(const DrawSummary& s) {
  py::dict d;
  d["mean"] = s.mean;
  d["sd"] = s.sd;
  d["q025"] = s.q025;
  d["q975"] = s.q975;
  return d;
}

py::dict fitDict(const FitResult& r, bool keepDraws) {
  const FitReport& rep = r.report;
  py::dict d;
  d["alr"] = summaryDict(rep.alr);
  d["clr"] = summaryDict(rep.clr);
  d["eta_hat"] = r.etaHat;
  d["draws"] = rep.draws;
  d["seed"] = rep.seed;
  d["wall_seconds"] = rep.wallSeconds;
  d["converged"] = rep.diagnostics.converged;
  d["status"] = statusName(rep.diagnostics.status);
  d["iterations"] = rep.diagnostics.iterations;
  d["grad_sup_norm"] = rep.diagnostics.gradSupNorm;
  d["log_post_at_mode"] = rep.diagnostics.logPostAtMode;
  d["hessian_clipped"] = rep.diagnostics.clipped;
  if (keepDraws) {
    std::vector<MatrixXd> lambda, sigma;
    for (const auto& g : r.draws) {
      lambda.push_back(g.Lambda);
      sigma.push_back(g.Sigma);
    }
    d["lambda_draws"] = lambda;
    d["sigma_draws"] = sigma;
  }
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Collapsed-posterior Laplace inference for multinomial logistic-normal models";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
  py::register_exception<FactorizationError>(m, "FactorizationError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

  m.def("alr_inverse", &alrInverse, py::arg("eta"));
  m.def("alr_forward", &alrForward, py::arg("pi"));
  m.def("clr_from_alr", &clrFromAlr, py::arg("eta"));

  m.def(
      "log_density_matrix_t",
      [](const MatrixXd& eta, double upsilon, MatrixXd B, MatrixXd K, MatrixXd A) {
        return logDensityMatrixT(eta, tParams(upsilon, std::move(B), std::move(K), std::move(A)));
      },
      py::arg("eta"), py::arg("upsilon"), py::arg("B"), py::arg("K"), py::arg("A"));

  m.def(
      "sample_matrix_t",
      [](double upsilon, MatrixXd B, MatrixXd K, MatrixXd A, std::uint64_t seed) {
        Rng rng(seed);
        return sampleMatrixT(tParams(upsilon, std::move(B), std::move(K), std::move(A)), rng);
      },
      py::arg("upsilon"), py::arg("B"), py::arg("K"), py::arg("A"), py::arg("seed"));

  m.def(
      "collapsed_objective",
      [](const MatrixXd& counts, const MatrixXd& eta, double upsilon, MatrixXd B, MatrixXd K,
         MatrixXd A) {
        const LtpModel model(CountMatrix(counts), tParams(upsilon, std::move(B), std::move(K), std::move(A)));
        return py::make_tuple(negLogCollapsedPosterior(eta, model),
                              negLogCollapsedPosteriorGradient(eta, model),
                              negLogCollapsedPosteriorHessian(eta, model));
      },
      py::arg("counts"), py::arg("eta"), py::arg("upsilon"), py::arg("B"), py::arg("K"), py::arg("A"),
      "Negative log collapsed posterior (constants dropped), its gradient over vec(eta) and Hessian.");

  m.def(
      "collapse_gmcl",
      [](MatrixXd theta, MatrixXd gamma, MatrixXd xi, double upsilon, const MatrixXd& X) {
        const MatrixTParams t = collapseGmcl({std::move(theta), std::move(gamma), std::move(xi), upsilon}, X);
        return py::make_tuple(t.upsilon, t.B, t.K, t.A);
      },
      py::arg("Theta"), py::arg("Gamma"), py::arg("Xi"), py::arg("upsilon"), py::arg("X"),
      "Returns (upsilon, B, K, A) of the collapsed matrix-t.");

  m.def(
      "uncollapse_gmcl",
      [](const MatrixXd& eta, const MatrixXd& X, MatrixXd theta, MatrixXd gamma, MatrixXd xi,
         double upsilon, std::uint64_t seed) {
        Rng rng(seed);
        const GmclDraw d = uncollapseGmcl(eta, X, {std::move(theta), std::move(gamma), std::move(xi), upsilon}, rng);
        return py::make_tuple(d.Lambda, d.Sigma);
      },
      py::arg("eta"), py::arg("X"), py::arg("Theta"), py::arg("Gamma"), py::arg("Xi"),
      py::arg("upsilon"), py::arg("seed"));

  py::class_<DlmSpec>(m, "DlmSpec")
      .def(py::init<>())
      .def_readwrite("F", &DlmSpec::F)
      .def_readwrite("G", &DlmSpec::G)
      .def_readwrite("W", &DlmSpec::W)
      .def_readwrite("gamma", &DlmSpec::gamma)
      .def_readwrite("M0", &DlmSpec::M0)
      .def_readwrite("C0", &DlmSpec::C0)
      .def_readwrite("Xi", &DlmSpec::Xi)
      .def_readwrite("upsilon", &DlmSpec::upsilon);

  m.def(
      "collapse_gmdlm",
      [](const DlmSpec& spec) {
        const MatrixTParams t = collapseGmdlm(spec);
        return py::make_tuple(t.upsilon, t.B, t.K, t.A);
      },
      py::arg("spec"));

  m.def(
      "smooth_gmdlm",
      [](const MatrixXd& eta, const DlmSpec& spec, std::uint64_t seed) {
        Rng rng(seed);
        const DlmDraw d = smoothGmdlm(filterGmdlm(eta, spec), spec, rng);
        return py::make_tuple(d.Theta, d.Sigma);
      },
      py::arg("eta"), py::arg("spec"), py::arg("seed"),
      "One draw of (Theta_0..Theta_T, Sigma) given eta.");

  m.def(
      "smoothed_moments_gmdlm",
      [](const MatrixXd& eta, const DlmSpec& spec) {
        const SmoothedMoments s = smoothedMomentsGmdlm(filterGmdlm(eta, spec), spec);
        return py::make_tuple(s.mean, s.scale);
      },
      py::arg("eta"), py::arg("spec"));

  m.def(
      "simulate",
      [](Index N, Index D, Index Q, std::uint64_t seed) {
        const Dataset ds = simulateMln(N, D, Q, seed);
        py::dict d;
        d["Y"] = ds.Y.Y();
        d["X"] = ds.X;
        d["Lambda"] = ds.truth->Lambda;
        d["Sigma"] = ds.truth->Sigma;
        d["eta"] = ds.truth->eta;
        return d;
      },
      py::arg("N"), py::arg("D"), py::arg("Q"), py::arg("seed") = 1);

  m.def("zero_fraction", [](const MatrixXd& y) { return zeroFraction(CountMatrix(y)); }, py::arg("Y"));

  m.def(
      "fit",
      [](const MatrixXd& Y, const MatrixXd& X, int draws, std::uint64_t seed, double pseudo,
         int threads, std::optional<double> upsilon, std::optional<double> gamma,
         std::optional<double> xiDiag, std::optional<double> xiOffdiag, bool keepDraws) {
        Dataset ds;
        ds.Y = CountMatrix(Y);
        ds.X = X;
        FitConfig cfg;
        cfg.draws = draws;
        cfg.seed = seed;
        cfg.pseudo = pseudo;
        cfg.opt.pseudoCount = pseudo;
        cfg.threads = threads;
        cfg.priorUpsilon = upsilon;
        cfg.priorGamma = gamma;
        cfg.priorXiDiag = xiDiag;
        cfg.priorXiOffdiag = xiOffdiag;
        FitResult r;
        {
          py::gil_scoped_release release;
          r = runFit(ds, cfg);
        }
        return fitDict(r, keepDraws);
      },
      py::arg("Y"), py::arg("X"), py::arg("draws") = 2000, py::arg("seed") = 1,
      py::arg("pseudo") = 0.5, py::arg("threads") = 1, py::arg("upsilon") = py::none(),
      py::arg("gamma") = py::none(), py::arg("xi_diag") = py::none(),
      py::arg("xi_offdiag") = py::none(), py::arg("keep_draws") = false,
      "Fit Y (D x N counts) ~ X (Q x N covariates) with the collapse-uncollapse Laplace sampler.");

  m.def(
      "pclm",
      [](const MatrixXd& Y, const MatrixXd& X, int draws, std::uint64_t seed, double pseudo) {
        Rng rng(seed);
        const CountMatrix y(Y);
        const std::vector<GmclDraw> d = pclmFit(y, X, defaultPrior(y.D(), X.rows()), pseudo, draws, rng);
        std::vector<MatrixXd> lambda;
        for (const auto& g : d) lambda.push_back(g.Lambda);
        return summaryDict(summarizeDraws(lambda));
      },
      py::arg("Y"), py::arg("X"), py::arg("draws") = 2000, py::arg("seed") = 1,
      py::arg("pseudo") = 0.5, "Summary of Lambda (ALR) under the pseudo-count linear model.");
}
