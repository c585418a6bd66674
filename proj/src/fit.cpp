#include "ltpfit/fit.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

#include "ltpfit/error.hpp"
#include "ltpfit/table_io.hpp"

namespace ltpfit {

namespace {

std::string trimmed(const std::string& s) {
  const std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct ConfigValue {
  std::string text;
  std::size_t line;
  std::string source;

  [[noreturn]] void fail(const std::string& key, const std::string& expected) const {
    throw ParseError(source + ": line " + std::to_string(line) + ": '" + key + "' expects " +
                         expected + ", got '" + text + "'",
                     line, 0);
  }

  long long integer(const std::string& key) const {
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(text.c_str(), &end, 10);
    if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE)
      fail(key, "an integer");
    return v;
  }

  double real(const std::string& key) const {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v))
      fail(key, "a real number");
    return v;
  }
};

int toInt(const ConfigValue& v, const std::string& key) {
  const long long x = v.integer(key);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
    v.fail(key, "an integer in int range");
  return static_cast<int>(x);
}

DrawSummary clrSummary(const std::vector<GmclDraw>& draws) {
  std::vector<MatrixXd> clr;
  clr.reserve(draws.size());
  for (const auto& d : draws) clr.push_back(clrFromAlr(d.Lambda));
  return summarizeDraws(clr);
}

std::vector<std::string> defaultNames(const char* prefix, Index n) {
  std::vector<std::string> out;
  for (Index i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i + 1));
  return out;
}

}  // namespace

void FitConfig::validate() const {
  if (draws < 1) throw ParameterError("fit: draws must be >= 1");
  if (!(pseudo > 0.0)) throw ParameterError("fit: pseudo must be > 0");
  if (threads < 1) throw ParameterError("fit: threads must be >= 1");
  if (priorGamma && !(*priorGamma > 0.0)) throw ParameterError("fit: prior.gamma must be > 0");
  if (priorUpsilon && !(*priorUpsilon > 0.0))
    throw ParameterError("fit: prior.upsilon must be > 0");
  opt.validate();
}

FitConfig parseFitConfig(const std::string& text, const std::string& source) {
  std::map<std::string, ConfigValue> values;
  std::istringstream in(text);
  std::string raw;
  std::size_t number = 0;
  while (std::getline(in, raw)) {
    ++number;
    const std::size_t hash = raw.find('#');
    const std::string line = trimmed(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(source + ": line " + std::to_string(number) + ": expected 'key = value'",
                       number, 0);
    const std::string key = trimmed(line.substr(0, eq));
    const std::string value = trimmed(line.substr(eq + 1));
    if (key.empty())
      throw ParseError(source + ": line " + std::to_string(number) + ": empty key", number, 0);
    if (values.count(key))
      throw ParseError(source + ": line " + std::to_string(number) + ": duplicate key '" + key +
                           "'",
                       number, 0);
    values.emplace(key, ConfigValue{value, number, source});
  }

  FitConfig cfg;
  for (const auto& [key, v] : values) {
    if (key == "draws") {
      cfg.draws = toInt(v, key);
    } else if (key == "seed") {
      const long long s = v.integer(key);
      if (s < 0) v.fail(key, "a nonnegative integer");
      cfg.seed = static_cast<std::uint64_t>(s);
    } else if (key == "pseudo") {
      cfg.pseudo = v.real(key);
    } else if (key == "threads") {
      cfg.threads = toInt(v, key);
    } else if (key == "prior.upsilon") {
      cfg.priorUpsilon = v.real(key);
    } else if (key == "prior.gamma") {
      cfg.priorGamma = v.real(key);
    } else if (key == "prior.xi_diag") {
      cfg.priorXiDiag = v.real(key);
    } else if (key == "prior.xi_offdiag") {
      cfg.priorXiOffdiag = v.real(key);
    } else if (key == "opt.memory") {
      cfg.opt.memory = toInt(v, key);
    } else if (key == "opt.grad_tol") {
      cfg.opt.gradTol = v.real(key);
    } else if (key == "opt.rel_fun_tol") {
      cfg.opt.relFunTol = v.real(key);
    } else if (key == "opt.max_iter") {
      cfg.opt.maxIter = toInt(v, key);
    } else if (key == "opt.init") {
      if (v.text == "alr") {
        cfg.opt.init = InitStrategy::kPseudoCountAlr;
      } else if (v.text == "prior") {
        cfg.opt.init = InitStrategy::kPriorMean;
      } else {
        v.fail(key, "'alr' or 'prior'");
      }
    } else {
      throw ParseError(source + ": line " + std::to_string(v.line) + ": unknown key '" + key + "'",
                       v.line, 0);
    }
  }
  cfg.opt.pseudoCount = cfg.pseudo;
  cfg.validate();
  return cfg;
}

FitConfig loadFitConfig(const std::string& path) { return parseFitConfig(readFile(path), path); }

GmclHyper priorFor(Index D, Index Q, const FitConfig& config) {
  GmclHyper h = defaultPrior(D, Q);
  if (config.priorUpsilon) h.upsilon = *config.priorUpsilon;
  const double base = h.upsilon - static_cast<double>(D);
  const double diag = config.priorXiDiag.value_or(config.priorUpsilon ? base : h.Xi(0, 0));
  const double off = config.priorXiOffdiag.value_or(diag / 2.0);
  if (!(diag > 0.0)) throw ParameterError("fit: prior Xi diagonal must be > 0 (upsilon > D)");
  h.Xi.setConstant(off);
  h.Xi.diagonal().setConstant(diag);
  if (config.priorGamma) h.Gamma *= *config.priorGamma;
  return h;
}

FitResult runFit(const Dataset& data, const FitConfig& config) {
  data.validate();
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const Index D = data.Y.D();
  const Index Q = data.X.rows();
  const GmclHyper hyper = priorFor(D, Q, config);
  LtpModel model(data.Y, collapseGmcl(hyper, data.X));
  OptimizerConfig opt = config.opt;
  opt.pseudoCount = config.pseudo;
  auto cu = cuSample(model, GmclUncollapser(hyper, data.X), config.draws, opt,
                     RngSeed{config.seed}, config.threads);

  FitResult result;
  FitReport& rep = result.report;
  std::vector<MatrixXd> lambdas;
  lambdas.reserve(cu.psi.size());
  for (const auto& d : cu.psi) lambdas.push_back(d.Lambda);
  rep.alr = summarizeDraws(lambdas);
  rep.clr = clrSummary(cu.psi);
  rep.categoryNames = data.categoryNames.empty() ? defaultNames("c", D) : data.categoryNames;
  rep.covariateNames = data.covariateNames.empty() ? defaultNames("x", Q) : data.covariateNames;
  rep.draws = config.draws;
  rep.seed = config.seed;
  const LaplaceFit& f = cu.fit;
  rep.diagnostics = {f.converged,  f.clipped,     f.objectiveNonIncreasing, f.iterations,
                     f.evaluations, f.gradSupNorm, f.logPostAtMode,          f.status};
  result.draws = std::move(cu.psi);
  result.etaHat = f.etaHat;
  rep.wallSeconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

FitReport runFit(const std::string& countsPath, const std::string& covariatesPath,
                 const std::string& configPath) {
  Dataset data;
  LabeledCounts counts = readCounts(countsPath);
  LabeledMatrix x = readTable(covariatesPath);
  data.Y = std::move(counts.counts);
  data.categoryNames = std::move(counts.rowNames);
  data.sampleNames = std::move(counts.colNames);
  data.X = std::move(x.values);
  data.covariateNames = std::move(x.rowNames);
  return runFit(data, configPath.empty() ? FitConfig{} : loadFitConfig(configPath)).report;
}

std::string statusName(LbfgsStatus status) {
  switch (status) {
    case LbfgsStatus::kGradientConverged: return "gradient_converged";
    case LbfgsStatus::kFunctionConverged: return "function_converged";
    case LbfgsStatus::kMaxIterations: return "max_iterations";
    case LbfgsStatus::kLineSearchFailed: return "line_search_failed";
  }
  return "unknown";
}

std::string formatFitReport(const FitReport& report) {
  std::string out = "coord,category,covariate,mean,sd,q025,q975\n";
  const auto emit = [&](const char* coord, const DrawSummary& s) {
    for (Index i = 0; i < s.mean.rows(); ++i)
      for (Index k = 0; k < s.mean.cols(); ++k) {
        out += coord;
        out += ',' + csvCell(report.categoryNames.at(static_cast<std::size_t>(i)));
        out += ',' + csvCell(report.covariateNames.at(static_cast<std::size_t>(k)));
        for (const MatrixXd* m : {&s.mean, &s.sd, &s.q025, &s.q975})
          out += ',' + formatReal((*m)(i, k));
        out += '\n';
      }
  };
  emit("alr", report.alr);
  emit("clr", report.clr);
  return out;
}

std::string formatFitMeta(const FitReport& report) {
  const FitDiagnostics& d = report.diagnostics;
  std::ostringstream out;
  out << "draws = " << report.draws << '\n'
      << "seed = " << report.seed << '\n'
      << "wall_seconds = " << formatReal(report.wallSeconds) << '\n'
      << "seconds_per_effective_sample = "
      << formatReal(secondsPerEffectiveSample(report.wallSeconds, report.draws)) << '\n'
      << "converged = " << (d.converged ? "true" : "false") << '\n'
      << "status = " << statusName(d.status) << '\n'
      << "iterations = " << d.iterations << '\n'
      << "evaluations = " << d.evaluations << '\n'
      << "grad_sup_norm = " << formatReal(d.gradSupNorm) << '\n'
      << "log_post_at_mode = " << formatReal(d.logPostAtMode) << '\n'
      << "hessian_clipped = " << (d.clipped ? "true" : "false") << '\n'
      << "objective_nonincreasing = " << (d.objectiveNonIncreasing ? "true" : "false") << '\n';
  return out.str();
}

void writeFitReport(const FitReport& report, const std::string& path) {
  writeFileAtomic(path, formatFitReport(report));
  writeFileAtomic(path + ".meta", formatFitMeta(report));
}

std::string formatDraws(const std::vector<GmclDraw>& draws) {
  if (draws.empty()) throw ParameterError("fit: no draws to write");
  const Index p = draws.front().Lambda.rows();
  const Index q = draws.front().Lambda.cols();
  std::string out = "# ltpfit-draws " + std::to_string(draws.size()) + " " + std::to_string(p) +
                    " " + std::to_string(q) + "\n";
  for (const auto& d : draws) {
    if (d.Lambda.rows() != p || d.Lambda.cols() != q || d.Sigma.rows() != p || d.Sigma.cols() != p)
      throw ParameterError("fit: draws differ in shape");
    bool first = true;
    for (const MatrixXd* m : {&d.Lambda, &d.Sigma})
      for (Index k = 0; k < m->size(); ++k) {
        if (!first) out += ' ';
        out += formatReal(m->data()[k]);
        first = false;
      }
    out += '\n';
  }
  return out;
}

std::vector<GmclDraw> parseDraws(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string tag, name;
  long long s = 0, p = 0, q = 0;
  if (!(in >> tag >> name >> s >> p >> q) || tag != "#" || name != "ltpfit-draws" || s < 1 ||
      p < 1 || q < 1)
    throw ParseError(source + ": missing '# ltpfit-draws S P Q' header", 1, 1);
  std::vector<GmclDraw> out;
  out.reserve(static_cast<std::size_t>(s));
  for (long long k = 0; k < s; ++k) {
    GmclDraw d{MatrixXd(p, q), MatrixXd(p, p)};
    for (MatrixXd* m : {&d.Lambda, &d.Sigma})
      for (Index i = 0; i < m->size(); ++i)
        if (!(in >> m->data()[i]))
          throw ParseError(source + ": draw " + std::to_string(k + 1) + " is truncated or malformed",
                           static_cast<std::size_t>(k + 2), 0);
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace ltpfit
