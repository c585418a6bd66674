// ltpfit: fit, simulate, benchmark and check multinomial logistic-normal
// regressions.
//
// Exit status: 0 success, 2 bad input or configuration, 3 numerical failure.

#include <array>
#include <chrono>
#include <optional>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ltpfit/bench.hpp"
#include "ltpfit/error.hpp"
#include "ltpfit/fit.hpp"
#include "ltpfit/table_io.hpp"

namespace {

using namespace ltpfit;

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> draws;
  std::optional<double> pseudo;
  std::optional<int> threads;

  void addTo(CLI::App* app) {
    app->add_option("--seed", seed, "Random seed");
    app->add_option("--draws", draws, "Number of posterior draws S");
    app->add_option("--pseudo", pseudo, "Pseudo-count for initialization and PCLM");
    app->add_option("--threads", threads, "Worker threads for uncollapsing");
  }

  void apply(FitConfig& cfg) const {
    if (seed) cfg.seed = *seed;
    if (draws) cfg.draws = *draws;
    if (pseudo) cfg.pseudo = *pseudo;
    if (threads) cfg.threads = *threads;
    cfg.opt.pseudoCount = cfg.pseudo;
  }
};

Dataset loadDataset(const std::string& countsPath, const std::string& covariatesPath) {
  Dataset data;
  LabeledCounts counts = readCounts(countsPath);
  LabeledMatrix x = readTable(covariatesPath);
  data.Y = std::move(counts.counts);
  data.categoryNames = std::move(counts.rowNames);
  data.sampleNames = std::move(counts.colNames);
  data.X = std::move(x.values);
  data.covariateNames = std::move(x.rowNames);
  data.validate();
  return data;
}

void runFitCommand(const std::string& countsPath, const std::string& covariatesPath,
                   const std::string& configPath, const Overrides& ov, const std::string& out,
                   const std::string& drawsOut) {
  FitConfig cfg = configPath.empty() ? FitConfig{} : loadFitConfig(configPath);
  ov.apply(cfg);
  const Dataset data = loadDataset(countsPath, covariatesPath);
  FitResult res = runFit(data, cfg);
  writeFitReport(res.report, out);
  if (!drawsOut.empty()) writeFileAtomic(drawsOut, formatDraws(res.draws));
  std::cerr << "fit: " << res.report.draws << " draws in " << res.report.wallSeconds << " s, "
            << "converged=" << (res.report.diagnostics.converged ? "true" : "false") << '\n';
}

void runSimulateCommand(long n, long d, long q, const Overrides& ov, const std::string& prefix) {
  const std::uint64_t seed = ov.seed.value_or(1);
  const Dataset data = simulateMln(n, d, q, seed);
  writeTable(prefix + "_counts.csv", {data.Y.Y(), {}, {}});
  writeTable(prefix + "_covariates.csv", {data.X, {}, {}});
  writeTable(prefix + "_lambda.csv", {data.truth->Lambda, {}, {}});
  writeTable(prefix + "_sigma.csv", {data.truth->Sigma, {}, {}});
  writeTable(prefix + "_eta.csv", {data.truth->eta, {}, {}});
  std::cerr << "simulate: zero fraction " << zeroFraction(data.Y) << '\n';
}

std::vector<std::array<long, 3>> parseGrid(const std::string& grid) {
  std::vector<std::array<long, 3>> out;
  std::stringstream ss(grid);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (item.find_first_not_of(" ") == std::string::npos) continue;
    std::array<long, 3> t{};
    char c1 = 0, c2 = 0;
    std::istringstream is(item);
    std::string rest;
    if (!(is >> t[0] >> c1 >> t[1] >> c2 >> t[2]) || c1 != ',' || c2 != ',' || (is >> rest))
      throw ParseError("bench: grid entry '" + item + "' is not N,D,Q", 0, 0);
    out.push_back(t);
  }
  if (out.empty()) throw ParseError("bench: empty grid", 0, 0);
  return out;
}

void runBenchCommand(const std::string& grid, int seeds, const std::string& configPath,
                     const Overrides& ov, const std::string& out) {
  FitConfig cfg = configPath.empty() ? FitConfig{} : loadFitConfig(configPath);
  ov.apply(cfg);
  const std::uint64_t base = cfg.seed;
  std::string table =
      "N,D,Q,seed,zero_pct,seconds,spes,rmse_lambda_laplace,rmse_lambda_pclm,converged\n";
  for (const auto& [n, d, q] : parseGrid(grid)) {
    for (int k = 0; k < seeds; ++k) {
      const std::uint64_t seed = base + static_cast<std::uint64_t>(k);
      Dataset data = simulateMln(n, d, q, seed);
      FitConfig run = cfg;
      run.seed = seed;
      FitResult res = runFit(data, run);
      Rng rng(seed);
      auto pclm = pclmFit(data.Y, data.X, priorFor(d, q, run), run.pseudo, run.draws, rng);
      std::vector<MatrixXd> pl;
      for (auto& p : pclm) pl.push_back(std::move(p.Lambda));
      const double rmsePclm = rmseLambda(summarizeDraws(pl).mean, data.truth->Lambda);
      table += std::to_string(n) + "," + std::to_string(d) + "," + std::to_string(q) + "," +
               std::to_string(seed) + "," + formatReal(100.0 * zeroFraction(data.Y)) + "," +
               formatReal(res.report.wallSeconds) + "," +
               formatReal(secondsPerEffectiveSample(res.report.wallSeconds, run.draws)) + "," +
               formatReal(rmseLambda(res.report.alr.mean, data.truth->Lambda)) + "," +
               formatReal(rmsePclm) + "," +
               (res.report.diagnostics.converged ? "true" : "false") + "\n";
      std::cerr << "bench: N=" << n << " D=" << d << " Q=" << q << " seed=" << seed << " done in "
                << res.report.wallSeconds << " s\n";
    }
  }
  if (out.empty()) {
    std::cout << table;
  } else {
    writeFileAtomic(out, table);
  }
}

void runPpcCommand(const std::string& countsPath, const std::string& covariatesPath,
                   const std::string& drawsPath, const Overrides& ov, const std::string& out) {
  const Dataset data = loadDataset(countsPath, covariatesPath);
  const std::vector<GmclDraw> draws = parseDraws(readFile(drawsPath), drawsPath);
  if (draws.front().Lambda.rows() != data.Y.D() - 1 || draws.front().Lambda.cols() != data.X.rows())
    throw ParameterError("ppc: draws do not match the data dimensions");
  std::vector<long> depths;
  for (Index j = 0; j < data.Y.N(); ++j) depths.push_back(static_cast<long>(data.Y.totals()(j)));
  Rng rng(ov.seed.value_or(1));
  const PredictiveCheck pc = posteriorPredictive(draws, data.X, depths, rng);

  std::string table = "category,sample,observed,mean,q025,q975,covered\n";
  long covered = 0;
  const MatrixXd& y = data.Y.Y();
  for (Index j = 0; j < y.cols(); ++j)
    for (Index i = 0; i < y.rows(); ++i) {
      const bool in = y(i, j) >= pc.q025(i, j) && y(i, j) <= pc.q975(i, j);
      covered += in;
      const std::string cat = data.categoryNames.empty() ? "c" + std::to_string(i + 1)
                                                         : data.categoryNames[static_cast<std::size_t>(i)];
      const std::string smp = data.sampleNames.empty() ? "s" + std::to_string(j + 1)
                                                       : data.sampleNames[static_cast<std::size_t>(j)];
      table += csvCell(cat) + "," + csvCell(smp) + "," + formatReal(y(i, j)) + "," +
               formatReal(pc.mean(i, j)) + "," + formatReal(pc.q025(i, j)) + "," +
               formatReal(pc.q975(i, j)) + "," + (in ? "1" : "0") + "\n";
    }
  if (out.empty()) {
    std::cout << table;
  } else {
    writeFileAtomic(out, table);
  }
  std::cerr << "ppc: " << covered << " of " << y.size() << " entries inside the 95% interval\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collapsed Laplace inference for multinomial logistic-normal regression"};
  app.require_subcommand(1);

  Overrides ov;
  std::string out, configPath, drawsOut, countsPath, covariatesPath, drawsPath, grid;
  long n = 0, d = 0, q = 0;
  int seeds = 1;

  CLI::App* fit = app.add_subcommand("fit", "Fit counts ~ covariates and write a summary table");
  fit->add_option("counts", countsPath, "Counts table (categories x samples)")->required();
  fit->add_option("covariates", covariatesPath, "Covariate table (covariates x samples)")->required();
  fit->add_option("config", configPath, "key = value configuration file");
  fit->add_option("--out", out, "Report path; diagnostics go to <out>.meta")->required();
  fit->add_option("--save-draws", drawsOut, "Also write posterior draws for `ppc`");
  ov.addTo(fit);

  CLI::App* sim = app.add_subcommand("simulate", "Simulate a dataset with known parameters");
  sim->add_option("N", n, "Samples")->required();
  sim->add_option("D", d, "Categories")->required();
  sim->add_option("Q", q, "Covariates")->required();
  sim->add_option("--out", out, "Output prefix")->required();
  sim->add_option("--seed", ov.seed, "Random seed");

  CLI::App* bench = app.add_subcommand("bench", "Simulate and fit a grid of sizes");
  bench->add_option("--grid", grid, "Semicolon-separated N,D,Q triples")->required();
  bench->add_option("--seeds", seeds, "Replicates per grid point")->check(CLI::PositiveNumber);
  bench->add_option("--config", configPath, "key = value configuration file");
  bench->add_option("--out", out, "Table path (stdout if omitted)");
  ov.addTo(bench);

  CLI::App* ppc = app.add_subcommand("ppc", "Posterior predictive check from saved draws");
  ppc->add_option("counts", countsPath, "Counts table")->required();
  ppc->add_option("covariates", covariatesPath, "Covariate table")->required();
  ppc->add_option("draws", drawsPath, "Draws file written by `fit --save-draws`")->required();
  ppc->add_option("--out", out, "Table path (stdout if omitted)");
  ppc->add_option("--seed", ov.seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*fit) runFitCommand(countsPath, covariatesPath, configPath, ov, out, drawsOut);
    if (*sim) runSimulateCommand(n, d, q, ov, out);
    if (*bench) runBenchCommand(grid, seeds, configPath, ov, out);
    if (*ppc) runPpcCommand(countsPath, covariatesPath, drawsPath, ov, out);
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const FactorizationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
