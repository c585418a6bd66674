#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace ltpfit {

/// Seed for a random stream. Identical seeds and identical call sequences
/// give identical draws.
struct RngSeed {
  std::uint64_t seed = 0;
};

/// Random engine used by every sampler. Owns its state; share across threads
/// only by deriving independent streams with `Rng::stream`.
class Rng {
 public:
  explicit Rng(RngSeed seed) : engine_(mix(seed.seed)) {}
  explicit Rng(std::uint64_t seed) : Rng(RngSeed{seed}) {}

  /// Stream `index` derived from `base`. Draw s of a batch uses stream s so
  /// results do not depend on how the batch is split across threads.
  static Rng stream(std::uint64_t base, std::uint64_t index) {
    return Rng(RngSeed{mix(base) ^ mix(index + 0x9e3779b97f4a7c15ULL)});
  }

  double normal() { return normal_(engine_); }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double chiSquared(double df) { return 2.0 * std::gamma_distribution<double>(0.5 * df, 1.0)(engine_); }
  long binomial(long n, double p) {
    if (n <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    return std::binomial_distribution<long>(n, p)(engine_);
  }
  long uniformInt(long lo, long hi) { return std::uniform_int_distribution<long>(lo, hi)(engine_); }
  std::uint64_t next() { return engine_(); }

  Eigen::MatrixXd standardNormal(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd z(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) z(i, j) = normal();
    return z;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace ltpfit
