#include "ltpfit/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace ltpfit {

namespace {

struct Point {
  double a = 0.0;
  double phi = 0.0;
  double dphi = 0.0;
  VectorXd x;
  VectorXd g;
};

// Minimizer of the cubic interpolating (a, phi, dphi) at both ends, clamped
// to the interior of [lo, hi].
double cubicStep(const Point& p, const Point& q) {
  const double lo = std::min(p.a, q.a);
  const double hi = std::max(p.a, q.a);
  const double margin = 0.1 * (hi - lo);
  double d1 = p.dphi + q.dphi - 3.0 * (p.phi - q.phi) / (p.a - q.a);
  double disc = d1 * d1 - p.dphi * q.dphi;
  double a = 0.5 * (lo + hi);
  if (disc >= 0.0 && std::isfinite(disc)) {
    double d2 = std::copysign(std::sqrt(disc), q.a - p.a);
    double denom = q.dphi - p.dphi + 2.0 * d2;
    if (denom != 0.0) {
      double cand = q.a - (q.a - p.a) * (q.dphi + d2 - d1) / denom;
      if (std::isfinite(cand)) a = cand;
    }
  }
  return std::clamp(a, lo + margin, hi - margin);
}

class LineSearch {
 public:
  LineSearch(const Objective& f, const LbfgsOptions& opt, const VectorXd& x, const VectorXd& d,
             double phi0, double dphi0, int& evals)
      : f_(f), opt_(opt), x_(x), d_(d), phi0_(phi0), dphi0_(dphi0), evals_(evals) {
    epsF_ = 1e-10 * (1.0 + std::abs(phi0));
  }

  bool run(double a0, Point& out) {
    Point prev{0.0, phi0_, dphi0_, {}, {}};
    double a = a0;
    for (int i = 0; i < opt_.maxLineSearch; ++i) {
      Point cur = eval(a);
      if (!std::isfinite(cur.phi)) {
        // shrink into the finite region
        a *= 0.1;
        continue;
      }
      if (accepted(cur)) {
        out = std::move(cur);
        return true;
      }
      if (cur.phi > phi0_ + opt_.wolfeC1 * cur.a * dphi0_ || (i > 0 && cur.phi >= prev.phi))
        return zoom(prev, cur, out);
      if (cur.dphi >= 0.0) return zoom(cur, prev, out);
      prev = std::move(cur);
      a *= 2.0;
    }
    return false;
  }

 private:
  Point eval(double a) {
    Point p;
    p.a = a;
    p.x = x_ + a * d_;
    p.g.resize(x_.size());
    p.phi = f_(p.x, p.g);
    ++evals_;
    p.dphi = p.g.dot(d_);
    if (!std::isfinite(p.dphi)) p.phi = std::numeric_limits<double>::infinity();
    return p;
  }

  bool accepted(const Point& p) const {
    const bool armijo = p.phi <= phi0_ + opt_.wolfeC1 * p.a * dphi0_;
    if (armijo && std::abs(p.dphi) <= -opt_.wolfeC2 * dphi0_) return true;
    const bool approx = p.phi <= phi0_ + epsF_ && (2.0 * opt_.wolfeC1 - 1.0) * dphi0_ >= p.dphi &&
                        p.dphi >= opt_.wolfeC2 * dphi0_;
    return approx;
  }

  bool zoom(Point lo, Point hi, Point& out) {
    for (int i = 0; i < opt_.maxLineSearch; ++i) {
      double a = cubicStep(lo, hi);
      Point cur = eval(a);
      if (!std::isfinite(cur.phi) || cur.phi > phi0_ + opt_.wolfeC1 * cur.a * dphi0_ ||
          cur.phi >= lo.phi) {
        if (accepted(cur)) {
          out = std::move(cur);
          return true;
        }
        hi = std::move(cur);
      } else {
        if (accepted(cur)) {
          out = std::move(cur);
          return true;
        }
        if (cur.dphi * (hi.a - lo.a) >= 0.0) hi = lo;
        lo = std::move(cur);
      }
      if (std::abs(hi.a - lo.a) <= 1e-16 * std::max(1.0, hi.a)) break;
    }
    // Fall back to the best point seen if it strictly decreased the objective.
    if (lo.x.size() > 0 && lo.phi < phi0_) {
      out = std::move(lo);
      return true;
    }
    return false;
  }

  const Objective& f_;
  const LbfgsOptions& opt_;
  const VectorXd& x_;
  const VectorXd& d_;
  double phi0_;
  double dphi0_;
  double epsF_;
  int& evals_;
};

}  // namespace

LbfgsResult minimizeLbfgs(const Objective& f, const VectorXd& x0, const LbfgsOptions& options) {
  LbfgsResult res;
  res.x = x0;
  res.grad.resize(x0.size());
  res.f = f(res.x, res.grad);
  res.evaluations = 1;
  if (!std::isfinite(res.f) || !res.grad.allFinite()) {
    res.status = LbfgsStatus::kLineSearchFailed;
    return res;
  }

  std::deque<VectorXd> sHist;
  std::deque<VectorXd> yHist;
  std::deque<double> rhoHist;
  const auto gradNorm = [&] { return res.grad.size() ? res.grad.cwiseAbs().maxCoeff() : 0.0; };
  // The relative-change test is scaled by the total decrease so far rather
  // than |f|: additive constants in the objective (a multinomial likelihood at
  // large depth sits near 1e6) must not decide when to stop. Even then, a flat
  // objective only stops the run after kFlatPatience iterations without a new
  // smallest gradient norm, since near the optimum f changes fall below
  // rounding while the gradient is still informative.
  const double f0 = res.f;
  constexpr int kFlatPatience = 50;
  int flat = 0;
  double bestGrad = gradNorm();

  while (true) {
    if (gradNorm() <= options.gradTol) {
      res.status = LbfgsStatus::kGradientConverged;
      return res;
    }
    if (res.iterations >= options.maxIter) {
      res.status = LbfgsStatus::kMaxIterations;
      return res;
    }

    // Two-loop recursion.
    VectorXd d = -res.grad;
    const std::size_t m = sHist.size();
    std::vector<double> alpha(m);
    for (std::size_t k = m; k-- > 0;) {
      alpha[k] = rhoHist[k] * sHist[k].dot(d);
      d -= alpha[k] * yHist[k];
    }
    if (m > 0) d *= sHist.back().dot(yHist.back()) / yHist.back().squaredNorm();
    for (std::size_t k = 0; k < m; ++k) {
      double beta = rhoHist[k] * yHist[k].dot(d);
      d += (alpha[k] - beta) * sHist[k];
    }

    double dphi0 = res.grad.dot(d);
    if (!(dphi0 < 0.0)) {
      sHist.clear();
      yHist.clear();
      rhoHist.clear();
      d = -res.grad;
      dphi0 = res.grad.dot(d);
    }
    double a0 = m == 0 ? std::min(1.0, 1.0 / d.norm()) : 1.0;

    Point next;
    LineSearch ls(f, options, res.x, d, res.f, dphi0, res.evaluations);
    bool ok = ls.run(a0, next);
    if (!ok && m > 0) {
      sHist.clear();
      yHist.clear();
      rhoHist.clear();
      d = -res.grad;
      dphi0 = res.grad.dot(d);
      LineSearch retry(f, options, res.x, d, res.f, dphi0, res.evaluations);
      ok = retry.run(std::min(1.0, 1.0 / d.norm()), next);
    }
    if (!ok) {
      res.status = LbfgsStatus::kLineSearchFailed;
      return res;
    }

    VectorXd s = next.x - res.x;
    VectorXd y = next.g - res.grad;
    const double fPrev = res.f;
    // Increases within rounding are allowed by the approximate Wolfe test.
    if (next.phi > fPrev + 1e-10 * (1.0 + std::abs(fPrev))) res.objectiveNonIncreasing = false;
    res.x = std::move(next.x);
    res.grad = std::move(next.g);
    res.f = next.phi;
    ++res.iterations;

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      sHist.push_back(std::move(s));
      yHist.push_back(std::move(y));
      rhoHist.push_back(1.0 / sy);
      if (static_cast<int>(sHist.size()) > options.memory) {
        sHist.pop_front();
        yHist.pop_front();
        rhoHist.pop_front();
      }
    }

    const double gn = gradNorm();
    const bool improved = gn < bestGrad;
    bestGrad = std::min(bestGrad, gn);
    if (std::abs(fPrev - res.f) <= options.relFunTol * std::max(1.0, std::abs(f0 - res.f))) {
      flat = improved ? 0 : flat + 1;
      if (gn > options.gradTol && flat < kFlatPatience) continue;
      res.status = gn <= options.gradTol ? LbfgsStatus::kGradientConverged
                                         : LbfgsStatus::kFunctionConverged;
      return res;
    }
    flat = 0;
  }
}

}  // namespace ltpfit
