#include "ltpfit/mln_obs.hpp"

#include <cmath>
#include <string>

#include "ltpfit/error.hpp"

namespace ltpfit {

namespace {

void checkDims(const CountMatrix& y, const MatrixXd& eta) {
  if (eta.rows() != y.D() - 1 || eta.cols() != y.N())
    throw ParameterError("mln: eta is " + std::to_string(eta.rows()) + "x" +
                         std::to_string(eta.cols()) + ", expected " + std::to_string(y.D() - 1) +
                         "x" + std::to_string(y.N()));
}

// rho_ij = e^{eta_ij} / (1 + sum_k e^{eta_kj}) and log(1 + sum_k e^{eta_kj}),
// both computed from exponentials shifted by max(0, max_k eta_kj).
void softmaxColumn(const MatrixXd& eta, Index j, VectorXd& rho, double& logNorm) {
  const Index p = eta.rows();
  double shift = 0.0;
  for (Index i = 0; i < p; ++i) shift = std::max(shift, eta(i, j));
  double denom = std::exp(-shift);
  rho.resize(p);
  for (Index i = 0; i < p; ++i) {
    rho(i) = std::exp(eta(i, j) - shift);
    denom += rho(i);
  }
  rho /= denom;
  logNorm = shift + std::log(denom);
}

}  // namespace

CountMatrix::CountMatrix(MatrixXd y) : y_(std::move(y)) {
  if (y_.rows() < 2) throw ParameterError("mln: count matrix needs D >= 2 categories");
  for (Index j = 0; j < y_.cols(); ++j)
    for (Index i = 0; i < y_.rows(); ++i) {
      double v = y_(i, j);
      if (!(v >= 0.0) || v != std::floor(v) || !std::isfinite(v))
        throw DomainError("mln: count at (" + std::to_string(i + 1) + ", " +
                          std::to_string(j + 1) + ") is not a nonnegative integer");
    }
  n_ = y_.colwise().sum().transpose();
}

MatrixXd BlockDiagonal::toDense() const {
  const Index b = blockSize();
  const Index n = static_cast<Index>(blocks.size());
  MatrixXd out = MatrixXd::Zero(b * n, b * n);
  addTo(out, 1.0);
  return out;
}

void BlockDiagonal::addTo(MatrixXd& out, double scale) const {
  const Index b = blockSize();
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    const Index off = static_cast<Index>(j) * b;
    out.block(off, off, b, b) += scale * blocks[j];
  }
}

MatrixXd alrInverse(const MatrixXd& eta) {
  const Index p = eta.rows();
  MatrixXd pi(p + 1, eta.cols());
  VectorXd rho;
  double logNorm = 0.0;
  for (Index j = 0; j < eta.cols(); ++j) {
    softmaxColumn(eta, j, rho, logNorm);
    pi.col(j).head(p) = rho;
    pi(p, j) = std::exp(-logNorm);
  }
  return pi;
}

MatrixXd alrForward(const MatrixXd& pi) {
  if (pi.rows() < 2) throw ParameterError("mln: alrForward needs at least 2 rows");
  const Index p = pi.rows() - 1;
  MatrixXd eta(p, pi.cols());
  for (Index j = 0; j < pi.cols(); ++j) {
    for (Index i = 0; i <= p; ++i)
      if (!(pi(i, j) > 0.0))
        throw DomainError("mln: alrForward requires strictly positive entries, got " +
                          std::to_string(pi(i, j)) + " at (" + std::to_string(i + 1) + ", " +
                          std::to_string(j + 1) + ")");
    const double ref = std::log(pi(p, j));
    for (Index i = 0; i < p; ++i) eta(i, j) = std::log(pi(i, j)) - ref;
  }
  return eta;
}

MatrixXd clrFromAlr(const MatrixXd& m) {
  MatrixXd out(m.rows() + 1, m.cols());
  out.topRows(m.rows()) = m;
  out.row(m.rows()).setZero();
  out.rowwise() -= out.colwise().mean();
  return out;
}

double multinomLogLik(const CountMatrix& y, const MatrixXd& eta) {
  checkDims(y, eta);
  const Index p = eta.rows();
  VectorXd rho;
  double logNorm = 0.0;
  double g = 0.0;
  for (Index j = 0; j < eta.cols(); ++j) {
    const double nj = y.totals()(j);
    if (nj == 0.0) continue;
    softmaxColumn(eta, j, rho, logNorm);
    g += y.Y().col(j).head(p).dot(eta.col(j)) - nj * logNorm;
  }
  return g;
}

VectorXd multinomGradient(const CountMatrix& y, const MatrixXd& eta) {
  checkDims(y, eta);
  const Index p = eta.rows();
  VectorXd grad = VectorXd::Zero(eta.size());
  VectorXd rho;
  double logNorm = 0.0;
  for (Index j = 0; j < eta.cols(); ++j) {
    const double nj = y.totals()(j);
    if (nj == 0.0) continue;
    softmaxColumn(eta, j, rho, logNorm);
    grad.segment(j * p, p) = y.Y().col(j).head(p) - nj * rho;
  }
  return grad;
}

BlockDiagonal multinomHessian(const CountMatrix& y, const MatrixXd& eta) {
  checkDims(y, eta);
  const Index p = eta.rows();
  BlockDiagonal h;
  h.blocks.reserve(static_cast<std::size_t>(eta.cols()));
  VectorXd rho;
  double logNorm = 0.0;
  for (Index j = 0; j < eta.cols(); ++j) {
    const double nj = y.totals()(j);
    if (nj == 0.0) {
      h.blocks.emplace_back(MatrixXd::Zero(p, p));
      continue;
    }
    softmaxColumn(eta, j, rho, logNorm);
    MatrixXd w = nj * (rho * rho.transpose());
    w.diagonal() -= nj * rho;
    h.blocks.push_back(std::move(w));
  }
  return h;
}

}  // namespace ltpfit
