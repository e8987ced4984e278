#pragma once

#include <boost/math/special_functions/gamma.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "overhyp/error.hpp"
#include "overhyp/model/types.hpp"

namespace overhyp::stats {

/// Upper tail of the chi-square distribution, Q(df/2, x/2).
inline double chi2_sf(double x, double df) {
  detail::require(df >= 1, "chi2_sf: df must be >= 1");
  detail::require(x >= 0 && !std::isnan(x), "chi2_sf: x must be >= 0");
  if (std::isinf(x)) return 0.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

struct FitResult {
  Vector beta;
  /// Inverse observed information (X' W X)^-1.
  Matrix cov_model;
  double log_likelihood = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  /// max |X' (y - p)| at the returned coefficients.
  double gradient_max = 0.0;
};

struct IrlsOptions {
  std::size_t max_iterations = 100;
  double gradient_tol = 1e-8;
  /// Coefficients beyond this magnitude are treated as separation.
  double separation_bound = 30.0;
};

namespace detail_stats {

inline double log1p_exp(double a) { return a > 0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a)); }

inline double log_likelihood(const Vector& eta, const Vector& y) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y(i) * eta(i) - log1p_exp(eta(i));
  return ll;
}

inline Vector fitted(const Vector& eta) {
  return eta.unaryExpr([](double e) { return e >= 0 ? 1.0 / (1.0 + std::exp(-e)) : std::exp(e) / (1.0 + std::exp(e)); });
}

inline Matrix information(const Matrix& X, const Vector& p) {
  const Vector w = p.array() * (1.0 - p.array());
  Matrix info = Matrix::Zero(X.cols(), X.cols());
  info.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose() * w.cwiseSqrt().asDiagonal());
  return info.selfadjointView<Eigen::Lower>();
}

}  // namespace detail_stats

/// Maximum-likelihood logistic regression by Newton / IRLS with step halving.
inline FitResult irls_fit(const Matrix& X, const Vector& y, const IrlsOptions& opts = {}) {
  detail::require_dims(X.rows() == y.size(), "irls_fit: X and y row counts differ");
  detail::require(X.rows() > 0 && X.cols() > 0, "irls_fit: empty design");
  for (Eigen::Index i = 0; i < y.size(); ++i)
    detail::require(y(i) == 0.0 || y(i) == 1.0, "irls_fit: y must be binary");
  Eigen::ColPivHouseholderQR<Matrix> qr(X);
  if (qr.rank() < X.cols())
    throw RankDeficiency("design", "irls_fit: design has rank " + std::to_string(qr.rank()) + " < " +
                                       std::to_string(X.cols()) + " columns");

  FitResult fit;
  fit.beta = Vector::Zero(X.cols());
  Vector eta = X * fit.beta;
  double ll = detail_stats::log_likelihood(eta, y);
  for (fit.iterations = 0; fit.iterations < opts.max_iterations; ++fit.iterations) {
    const Vector p = detail_stats::fitted(eta);
    const Vector grad = X.transpose() * (y - p);
    fit.gradient_max = grad.cwiseAbs().maxCoeff();
    if (fit.gradient_max < opts.gradient_tol) {
      fit.converged = true;
      break;
    }
    const Eigen::LDLT<Matrix> ldlt(detail_stats::information(X, p));
    if (ldlt.info() != Eigen::Success) throw NumericalSingularity("irls_fit: singular information matrix");
    const Vector step = ldlt.solve(grad);
    double t = 1.0;
    Vector beta_new, eta_new;
    double ll_new = -std::numeric_limits<double>::infinity();
    for (int h = 0; h < 30; ++h, t *= 0.5) {
      beta_new = fit.beta + t * step;
      eta_new = X * beta_new;
      ll_new = detail_stats::log_likelihood(eta_new, y);
      if (ll_new >= ll - 1e-12 * std::abs(ll)) break;
    }
    if (beta_new.cwiseAbs().maxCoeff() > opts.separation_bound)
      throw SeparationError("irls_fit: |beta| exceeded " + std::to_string(opts.separation_bound) +
                            " (perfect or quasi-complete separation)");
    if ((beta_new - fit.beta).cwiseAbs().maxCoeff() == 0.0) {
      fit.converged = fit.gradient_max < opts.gradient_tol;
      break;
    }
    fit.beta = beta_new;
    eta = eta_new;
    ll = ll_new;
  }
  const Vector p = detail_stats::fitted(eta);
  fit.gradient_max = (X.transpose() * (y - p)).cwiseAbs().maxCoeff();
  fit.converged = fit.gradient_max < opts.gradient_tol;
  fit.log_likelihood = ll;
  fit.cov_model = detail_stats::information(X, p).ldlt().solve(Matrix::Identity(X.cols(), X.cols()));
  return fit;
}

/// Cluster-robust covariance (X'WX)^-1 (sum_g s_g s_g') (X'WX)^-1 where s_g is
/// the score summed over the rows of cluster g. No small-sample correction.
inline Matrix sandwich_cov(const Matrix& X, const Vector& y, const FitResult& fit,
                           const std::vector<long long>& clusters) {
  detail::require_dims(static_cast<std::size_t>(X.rows()) == clusters.size() && X.rows() == y.size(),
                       "sandwich_cov: cluster ids must match rows");
  const Vector p = detail_stats::fitted(X * fit.beta);
  const Vector r = y - p;
  std::unordered_map<long long, Eigen::Index> slot;
  for (auto g : clusters) slot.try_emplace(g, static_cast<Eigen::Index>(slot.size()));
  if (slot.size() < 2) throw InvalidParameter("sandwich_cov: need at least 2 clusters");
  Matrix scores = Matrix::Zero(static_cast<Eigen::Index>(slot.size()), X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) scores.row(slot[clusters[static_cast<std::size_t>(i)]]) += r(i) * X.row(i);
  const Matrix meat = scores.transpose() * scores;
  const Matrix bread = detail_stats::information(X, p).ldlt().solve(Matrix::Identity(X.cols(), X.cols()));
  const Matrix v = bread * meat * bread;
  return 0.5 * (v + v.transpose());
}

struct WaldResult {
  double chi2 = 0.0;
  std::size_t df = 0;
  double p_value = 1.0;
};

/// W = b_g' V_gg^-1 b_g with df = |g|.
inline WaldResult wald_group_test(const Vector& beta, const Matrix& cov, const std::vector<std::size_t>& group) {
  detail::require(!group.empty(), "wald_group_test: empty group");
  const auto k = static_cast<Eigen::Index>(group.size());
  Vector b(k);
  Matrix v(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto gi = static_cast<Eigen::Index>(group[static_cast<std::size_t>(i)]);
    detail::require(gi < beta.size() && gi < cov.rows(), "wald_group_test: column out of range");
    b(i) = beta(gi);
    for (Eigen::Index j = 0; j < k; ++j) v(i, j) = cov(gi, static_cast<Eigen::Index>(group[static_cast<std::size_t>(j)]));
  }
  const Eigen::LLT<Matrix> llt(v);
  if (llt.info() != Eigen::Success || llt.matrixL().toDenseMatrix().diagonal().minCoeff() <= 0)
    throw NumericalSingularity("wald_group_test: singular sub-covariance");
  WaldResult w;
  w.chi2 = b.dot(llt.solve(b));
  w.df = group.size();
  w.p_value = chi2_sf(std::max(0.0, w.chi2), static_cast<double>(w.df));
  return w;
}

}  // namespace overhyp::stats
