#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "overhyp/error.hpp"
#include "overhyp/model/types.hpp"

namespace overhyp {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

inline double normal_logpdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (kLog2Pi + std::log(var) + d * d / var);
}

/// log Phi(x), accurate in both tails.
inline double log_normal_cdf(double x) {
  return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
}

/// Half-normal(scale) log-density on x > 0.
inline double half_normal_logpdf(double x, double scale = 1.0) {
  if (!(x > 0)) return kNegInf;
  return std::log(2.0) + normal_logpdf(x, 0.0, scale * scale);
}

/// Dirichlet log-density. Any component <= 0 gives -inf.
inline double dirichlet_logpdf(const Vector& x, const Vector& alpha) {
  detail::require_dims(x.size() == alpha.size() && x.size() > 0,
                       "dirichlet_logpdf: x and alpha must have equal nonzero length");
  detail::require((alpha.array() > 0).all() && alpha.allFinite(),
                  "dirichlet_logpdf: alpha must be strictly positive");
  if (!x.allFinite() || (x.array() <= 0).any()) return kNegInf;
  detail::require(std::abs(x.sum() - 1.0) <= 1e-8, "dirichlet_logpdf: x is not on the simplex");
  double lp = std::lgamma(alpha.sum());
  for (Eigen::Index i = 0; i < x.size(); ++i)
    lp += (alpha(i) - 1.0) * std::log(x(i)) - std::lgamma(alpha(i));
  return lp;
}

template <class Generator>
Vector sample_dirichlet(const Vector& alpha, Generator& rng) {
  detail::require(alpha.size() > 0 && (alpha.array() > 0).all() && alpha.allFinite(),
                  "sample_dirichlet: alpha must be strictly positive");
  Vector g(alpha.size());
  for (;;) {
    for (Eigen::Index i = 0; i < alpha.size(); ++i) {
      std::gamma_distribution<double> gd(alpha(i), 1.0);
      g(i) = gd(rng);
    }
    const double total = g.sum();
    if (total > 0 && std::isfinite(total)) return g / total;
  }
}

/// Normal(w, s) truncated below at 0, evaluated at omega.
inline double truncnorm_logpdf(double omega, double w, double s) {
  detail::require(s > 0 && std::isfinite(s), "truncnorm_logpdf: s must be > 0");
  if (!(omega >= 0) || !std::isfinite(omega)) return kNegInf;
  const double z = (omega - w) / s;
  return -0.5 * z * z - std::log(s) - 0.5 * kLog2Pi - log_normal_cdf(w / s);
}

/// Gaussian log-density via Cholesky. Throws NumericalSingularity if `cov` is
/// not positive definite.
inline double mvn_logpdf(const Vector& x, const Vector& mean, const Matrix& cov) {
  detail::require_dims(x.size() == mean.size() && cov.rows() == x.size() &&
                           cov.cols() == x.size(),
                       "mvn_logpdf: dimension mismatch");
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success)
    throw NumericalSingularity("mvn_logpdf: covariance is not positive definite");
  const Vector z = llt.matrixL().solve(x - mean);
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + log_det + z.squaredNorm());
}

}  // namespace overhyp
