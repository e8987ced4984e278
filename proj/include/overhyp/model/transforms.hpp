#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "overhyp/error.hpp"
#include "overhyp/model/types.hpp"

namespace overhyp {

/// Slack on the [0, 1] domain of `power_transform`.
inline constexpr double kUnitSlack = 1e-12;
/// Margin keeping an equicorrelation matrix strictly positive definite.
inline constexpr double kCorrelationMargin = 1e-6;

/// omega * p + (1 - omega) * k. Stays on the simplex for omega in [0, 1].
inline Vector combine_biases(const Vector& p, const Vector& k, double omega) {
  detail::require_dims(p.size() == k.size(), "combine_biases: p and k differ in length");
  return omega * p + (1.0 - omega) * k;
}

/// Maps a bias value in [0, 1] to a correlation in [-1, 1]:
/// r = 2 (x^(1/gamma) - 0.5). Inputs within kUnitSlack of the interval are clamped.
inline double power_transform(double x, double gamma) {
  detail::require(gamma >= 1.0, "power_transform: gamma must be >= 1");
  detail::require(x >= -kUnitSlack && x <= 1.0 + kUnitSlack,
                  "power_transform: x outside [0, 1]");
  x = std::clamp(x, 0.0, 1.0);
  return 2.0 * (std::pow(x, 1.0 / gamma) - 0.5);
}

/// Open interval on which a C x C equicorrelation matrix is positive definite,
/// shrunk by kCorrelationMargin on both ends.
inline double clamp_correlation(double r, std::size_t C) {
  const double lo = -1.0 / static_cast<double>(C - 1) + kCorrelationMargin;
  const double hi = 1.0 - kCorrelationMargin;
  return std::clamp(r, lo, hi);
}

/// Equicorrelation matrix with unit diagonal and clamped off-diagonal r.
inline Matrix build_correlation(double r, std::size_t C) {
  if (C < 2) throw InvalidParameter("build_correlation: C must be >= 2");
  detail::require(r >= -1.0 && r <= 1.0, "build_correlation: r outside [-1, 1]");
  const double rc = clamp_correlation(r, C);
  const auto n = static_cast<Eigen::Index>(C);
  Matrix R = Matrix::Constant(n, n, rc);
  R.diagonal().setOnes();
  return R;
}

/// diag(sigma) * R * diag(sigma).
inline Matrix build_covariance(const Vector& sigma_row, const Matrix& R) {
  detail::require_dims(R.rows() == sigma_row.size() && R.cols() == sigma_row.size(),
                       "build_covariance: R must be C x C with C = |sigma|");
  detail::require((sigma_row.array() > 0).all() && sigma_row.allFinite(),
                  "build_covariance: sigma must be strictly positive");
  return sigma_row.asDiagonal() * R * sigma_row.asDiagonal();
}

/// Correlation of the category means for feature `i` under state (p, k, omega).
/// The combined bias is clamped into [0, 1] first, which only matters for omega > 1.
inline double feature_correlation(const Vector& p, const Vector& k, double omega,
                                  Eigen::Index i, double gamma) {
  const double x = std::clamp(omega * p(i) + (1.0 - omega) * k(i), 0.0, 1.0);
  return power_transform(x, gamma);
}

inline FeatureCovariance feature_covariance(const LatentState& st, const Hyperparams& h,
                                            std::size_t feature) {
  const auto i = static_cast<Eigen::Index>(feature);
  FeatureCovariance fc;
  fc.feature = feature;
  fc.r = feature_correlation(st.p, st.k, st.omega, i, h.gamma);
  fc.R = build_correlation(fc.r, h.C);
  fc.Sigma = build_covariance(st.sigma.row(i).transpose(), fc.R);
  return fc;
}

}  // namespace overhyp
