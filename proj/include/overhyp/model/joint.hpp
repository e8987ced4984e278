#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>

#include "overhyp/model/densities.hpp"
#include "overhyp/model/transforms.hpp"
#include "overhyp/model/types.hpp"

namespace overhyp {

namespace detail {
inline std::atomic<std::uint64_t>& singularity_counter() {
  static std::atomic<std::uint64_t> n{0};
  return n;
}
}  // namespace detail

/// Number of times `log_joint` has mapped a factorization failure to -inf.
inline std::uint64_t log_joint_singularity_count() {
  return detail::singularity_counter().load(std::memory_order_relaxed);
}

/// Prior on each category standard deviation: half-normal(1).
inline double sigma_prior_logpdf(double sigma) { return half_normal_logpdf(sigma, 1.0); }

inline void check_observations(const ObservationSet& data, const Hyperparams& h) {
  detail::require_dims(data.num_features() == h.F, "observations: feature count differs from F");
  for (const auto& m : data.per_feature)
    detail::require_dims(static_cast<std::size_t>(m.cols()) == h.C &&
                             m.rows() == data.per_feature.front().rows(),
                         "observations: every feature needs the same n x C layout");
}

/// Prior part of the joint: biases, omega, sigma and the correlated mean prior.
inline double log_prior(const LatentState& st, const Hyperparams& h) {
  st.check_dims(h);
  if (!std::isfinite(st.omega) || st.omega < 0) return kNegInf;
  if (!st.sigma.allFinite() || (st.sigma.array() <= 0).any() || !st.mu.allFinite())
    return kNegInf;

  double lp = dirichlet_logpdf(st.p, h.alpha_d);
  if (lp == kNegInf) return kNegInf;
  lp += dirichlet_logpdf(st.k, h.alpha_l);
  if (lp == kNegInf) return kNegInf;
  if (!h.omega_fixed()) lp += truncnorm_logpdf(st.omega, h.w, h.s);

  for (Eigen::Index i = 0; i < st.sigma.rows(); ++i)
    for (Eigen::Index c = 0; c < st.sigma.cols(); ++c) lp += sigma_prior_logpdf(st.sigma(i, c));

  const Vector zero = Vector::Zero(static_cast<Eigen::Index>(h.C));
  for (std::size_t i = 0; i < h.F; ++i) {
    try {
      const auto fc = feature_covariance(st, h, i);
      lp += mvn_logpdf(st.mu.row(static_cast<Eigen::Index>(i)).transpose(), zero, fc.Sigma);
    } catch (const NumericalSingularity&) {
      detail::singularity_counter().fetch_add(1, std::memory_order_relaxed);
      return kNegInf;
    }
  }
  return lp;
}

/// Likelihood of every observed C-vector: y ~ MVN(mu_i, diag(sigma_i^2) + sigma_s2 I).
inline double log_likelihood(const LatentState& st, const ObservationSet& data,
                             const Hyperparams& h) {
  check_observations(data, h);
  double ll = 0.0;
  for (std::size_t f = 0; f < h.F; ++f) {
    const auto i = static_cast<Eigen::Index>(f);
    const Vector mean = st.mu.row(i).transpose();
    const Vector var = st.sigma.row(i).transpose().array().square() + h.sigma_s2;
    const Matrix cov = var.asDiagonal();
    const Matrix& y = data.per_feature[f];
    for (Eigen::Index j = 0; j < y.rows(); ++j)
      ll += mvn_logpdf(y.row(j).transpose(), mean, cov);
  }
  return ll;
}

/// Joint log-density of latents and data. Returns -inf outside the support.
inline double log_joint(const LatentState& st, const ObservationSet& data, const Hyperparams& h) {
  st.check_dims(h);
  check_observations(data, h);
  const double lp = log_prior(st, h);
  if (lp == kNegInf) return kNegInf;
  return lp + log_likelihood(st, data, h);
}

}  // namespace overhyp
