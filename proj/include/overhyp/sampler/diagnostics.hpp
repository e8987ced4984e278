#pragma once

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "overhyp/error.hpp"
#include "overhyp/sampler/config.hpp"

namespace overhyp {

struct Diagnostics {
  Vector rhat;
  Vector ess_bulk;

  double max_rhat() const { return rhat.size() ? rhat.maxCoeff() : 1.0; }
  double min_ess() const { return ess_bulk.size() ? ess_bulk.minCoeff() : 0.0; }
};

namespace sampler::detail {

inline void check_draws(const std::vector<Vector>& chains) {
  if (chains.size() < 2) throw InsufficientDraws("diagnostics need at least 2 chains");
  for (const auto& c : chains) {
    if (c.size() < 4) throw InsufficientDraws("diagnostics need at least 4 draws per chain");
    if (c.size() != chains.front().size()) throw InsufficientDraws("chains differ in length");
  }
}

/// Splits every chain into two halves; the middle draw of an odd chain is dropped.
inline std::vector<Vector> split_chains(const std::vector<Vector>& chains) {
  std::vector<Vector> out;
  for (const auto& c : chains) {
    const Eigen::Index half = c.size() / 2;
    out.emplace_back(c.head(half));
    out.emplace_back(c.tail(half));
  }
  return out;
}

inline double variance(const Vector& x) {
  const double m = x.mean();
  return (x.array() - m).square().sum() / static_cast<double>(x.size() - 1);
}

inline double rhat_of(const std::vector<Vector>& chains) {
  const auto split = split_chains(chains);
  const double n = static_cast<double>(split.front().size());
  const auto m = static_cast<Eigen::Index>(split.size());
  Vector means(m), vars(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    means(j) = split[static_cast<std::size_t>(j)].mean();
    vars(j) = variance(split[static_cast<std::size_t>(j)]);
  }
  const double B = n * variance(means);
  const double W = vars.mean();
  if (!(W > 0)) return B > 0 ? std::numeric_limits<double>::infinity() : 1.0;
  const double var_plus = (n - 1.0) / n * W + B / n;
  return std::sqrt(var_plus / W);
}

/// Autocovariance at `lag` with the 1/n normalization.
inline double autocov(const Vector& x, double mean, Eigen::Index lag) {
  const Eigen::Index n = x.size();
  double s = 0.0;
  for (Eigen::Index t = 0; t + lag < n; ++t) s += (x(t) - mean) * (x(t + lag) - mean);
  return s / static_cast<double>(n);
}

/// Multi-chain ESS with Geyer's initial monotone sequence estimator, capped at
/// the total number of draws.
inline double ess_of(const std::vector<Vector>& chains) {
  const auto m = chains.size();
  const Eigen::Index n = chains.front().size();
  const double nd = static_cast<double>(n);
  const double total = static_cast<double>(m) * nd;

  std::vector<double> means(m), chain_var(m);
  for (std::size_t j = 0; j < m; ++j) {
    means[j] = chains[j].mean();
    chain_var[j] = autocov(chains[j], means[j], 0) * nd / (nd - 1.0);
  }
  const double mean_var = std::accumulate(chain_var.begin(), chain_var.end(), 0.0) / static_cast<double>(m);
  double var_plus = mean_var * (nd - 1.0) / nd;
  if (m > 1) {
    const double grand = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(m);
    double b = 0.0;
    for (double mu : means) b += (mu - grand) * (mu - grand);
    var_plus += b / static_cast<double>(m - 1);
  }
  if (!(var_plus > 0)) return total;

  auto rho_at = [&](Eigen::Index lag) {
    double acov = 0.0;
    for (std::size_t j = 0; j < m; ++j) acov += autocov(chains[j], means[j], lag);
    acov /= static_cast<double>(m);
    return 1.0 - (mean_var - acov) / var_plus;
  };

  std::vector<double> rho(static_cast<std::size_t>(n) + 2, 0.0);
  rho[0] = 1.0;
  double rho_even = 1.0;
  double rho_odd = rho_at(1);
  rho[1] = rho_odd;
  Eigen::Index s = 1;
  while (s < n - 4 && rho_even + rho_odd > 0) {
    rho_even = rho_at(s + 1);
    rho_odd = rho_at(s + 2);
    if (rho_even + rho_odd >= 0) {
      rho[static_cast<std::size_t>(s + 1)] = rho_even;
      rho[static_cast<std::size_t>(s + 2)] = rho_odd;
    }
    s += 2;
  }
  const Eigen::Index max_s = s;
  if (rho_even > 0) rho[static_cast<std::size_t>(max_s + 1)] = rho_even;
  for (Eigen::Index t = 1; t <= max_s - 3; t += 2) {
    const auto u = static_cast<std::size_t>(t);
    if (rho[u + 1] + rho[u + 2] > rho[u - 1] + rho[u]) {
      rho[u + 1] = (rho[u - 1] + rho[u]) / 2.0;
      rho[u + 2] = rho[u + 1];
    }
  }
  double tau = -1.0;
  for (Eigen::Index t = 0; t < max_s; ++t) tau += 2.0 * rho[static_cast<std::size_t>(t)];
  tau += rho[static_cast<std::size_t>(max_s + 1)];
  if (!(tau > 0)) return total;
  return std::min(total / tau, total);
}

/// Pooled fractional ranks mapped through the normal quantile function.
inline std::vector<Vector> rank_normalize(const std::vector<Vector>& chains) {
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t j = 0; j < chains.size(); ++j)
    for (Eigen::Index t = 0; t < chains[j].size(); ++t)
      all.emplace_back(chains[j](t), all.size());
  std::sort(all.begin(), all.end());
  const double S = static_cast<double>(all.size());
  std::vector<double> z(all.size());
  const boost::math::normal_distribution<double> normal;
  for (std::size_t a = 0; a < all.size();) {
    std::size_t b = a;
    while (b + 1 < all.size() && all[b + 1].first == all[a].first) ++b;
    const double rank = 0.5 * static_cast<double>(a + b) + 1.0;  // average rank of ties
    const double v = boost::math::quantile(normal, (rank - 0.375) / (S + 0.25));
    for (std::size_t i = a; i <= b; ++i) z[all[i].second] = v;
    a = b + 1;
  }
  std::vector<Vector> out;
  std::size_t pos = 0;
  for (const auto& c : chains) {
    Vector v(c.size());
    for (Eigen::Index t = 0; t < c.size(); ++t) v(t) = z[pos++];
    out.push_back(std::move(v));
  }
  return out;
}

inline std::vector<Vector> column(const std::vector<Matrix>& chains, Eigen::Index d) {
  std::vector<Vector> out;
  out.reserve(chains.size());
  for (const auto& c : chains) out.emplace_back(c.col(d));
  return out;
}

}  // namespace sampler::detail

/// Split-chain potential scale reduction of a scalar quantity.
inline double split_rhat(const std::vector<Vector>& chains) {
  sampler::detail::check_draws(chains);
  return sampler::detail::rhat_of(chains);
}

/// Rank-normalized split-chain (bulk) effective sample size.
inline double ess_bulk(const std::vector<Vector>& chains) {
  sampler::detail::check_draws(chains);
  return sampler::detail::ess_of(
      sampler::detail::split_chains(sampler::detail::rank_normalize(chains)));
}

/// Split-chain ESS of the raw values; the right denominator for Monte-Carlo
/// standard errors of means.
inline double ess_mean(const std::vector<Vector>& chains) {
  sampler::detail::check_draws(chains);
  return sampler::detail::ess_of(sampler::detail::split_chains(chains));
}

inline Vector split_rhat(const PosteriorDraws& draws) {
  Vector r(static_cast<Eigen::Index>(draws.dim()));
  for (Eigen::Index d = 0; d < r.size(); ++d) r(d) = split_rhat(sampler::detail::column(draws.chains, d));
  return r;
}

inline Vector ess_bulk(const PosteriorDraws& draws) {
  Vector e(static_cast<Eigen::Index>(draws.dim()));
  for (Eigen::Index d = 0; d < e.size(); ++d) e(d) = ess_bulk(sampler::detail::column(draws.chains, d));
  return e;
}

inline Diagnostics diagnose(const PosteriorDraws& draws) { return {split_rhat(draws), ess_bulk(draws)}; }

/// Monte-Carlo standard error of the mean of a scalar quantity.
inline double mcse_mean(const std::vector<Vector>& chains) {
  std::vector<Vector> all = chains;
  Eigen::Index n = 0;
  double sum = 0.0, sq = 0.0;
  for (const auto& c : chains) {
    n += c.size();
    sum += c.sum();
    sq += c.squaredNorm();
  }
  const double mean = sum / static_cast<double>(n);
  const double var = (sq - static_cast<double>(n) * mean * mean) / static_cast<double>(n - 1);
  return std::sqrt(var / ess_mean(all));
}

/// Monte-Carlo standard error of the standard deviation, by the delta method
/// on the second central moment.
inline double mcse_sd(const std::vector<Vector>& chains) {
  Eigen::Index n = 0;
  double sum = 0.0;
  for (const auto& c : chains) {
    n += c.size();
    sum += c.sum();
  }
  const double mean = sum / static_cast<double>(n);
  std::vector<Vector> sq;
  double var = 0.0;
  for (const auto& c : chains) {
    sq.emplace_back((c.array() - mean).square().matrix());
    var += sq.back().sum();
  }
  var /= static_cast<double>(n - 1);
  return mcse_mean(sq) / (2.0 * std::sqrt(var));
}

}  // namespace overhyp
