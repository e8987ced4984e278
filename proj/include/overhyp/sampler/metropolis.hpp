#pragma once

#include <cmath>
#include <random>

#include "overhyp/sampler/nuts.hpp"
#include "overhyp/sampler/target.hpp"

namespace overhyp::sampler {

/// Random-walk Metropolis: q' = q + eps * sqrt(inv_metric) * N(0, I).
template <LogDensity Target, class Generator>
class MetropolisKernel {
 public:
  MetropolisKernel(const Target& target, Generator& rng, Vector inv_metric)
      : target_(target), rng_(rng), inv_metric_(std::move(inv_metric)) {}

  void set_step_size(double eps) { eps_ = eps; }
  double step_size() const { return eps_; }
  void set_inv_metric(Vector m) { inv_metric_ = std::move(m); }
  const Vector& inv_metric() const { return inv_metric_; }

  void prime(PhasePoint& z) const { z.logp = target_(z.q); }

  TransitionInfo transition(PhasePoint& z) {
    TransitionInfo info;
    info.n_leapfrog = 0;
    Vector q = z.q;
    for (Eigen::Index i = 0; i < q.size(); ++i)
      q(i) += eps_ * std::sqrt(inv_metric_(i)) * normal_(rng_);
    const double lp = target_(q);
    if (!std::isfinite(lp)) {
      info.non_finite = 1;
      info.accept_stat = 0.0;
      return info;
    }
    const double log_ratio = lp - z.logp;
    info.accept_stat = log_ratio >= 0 ? 1.0 : std::exp(log_ratio);
    if (log_ratio >= 0 || unif_(rng_) < info.accept_stat) {
      z.q = std::move(q);
      z.logp = lp;
      info.moved = true;
    }
    return info;
  }

  /// Starting scale 2.38 / sqrt(d), the optimal random-walk scale for Gaussian targets.
  void init_step_size(const PhasePoint& z0, std::size_t) {
    eps_ = 2.38 / std::sqrt(static_cast<double>(z0.q.size()));
  }

 private:
  const Target& target_;
  Generator& rng_;
  Vector inv_metric_;
  double eps_ = 1.0;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace overhyp::sampler
