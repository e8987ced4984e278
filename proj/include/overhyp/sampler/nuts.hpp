#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <random>

#include "overhyp/sampler/target.hpp"

namespace overhyp::sampler {

struct TransitionInfo {
  double accept_stat = 0.0;
  bool divergent = false;
  bool moved = false;
  std::size_t n_leapfrog = 0;
  std::size_t non_finite = 0;
};

inline double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

/// Multinomial no-U-turn sampler with a diagonal inverse metric and the
/// generalized (sharp-momentum) termination criterion, including the extra
/// checks across merged subtrees.
template <DifferentiableLogDensity Target, class Generator>
class NutsKernel {
 public:
  NutsKernel(const Target& target, Generator& rng, Vector inv_metric, std::size_t max_depth)
      : target_(target), rng_(rng), inv_metric_(std::move(inv_metric)), max_depth_(max_depth) {}

  void set_step_size(double eps) { eps_ = eps; }
  double step_size() const { return eps_; }
  void set_inv_metric(Vector m) { inv_metric_ = std::move(m); }
  const Vector& inv_metric() const { return inv_metric_; }

  /// Evaluates log-density and gradient at q into `z`.
  void prime(PhasePoint& z) const { z.logp = target_.value_and_gradient(z.q, z.grad); }

  TransitionInfo transition(PhasePoint& z) {
    TransitionInfo info;
    sample_momentum(z);
    const double H0 = hamiltonian(z);

    PhasePoint z_fwd = z, z_bck = z, z_sample = z, z_propose = z;
    Vector p_sharp = inv_metric_.cwiseProduct(z.p);
    Vector p_fwd_fwd = z.p, p_fwd_bck = z.p, p_bck_fwd = z.p, p_bck_bck = z.p;
    Vector ps_fwd_fwd = p_sharp, ps_fwd_bck = p_sharp, ps_bck_fwd = p_sharp, ps_bck_bck = p_sharp;
    Vector rho = z.p;
    double log_sum_weight = 0.0;
    double sum_metro = 0.0;
    divergent_ = false;
    n_leapfrog_ = 0;
    non_finite_ = 0;

    for (std::size_t depth = 0; depth < max_depth_; ++depth) {
      Vector rho_fwd = Vector::Zero(rho.size());
      Vector rho_bck = Vector::Zero(rho.size());
      double lsw_subtree = -std::numeric_limits<double>::infinity();
      bool valid;
      if (unif_(rng_) > 0.5) {
        PhasePoint edge = z_fwd;
        rho_bck = rho;
        p_bck_fwd = p_fwd_bck;
        ps_bck_fwd = ps_fwd_bck;
        valid = build_tree(depth, edge, z_propose, ps_fwd_bck, ps_fwd_fwd, rho_fwd, p_fwd_bck,
                           p_fwd_fwd, H0, 1.0, lsw_subtree, sum_metro);
        z_fwd = std::move(edge);
      } else {
        PhasePoint edge = z_bck;
        rho_fwd = rho;
        p_fwd_bck = p_bck_fwd;
        ps_fwd_bck = ps_bck_fwd;
        valid = build_tree(depth, edge, z_propose, ps_bck_fwd, ps_bck_bck, rho_bck, p_bck_fwd,
                           p_bck_bck, H0, -1.0, lsw_subtree, sum_metro);
        z_bck = std::move(edge);
      }
      if (!valid) break;

      if (lsw_subtree > log_sum_weight) {
        z_sample = z_propose;
      } else if (unif_(rng_) < std::exp(lsw_subtree - log_sum_weight)) {
        z_sample = z_propose;
      }
      log_sum_weight = log_sum_exp(log_sum_weight, lsw_subtree);

      rho = rho_bck + rho_fwd;
      bool persist = criterion(ps_bck_bck, ps_fwd_fwd, rho);
      persist = persist && criterion(ps_bck_bck, ps_fwd_bck, Vector(rho_bck + p_fwd_bck));
      persist = persist && criterion(ps_bck_fwd, ps_fwd_fwd, Vector(rho_fwd + p_bck_fwd));
      if (!persist) break;
    }

    info.n_leapfrog = n_leapfrog_;
    info.divergent = divergent_;
    info.non_finite = non_finite_;
    info.accept_stat = n_leapfrog_ > 0 ? sum_metro / static_cast<double>(n_leapfrog_) : 0.0;
    info.moved = z_sample.q != z.q;
    z = std::move(z_sample);
    return info;
  }

  /// Heuristic initial step size: double or halve until the one-step
  /// acceptance probability crosses 0.8. At most `max_iters` adjustments.
  void init_step_size(const PhasePoint& z0, std::size_t max_iters) {
    PhasePoint z = z0;
    sample_momentum(z);
    double H0 = hamiltonian(z);
    leapfrog(z, eps_);
    double dH = H0 - hamiltonian(z);
    if (std::isnan(dH)) dH = -std::numeric_limits<double>::infinity();
    const int direction = dH > std::log(0.8) ? 1 : -1;
    for (std::size_t it = 0; it < max_iters; ++it) {
      z = z0;
      sample_momentum(z);
      H0 = hamiltonian(z);
      leapfrog(z, eps_);
      dH = H0 - hamiltonian(z);
      if (std::isnan(dH)) dH = -std::numeric_limits<double>::infinity();
      if (direction == 1 && !(dH > std::log(0.8))) break;
      if (direction == -1 && !(dH < std::log(0.8))) break;
      eps_ = direction == 1 ? 2.0 * eps_ : 0.5 * eps_;
      if (eps_ > 1e7 || eps_ == 0.0) break;
    }
  }

 private:
  void sample_momentum(PhasePoint& z) {
    z.p.resize(z.q.size());
    for (Eigen::Index i = 0; i < z.q.size(); ++i) z.p(i) = normal_(rng_) / std::sqrt(inv_metric_(i));
  }

  double hamiltonian(const PhasePoint& z) const {
    const double kinetic = 0.5 * z.p.dot(inv_metric_.cwiseProduct(z.p));
    const double h = -z.logp + kinetic;
    return std::isnan(h) ? std::numeric_limits<double>::infinity() : h;
  }

  void leapfrog(PhasePoint& z, double eps) {
    z.p += 0.5 * eps * z.grad;
    z.q += eps * inv_metric_.cwiseProduct(z.p);
    z.logp = target_.value_and_gradient(z.q, z.grad);
    if (!std::isfinite(z.logp) || !z.grad.allFinite()) {
      ++non_finite_;
      z.logp = -std::numeric_limits<double>::infinity();
      z.grad.setZero();
      return;
    }
    z.p += 0.5 * eps * z.grad;
  }

  static bool criterion(const Vector& p_sharp_minus, const Vector& p_sharp_plus, const Vector& rho) {
    return p_sharp_plus.dot(rho) > 0 && p_sharp_minus.dot(rho) > 0;
  }

  bool build_tree(std::size_t depth, PhasePoint& z, PhasePoint& z_propose, Vector& ps_beg,
                  Vector& ps_end, Vector& rho, Vector& p_beg, Vector& p_end, double H0,
                  double sign, double& log_sum_weight, double& sum_metro) {
    if (depth == 0) {
      leapfrog(z, sign * eps_);
      ++n_leapfrog_;
      const double h = hamiltonian(z);
      if (h - H0 > kMaxDeltaH) {
        divergent_ = true;
        return false;
      }
      const double log_w = H0 - h;
      log_sum_weight = log_sum_exp(log_sum_weight, log_w);
      sum_metro += log_w > 0 ? 1.0 : std::exp(log_w);
      z_propose = z;
      p_beg = z.p;
      p_end = z.p;
      ps_beg = inv_metric_.cwiseProduct(z.p);
      ps_end = ps_beg;
      rho += z.p;
      return true;
    }

    const Eigen::Index d = z.q.size();
    Vector rho_left = Vector::Zero(d);
    Vector p_left_end(d), ps_left_end(d);
    double lsw_left = -std::numeric_limits<double>::infinity();
    if (!build_tree(depth - 1, z, z_propose, ps_beg, ps_left_end, rho_left, p_beg, p_left_end, H0,
                    sign, lsw_left, sum_metro))
      return false;

    PhasePoint z_propose_right = z;
    Vector rho_right = Vector::Zero(d);
    Vector p_right_beg(d), ps_right_beg(d);
    double lsw_right = -std::numeric_limits<double>::infinity();
    if (!build_tree(depth - 1, z, z_propose_right, ps_right_beg, ps_end, rho_right, p_right_beg,
                    p_end, H0, sign, lsw_right, sum_metro))
      return false;

    const double lsw_subtree = log_sum_exp(lsw_left, lsw_right);
    log_sum_weight = log_sum_exp(log_sum_weight, lsw_subtree);
    if (lsw_right > lsw_subtree || unif_(rng_) < std::exp(lsw_right - lsw_subtree))
      z_propose = std::move(z_propose_right);

    const Vector rho_subtree = rho_left + rho_right;
    bool persist = criterion(ps_beg, ps_end, rho_subtree);
    persist = persist && criterion(ps_beg, ps_right_beg, Vector(rho_left + p_right_beg));
    persist = persist && criterion(ps_left_end, ps_end, Vector(rho_right + p_left_end));
    rho += rho_subtree;
    return persist;
  }

  static constexpr double kMaxDeltaH = 1000.0;

  const Target& target_;
  Generator& rng_;
  Vector inv_metric_;
  std::size_t max_depth_;
  double eps_ = 1.0;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
  bool divergent_ = false;
  std::size_t n_leapfrog_ = 0;
  std::size_t non_finite_ = 0;
};

}  // namespace overhyp::sampler
