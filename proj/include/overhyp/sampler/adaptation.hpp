#pragma once

#include <cmath>
#include <cstddef>

#include "overhyp/model/types.hpp"

namespace overhyp::sampler {

/// Nesterov dual averaging of log step size toward a target acceptance rate.
class DualAveraging {
 public:
  explicit DualAveraging(double target, double gamma = 0.05, double t0 = 10.0, double kappa = 0.75)
      : target_(target), gamma_(gamma), t0_(t0), kappa_(kappa) {}

  void restart(double step_size) {
    mu_ = std::log(10.0 * step_size);
    counter_ = 0;
    s_bar_ = 0.0;
    x_bar_ = 0.0;
  }

  /// Returns the step size to use next.
  double update(double accept_stat) {
    ++counter_;
    if (!(accept_stat <= 1.0)) accept_stat = std::isnan(accept_stat) ? 0.0 : 1.0;
    const double n = static_cast<double>(counter_);
    const double eta = 1.0 / (n + t0_);
    s_bar_ = (1.0 - eta) * s_bar_ + eta * (target_ - accept_stat);
    const double x = mu_ - s_bar_ * std::sqrt(n) / gamma_;
    const double x_eta = std::pow(n, -kappa_);
    x_bar_ = (1.0 - x_eta) * x_bar_ + x_eta * x;
    return std::exp(x);
  }

  /// Averaged step size, used once adaptation ends.
  double final_step_size() const { return std::exp(x_bar_); }

 private:
  double target_, gamma_, t0_, kappa_;
  double mu_ = 0.0;
  std::size_t counter_ = 0;
  double s_bar_ = 0.0;
  double x_bar_ = 0.0;
};

/// Welford accumulator for a per-coordinate variance.
class VarianceEstimator {
 public:
  explicit VarianceEstimator(Eigen::Index dim) : mean_(Vector::Zero(dim)), m2_(Vector::Zero(dim)) {}

  void restart() {
    n_ = 0;
    mean_.setZero();
    m2_.setZero();
  }

  void add(const Vector& x) {
    ++n_;
    const Vector delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta.cwiseProduct(x - mean_);
  }

  std::size_t count() const { return n_; }

  /// Sample variance shrunk toward 1e-3 as in Stan's diagonal metric adaptation.
  Vector regularized_variance() const {
    const double n = static_cast<double>(n_);
    const Vector var = m2_ / (n - 1.0);
    return (n / (n + 5.0)) * var.array() + 1e-3 * (5.0 / (n + 5.0));
  }

 private:
  std::size_t n_ = 0;
  Vector mean_;
  Vector m2_;
};

/// Warmup schedule: a fast initial buffer, doubling slow windows that estimate
/// the metric, and a terminal buffer for the final step size.
class WindowSchedule {
 public:
  explicit WindowSchedule(std::size_t n_warmup) : n_warmup_(n_warmup) {
    if (n_warmup < 20) {
      adapt_metric_ = false;
      return;
    }
    init_ = 75;
    term_ = 50;
    window_ = 25;
    if (init_ + term_ + window_ > n_warmup) {
      init_ = static_cast<std::size_t>(0.15 * static_cast<double>(n_warmup));
      term_ = static_cast<std::size_t>(0.1 * static_cast<double>(n_warmup));
      window_ = n_warmup - init_ - term_;
    }
    next_end_ = init_ + window_ - 1;
  }

  bool adapts_metric() const { return adapt_metric_; }

  /// True if iteration `it` (0-based, warmup) lies in a slow window.
  bool in_slow_window(std::size_t it) const {
    return adapt_metric_ && it >= init_ && it + term_ < n_warmup_;
  }

  /// True if iteration `it` closes a slow window. Advances the schedule.
  bool end_of_window(std::size_t it) {
    if (!adapt_metric_ || it != next_end_ || it + term_ >= n_warmup_) return false;
    const std::size_t last = n_warmup_ - term_ - 1;
    if (it == last) return true;
    window_ *= 2;
    // Stretch the next window to the terminal buffer if a following one would not fit.
    next_end_ = it + 2 * window_ >= n_warmup_ - term_ ? last : it + window_;
    return true;
  }

 private:
  std::size_t n_warmup_;
  bool adapt_metric_ = true;
  std::size_t init_ = 0, term_ = 0, window_ = 0;
  std::size_t next_end_ = 0;
};

}  // namespace overhyp::sampler
