#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <functional>

#include "overhyp/model/types.hpp"

namespace overhyp {

template <class T>
concept LogDensity = requires(const T& t, const Vector& z) {
  { t(z) } -> std::convertible_to<double>;
};

template <class T>
concept DifferentiableLogDensity = LogDensity<T> && requires(const T& t, const Vector& z, Vector& g) {
  { t.value_and_gradient(z, g) } -> std::convertible_to<double>;
};

/// Adds a central-difference gradient to a value-only log-density. The
/// gradient is a fixed function of position, so leapfrog integration with it
/// stays reversible and volume preserving.
template <LogDensity F>
class FiniteDifferenceGradient {
 public:
  explicit FiniteDifferenceGradient(const F& f, double rel_step = 1e-6) : f_(f), h_(rel_step) {}

  double operator()(const Vector& z) const { return f_(z); }

  double value_and_gradient(const Vector& z, Vector& grad) const {
    grad.resize(z.size());
    Vector x = z;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double h = h_ * std::max(1.0, std::abs(z(i)));
      x(i) = z(i) + h;
      const double up = f_(x);
      x(i) = z(i) - h;
      const double down = f_(x);
      x(i) = z(i);
      grad(i) = (up - down) / (2.0 * h);
    }
    return f_(z);
  }

 private:
  const F& f_;
  double h_;
};

namespace sampler {

/// Position with cached log-density and gradient.
struct PhasePoint {
  Vector q;
  Vector p;
  Vector grad;
  double logp = 0.0;
};

}  // namespace sampler
}  // namespace overhyp
