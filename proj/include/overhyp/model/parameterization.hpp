#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "overhyp/error.hpp"
#include "overhyp/model/types.hpp"

namespace overhyp {

namespace detail {

/// log(1 / (1 + exp(-a))) without overflow.
inline double log_logistic(double a) {
  return a >= 0 ? -std::log1p(std::exp(-a)) : a - std::log1p(std::exp(a));
}

inline double logistic(double a) {
  return a >= 0 ? 1.0 / (1.0 + std::exp(-a)) : std::exp(a) / (1.0 + std::exp(a));
}

/// Offset making y = 0 map to the uniform simplex point.
inline double stick_offset(std::size_t K, std::size_t i) {
  return std::log(static_cast<double>(K - 1 - i));
}

}  // namespace detail

/// Stick-breaking map from R^(K-1) to the open K-simplex. Adds the log-Jacobian
/// to `log_jac` when non-null.
inline Vector stick_breaking_constrain(const Eigen::Ref<const Vector>& y, double* log_jac = nullptr) {
  const auto K = static_cast<std::size_t>(y.size()) + 1;
  Vector x(static_cast<Eigen::Index>(K));
  double stick = 1.0;
  double lj = 0.0;
  for (std::size_t i = 0; i + 1 < K; ++i) {
    const double a = y(static_cast<Eigen::Index>(i)) - detail::stick_offset(K, i);
    const double z = detail::logistic(a);
    lj += detail::log_logistic(a) + detail::log_logistic(-a) + std::log(stick);
    x(static_cast<Eigen::Index>(i)) = stick * z;
    stick *= (1.0 - z);
  }
  x(static_cast<Eigen::Index>(K - 1)) = stick;
  if (log_jac) *log_jac += lj;
  return x;
}

inline Vector stick_breaking_unconstrain(const Vector& x) {
  detail::require(x.size() >= 1, "stick_breaking_unconstrain: empty simplex");
  if ((x.array() <= 0).any())
    throw InvalidParameter("stick_breaking_unconstrain: boundary point (zero component)");
  const auto K = static_cast<std::size_t>(x.size());
  Vector y(static_cast<Eigen::Index>(K - 1));
  double stick = 1.0;
  for (std::size_t i = 0; i + 1 < K; ++i) {
    const double xi = x(static_cast<Eigen::Index>(i));
    const double z = xi / stick;
    y(static_cast<Eigen::Index>(i)) = std::log(z) - std::log1p(-z) + detail::stick_offset(K, i);
    stick -= xi;
  }
  return y;
}

/// Layout of the unconstrained parameter vector for given hyperparameters:
/// [p (F-1) | k (F-1) | log omega (1, absent when s = 0) | log sigma (F*C) | eta (F*C)],
/// with mu = sigma * eta elementwise. sigma and eta blocks are feature-major.
class Parameterization {
 public:
  explicit Parameterization(const Hyperparams& h)
      : F_(h.F), C_(h.C), omega_fixed_(h.omega_fixed()), w_(h.w) {
    h.validate();
  }

  std::size_t F() const { return F_; }
  std::size_t C() const { return C_; }
  bool omega_fixed() const { return omega_fixed_; }

  std::size_t p_offset() const { return 0; }
  std::size_t k_offset() const { return F_ - 1; }
  std::size_t omega_offset() const { return 2 * (F_ - 1); }
  std::size_t sigma_offset() const { return omega_offset() + (omega_fixed_ ? 0 : 1); }
  std::size_t eta_offset() const { return sigma_offset() + F_ * C_; }
  std::size_t dim() const { return eta_offset() + F_ * C_; }

  Vector unconstrain(const LatentState& st) const {
    check(st);
    Vector z(static_cast<Eigen::Index>(dim()));
    z.segment(idx(p_offset()), idx(F_ - 1)) = stick_breaking_unconstrain(st.p);
    z.segment(idx(k_offset()), idx(F_ - 1)) = stick_breaking_unconstrain(st.k);
    if (!omega_fixed_) {
      if (!(st.omega > 0)) throw InvalidParameter("unconstrain: omega must be > 0");
      z(idx(omega_offset())) = std::log(st.omega);
    }
    for (std::size_t i = 0; i < F_; ++i)
      for (std::size_t c = 0; c < C_; ++c) {
        const double s = st.sigma(idx(i), idx(c));
        if (!(s > 0)) throw InvalidParameter("unconstrain: sigma must be > 0");
        z(idx(sigma_offset() + i * C_ + c)) = std::log(s);
        z(idx(eta_offset() + i * C_ + c)) = st.mu(idx(i), idx(c)) / s;
      }
    return z;
  }

  LatentState constrain(const Vector& z, double* log_jac = nullptr) const {
    detail::require_dims(static_cast<std::size_t>(z.size()) == dim(),
                         "constrain: unconstrained vector has wrong length");
    LatentState st;
    double lj = 0.0;
    st.p = stick_breaking_constrain(z.segment(idx(p_offset()), idx(F_ - 1)), &lj);
    st.k = stick_breaking_constrain(z.segment(idx(k_offset()), idx(F_ - 1)), &lj);
    if (omega_fixed_) {
      st.omega = w_;
    } else {
      const double u = z(idx(omega_offset()));
      st.omega = std::exp(u);
      lj += u;
    }
    st.sigma.resize(idx(F_), idx(C_));
    st.mu.resize(idx(F_), idx(C_));
    for (std::size_t i = 0; i < F_; ++i)
      for (std::size_t c = 0; c < C_; ++c) {
        const double v = z(idx(sigma_offset() + i * C_ + c));
        st.sigma(idx(i), idx(c)) = std::exp(v);
        lj += 2.0 * v;
        st.mu(idx(i), idx(c)) = st.sigma(idx(i), idx(c)) * z(idx(eta_offset() + i * C_ + c));
      }
    if (log_jac) *log_jac = lj;
    return st;
  }

  /// log |d constrain / dz| at z.
  double log_abs_jacobian(const Vector& z) const {
    double lj = 0.0;
    (void)constrain(z, &lj);
    return lj;
  }

  /// Constrained latents as one flat vector: [p (F) | k (F) | omega | sigma (F*C) | mu (F*C)].
  Vector flatten(const LatentState& st) const {
    Vector v(static_cast<Eigen::Index>(flat_dim()));
    Eigen::Index o = 0;
    v.segment(o, idx(F_)) = st.p;
    o += idx(F_);
    v.segment(o, idx(F_)) = st.k;
    o += idx(F_);
    v(o++) = st.omega;
    for (std::size_t i = 0; i < F_; ++i)
      for (std::size_t c = 0; c < C_; ++c) v(o++) = st.sigma(idx(i), idx(c));
    for (std::size_t i = 0; i < F_; ++i)
      for (std::size_t c = 0; c < C_; ++c) v(o++) = st.mu(idx(i), idx(c));
    return v;
  }

  std::size_t flat_dim() const { return 2 * F_ + 1 + 2 * F_ * C_; }

  std::vector<std::string> flat_names() const {
    std::vector<std::string> n;
    for (std::size_t i = 0; i < F_; ++i) n.push_back("p[" + std::to_string(i) + "]");
    for (std::size_t i = 0; i < F_; ++i) n.push_back("k[" + std::to_string(i) + "]");
    n.emplace_back("omega");
    for (const char* name : {"sigma", "mu"})
      for (std::size_t i = 0; i < F_; ++i)
        for (std::size_t c = 0; c < C_; ++c)
          n.push_back(std::string(name) + "[" + std::to_string(i) + "," + std::to_string(c) + "]");
    return n;
  }

  std::size_t flat_sigma_index(std::size_t i, std::size_t c) const { return 2 * F_ + 1 + i * C_ + c; }
  std::size_t flat_mu_index(std::size_t i, std::size_t c) const {
    return 2 * F_ + 1 + F_ * C_ + i * C_ + c;
  }

 private:
  static Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

  void check(const LatentState& st) const {
    detail::require_dims(static_cast<std::size_t>(st.p.size()) == F_ &&
                             static_cast<std::size_t>(st.k.size()) == F_ &&
                             static_cast<std::size_t>(st.sigma.rows()) == F_ &&
                             static_cast<std::size_t>(st.sigma.cols()) == C_ &&
                             static_cast<std::size_t>(st.mu.rows()) == F_ &&
                             static_cast<std::size_t>(st.mu.cols()) == C_,
                         "unconstrain: state dimensions do not match hyperparameters");
  }

  std::size_t F_;
  std::size_t C_;
  bool omega_fixed_;
  double w_;
};

}  // namespace overhyp
