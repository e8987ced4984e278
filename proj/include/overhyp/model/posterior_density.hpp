#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "overhyp/model/densities.hpp"
#include "overhyp/model/joint.hpp"
#include "overhyp/model/parameterization.hpp"
#include "overhyp/model/transforms.hpp"

namespace overhyp {

/// Log posterior density on the unconstrained space (log_joint of the
/// constrained state plus the log-Jacobian), with an analytic gradient.
///
/// The likelihood is reduced to per-(feature, category) sufficient statistics,
/// so evaluation cost does not grow with the number of observations. The value
/// agrees with `log_joint(constrain(z)) + log_abs_jacobian(z)`.
class PosteriorDensity {
 public:
  PosteriorDensity(const Hyperparams& h, const ObservationSet& data)
      : h_(h), param_(h), n_(static_cast<double>(data.num_vectors())) {
    check_observations(data, h);
    const auto F = static_cast<Eigen::Index>(h.F);
    const auto C = static_cast<Eigen::Index>(h.C);
    sum_ = Matrix::Zero(F, C);
    sum_sq_ = Matrix::Zero(F, C);
    for (Eigen::Index i = 0; i < F; ++i) {
      const Matrix& y = data.per_feature[static_cast<std::size_t>(i)];
      sum_.row(i) = y.colwise().sum();
      sum_sq_.row(i) = y.array().square().colwise().sum();
    }
    dir_norm_d_ = dirichlet_norm(h.alpha_d);
    dir_norm_l_ = dirichlet_norm(h.alpha_l);
    if (!h.omega_fixed()) trunc_norm_ = -std::log(h.s) - 0.5 * kLog2Pi - log_normal_cdf(h.w / h.s);
  }

  const Parameterization& parameterization() const { return param_; }
  const Hyperparams& hyper() const { return h_; }
  std::size_t dim() const { return param_.dim(); }

  double operator()(const Vector& z) const { return evaluate(z, nullptr); }

  double value_and_gradient(const Vector& z, Vector& grad) const {
    grad.setZero(z.size());
    return evaluate(z, &grad);
  }

 private:
  static double dirichlet_norm(const Vector& a) {
    double v = std::lgamma(a.sum());
    for (Eigen::Index i = 0; i < a.size(); ++i) v -= std::lgamma(a(i));
    return v;
  }

  struct Simplex {
    std::vector<double> x, z, stick;
  };

  // Forward stick-breaking with the pieces the backward pass needs.
  static double simplex_forward(const Vector& y, std::size_t off, std::size_t K, Simplex& s) {
    s.x.assign(K, 0.0);
    s.z.assign(K, 0.0);
    s.stick.assign(K, 0.0);
    double stick = 1.0;
    double lj = 0.0;
    for (std::size_t i = 0; i + 1 < K; ++i) {
      const double a = y(static_cast<Eigen::Index>(off + i)) - detail::stick_offset(K, i);
      const double z = detail::logistic(a);
      lj += detail::log_logistic(a) + detail::log_logistic(-a) + std::log(stick);
      s.z[i] = z;
      s.stick[i] = stick;
      s.x[i] = stick * z;
      stick *= (1.0 - z);
    }
    s.stick[K - 1] = stick;
    s.x[K - 1] = stick;
    return lj;
  }

  // Gradient wrt y (including the log-Jacobian) from gradient wrt x.
  static void simplex_backward(const Simplex& s, const std::vector<double>& gx, std::size_t off,
                               std::size_t K, Vector& grad) {
    double gs = gx[K - 1];
    for (std::size_t ii = K - 1; ii-- > 0;) {
      const double z = s.z[ii];
      const double st = s.stick[ii];
      grad(static_cast<Eigen::Index>(off + ii)) = (gx[ii] - gs) * st * z * (1.0 - z) + 1.0 - 2.0 * z;
      gs = gx[ii] * z + gs * (1.0 - z) + 1.0 / st;
    }
  }

  double evaluate(const Vector& z, Vector* grad) const {
    detail::require_dims(static_cast<std::size_t>(z.size()) == dim(),
                         "PosteriorDensity: wrong parameter length");
    if (!z.allFinite()) return kNegInf;
    const std::size_t F = h_.F, C = h_.C;
    const double Cd = static_cast<double>(C);

    Simplex sp, sk;
    double lp = simplex_forward(z, param_.p_offset(), F, sp);
    lp += simplex_forward(z, param_.k_offset(), F, sk);
    for (std::size_t i = 0; i < F; ++i)
      if (!(sp.x[i] > 0) || !(sk.x[i] > 0)) return kNegInf;

    double omega = h_.w;
    if (!h_.omega_fixed()) {
      const double u = z(static_cast<Eigen::Index>(param_.omega_offset()));
      omega = std::exp(u);
      lp += u;
      if (!std::isfinite(omega)) return kNegInf;
      const double d = (omega - h_.w) / h_.s;
      lp += trunc_norm_ - 0.5 * d * d;
    }

    std::vector<double> gp(F, 0.0), gk(F, 0.0);
    double g_omega = 0.0;
    lp += dir_norm_d_ + dir_norm_l_;
    for (std::size_t i = 0; i < F; ++i) {
      const double ad = h_.alpha_d(static_cast<Eigen::Index>(i)) - 1.0;
      const double al = h_.alpha_l(static_cast<Eigen::Index>(i)) - 1.0;
      lp += ad * std::log(sp.x[i]) + al * std::log(sk.x[i]);
      gp[i] = ad / sp.x[i];
      gk[i] = al / sk.x[i];
    }
    if (!h_.omega_fixed()) g_omega = -(omega - h_.w) / (h_.s * h_.s);

    const std::size_t so = param_.sigma_offset(), eo = param_.eta_offset();
    std::vector<double> u(C), v(C), g_eta(C);
    for (std::size_t i = 0; i < F; ++i) {
      // Equicorrelation prior on the category means of feature i.
      const double x_raw = omega * sp.x[i] + (1.0 - omega) * sk.x[i];
      const double x = std::clamp(x_raw, 0.0, 1.0);
      const double xp = std::pow(x, 1.0 / h_.gamma);
      const double r_raw = 2.0 * (xp - 0.5);
      const double r = clamp_correlation(r_raw, C);
      const bool r_active = x_raw > 0.0 && x_raw < 1.0 && r == r_raw;

      const double one_m_r = 1.0 - r;
      const double one_p = 1.0 + (Cd - 1.0) * r;
      double sum_u = 0.0, sum_u2 = 0.0;
      for (std::size_t c = 0; c < C; ++c) {
        const double sigma = std::exp(z(static_cast<Eigen::Index>(so + i * C + c)));
        if (!(sigma > 0) || !std::isfinite(sigma)) return kNegInf;
        u[c] = z(static_cast<Eigen::Index>(eo + i * C + c));
        sum_u += u[c];
        sum_u2 += u[c] * u[c];
      }
      const double quad = (sum_u2 - r * sum_u * sum_u / one_p) / one_m_r;
      const double log_det_r = (Cd - 1.0) * std::log(one_m_r) + std::log(one_p);
      lp += -0.5 * Cd * kLog2Pi - 0.5 * log_det_r - 0.5 * quad;

      if (grad) {
        double sum_v = 0.0, sum_v2 = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
          v[c] = (u[c] - r * sum_u / one_p) / one_m_r;
          sum_v += v[c];
          sum_v2 += v[c] * v[c];
        }
        if (r_active) {
          const double d_logdet = -(Cd - 1.0) / one_m_r + (Cd - 1.0) / one_p;
          const double g_r = -0.5 * d_logdet + 0.5 * (sum_v * sum_v - sum_v2);
          const double dr_dx = (2.0 / h_.gamma) * xp / x;
          const double g_x = g_r * dr_dx;
          gp[i] += g_x * omega;
          gk[i] += g_x * (1.0 - omega);
          g_omega += g_x * (sp.x[i] - sk.x[i]);
        }
        for (std::size_t c = 0; c < C; ++c) g_eta[c] = -v[c];
      }

      // Half-normal prior on sigma and the Gaussian likelihood.
      for (std::size_t c = 0; c < C; ++c) {
        const auto ic = static_cast<Eigen::Index>(i), cc = static_cast<Eigen::Index>(c);
        const double log_sigma = z(static_cast<Eigen::Index>(so + i * C + c));
        const double sigma = std::exp(log_sigma);
        const double mu = sigma * u[c];
        lp += std::log(2.0) - 0.5 * kLog2Pi - 0.5 * sigma * sigma + log_sigma;

        const double tau = sigma * sigma + h_.sigma_s2;
        const double s1 = sum_(ic, cc), s2 = sum_sq_(ic, cc);
        const double e = s2 - 2.0 * mu * s1 + n_ * mu * mu;
        lp += -0.5 * n_ * (kLog2Pi + std::log(tau)) - 0.5 * e / tau;

        if (grad) {
          const double g_mu = (s1 - n_ * mu) / tau;
          const double g_tau = -0.5 * n_ / tau + 0.5 * e / (tau * tau);
          const double gs = -sigma + g_tau * 2.0 * sigma + g_mu * u[c];
          (*grad)(static_cast<Eigen::Index>(so + i * C + c)) = gs * sigma + 1.0;
          (*grad)(static_cast<Eigen::Index>(eo + i * C + c)) = g_eta[c] + g_mu * sigma;
        }
      }
    }

    if (grad) {
      simplex_backward(sp, gp, param_.p_offset(), F, *grad);
      simplex_backward(sk, gk, param_.k_offset(), F, *grad);
      if (!h_.omega_fixed())
        (*grad)(static_cast<Eigen::Index>(param_.omega_offset())) = g_omega * omega + 1.0;
    }
    return std::isnan(lp) ? kNegInf : lp;
  }

  Hyperparams h_;
  Parameterization param_;
  double n_;
  Matrix sum_;
  Matrix sum_sq_;
  double dir_norm_d_ = 0.0;
  double dir_norm_l_ = 0.0;
  double trunc_norm_ = 0.0;
};

}  // namespace overhyp
