#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "overhyp/error.hpp"

namespace overhyp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Fixed parameters of the learner. `omega` is sampled from a normal
/// truncated at zero with location `w` and scale `s`; `s == 0` pins it at `w`.
struct Hyperparams {
  Vector alpha_d;
  Vector alpha_l;
  double w = 0.3;
  double s = 0.03;
  double gamma = 10.0;
  double sigma_s2 = 1.0;
  std::size_t F = 2;
  std::size_t C = 2;

  bool omega_fixed() const noexcept { return s == 0.0; }

  void validate() const {
    detail::require(F >= 1, "Hyperparams: F must be >= 1");
    detail::require(C >= 2, "Hyperparams: C must be >= 2");
    detail::require_dims(static_cast<std::size_t>(alpha_d.size()) == F &&
                             static_cast<std::size_t>(alpha_l.size()) == F,
                         "Hyperparams: alpha vectors must have length F");
    detail::require((alpha_d.array() > 0).all() && (alpha_l.array() > 0).all(),
                    "Hyperparams: alpha components must be > 0");
    detail::require(std::isfinite(w) && w >= 0, "Hyperparams: w must be >= 0");
    detail::require(std::isfinite(s) && s >= 0, "Hyperparams: s must be >= 0");
    detail::require(gamma >= 1, "Hyperparams: gamma must be >= 1");
    detail::require(sigma_s2 > 0, "Hyperparams: sigma_s2 must be > 0");
  }
};

enum class BiasClass { Right, None, Wrong };

inline constexpr BiasClass kBiasClasses[] = {BiasClass::Right, BiasClass::None,
                                             BiasClass::Wrong};

inline std::string_view to_string(BiasClass b) {
  switch (b) {
    case BiasClass::Right: return "Right";
    case BiasClass::None: return "None";
    case BiasClass::Wrong: return "Wrong";
  }
  return "?";
}

inline BiasClass parse_bias_class(std::string_view s) {
  if (s == "Right" || s == "right") return BiasClass::Right;
  if (s == "None" || s == "none") return BiasClass::None;
  if (s == "Wrong" || s == "wrong") return BiasClass::Wrong;
  throw InvalidParameter("unknown bias class '" + std::string(s) + "'");
}

/// Concentration pair (first, rest) for a bias class: Right (1, 10),
/// None (10, 10), Wrong (10, 1).
inline std::pair<double, double> bias_alpha_pair(BiasClass b) {
  switch (b) {
    case BiasClass::Right: return {1.0, 10.0};
    case BiasClass::None: return {10.0, 10.0};
    case BiasClass::Wrong: return {10.0, 1.0};
  }
  return {10.0, 10.0};
}

/// Expands a bias class to a length-F concentration vector. The first value of
/// the pair goes to `diagnostic_feature`; every other feature gets the second.
/// With `flip_orientation` the pair is swapped before expansion.
inline Vector bias_alpha(BiasClass b, std::size_t F, std::size_t diagnostic_feature,
                         bool flip_orientation = false) {
  detail::require(diagnostic_feature < F, "bias_alpha: diagnostic feature out of range");
  auto [first, rest] = bias_alpha_pair(b);
  if (flip_orientation) std::swap(first, rest);
  Vector a = Vector::Constant(static_cast<Eigen::Index>(F), rest);
  a(static_cast<Eigen::Index>(diagnostic_feature)) = first;
  return a;
}

/// One joint configuration of all latent variables. `sigma` and `mu` are F x C
/// (row = feature, column = category).
struct LatentState {
  Vector p;
  Vector k;
  double omega = 0.0;
  Matrix sigma;
  Matrix mu;

  bool in_support(double simplex_tol = 1e-12) const {
    auto simplex_ok = [&](const Vector& v) {
      return v.size() > 0 && (v.array() >= 0).all() && std::abs(v.sum() - 1.0) <= simplex_tol;
    };
    return simplex_ok(p) && simplex_ok(k) && std::isfinite(omega) && omega >= 0 &&
           sigma.size() > 0 && (sigma.array() > 0).all() && sigma.allFinite() &&
           mu.allFinite();
  }

  void check_dims(const Hyperparams& h) const {
    const auto F = static_cast<Eigen::Index>(h.F);
    const auto C = static_cast<Eigen::Index>(h.C);
    detail::require_dims(p.size() == F && k.size() == F, "LatentState: p/k must have length F");
    detail::require_dims(sigma.rows() == F && sigma.cols() == C && mu.rows() == F &&
                             mu.cols() == C,
                         "LatentState: sigma/mu must be F x C");
  }
};

/// Per-feature correlation and covariance of the category means.
struct FeatureCovariance {
  std::size_t feature = 0;
  double r = 0.0;
  Matrix R;
  Matrix Sigma;
};

/// Observed data arranged for the likelihood: `per_feature[i]` is n x C, each
/// row one C-vector of values of feature i (one component per category).
struct ObservationSet {
  std::vector<Matrix> per_feature;

  std::size_t num_features() const { return per_feature.size(); }
  std::size_t num_categories() const {
    return per_feature.empty() ? 0 : static_cast<std::size_t>(per_feature.front().cols());
  }
  std::size_t num_vectors() const {
    return per_feature.empty() ? 0 : static_cast<std::size_t>(per_feature.front().rows());
  }

  /// Concatenates `times` copies of every feature's rows.
  ObservationSet replicated(std::size_t times) const {
    ObservationSet out;
    out.per_feature.reserve(per_feature.size());
    for (const auto& m : per_feature) {
      Matrix r(m.rows() * static_cast<Eigen::Index>(times), m.cols());
      for (std::size_t t = 0; t < times; ++t)
        r.middleRows(static_cast<Eigen::Index>(t) * m.rows(), m.rows()) = m;
      out.per_feature.push_back(std::move(r));
    }
    return out;
  }
};

}  // namespace overhyp
