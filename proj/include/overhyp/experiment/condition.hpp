#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "overhyp/model/types.hpp"

namespace overhyp {

/// One cell of the experiment grid.
struct Condition {
  std::size_t id = 0;
  BiasClass domain_bias = BiasClass::None;
  BiasClass label_bias = BiasClass::None;
  double w = 0.3;
  double s = 0.03;
  /// Swap the (first, rest) concentration pair before assigning the first value
  /// to the diagnostic feature.
  bool flip_orientation = false;
};

/// Model constants shared by every condition.
struct LearnerConstants {
  std::size_t F = 2;
  std::size_t C = 2;
  std::size_t diagnostic_feature = 0;
  double gamma = 10.0;
  double sigma_s2 = 1.0;
};

inline Hyperparams make_hyperparams(const Condition& c, const LearnerConstants& k) {
  Hyperparams h;
  h.F = k.F;
  h.C = k.C;
  h.alpha_d = bias_alpha(c.domain_bias, k.F, k.diagnostic_feature, c.flip_orientation);
  h.alpha_l = bias_alpha(c.label_bias, k.F, k.diagnostic_feature, c.flip_orientation);
  h.w = c.w;
  h.s = c.s;
  h.gamma = k.gamma;
  h.sigma_s2 = k.sigma_s2;
  h.validate();
  return h;
}

inline const std::vector<std::pair<double, double>>& default_ws_settings() {
  static const std::vector<std::pair<double, double>> v{{0.2, 0.0}, {0.3, 0.03}, {0.5, 0.0}};
  return v;
}

/// Full crossing: for each (w, s) setting, domain class x label class, in
/// Right/None/Wrong order. Ids are assigned consecutively.
inline std::vector<Condition> make_condition_grid(
    const std::vector<std::pair<double, double>>& ws_settings,
    const std::vector<BiasClass>& domain_classes = {BiasClass::Right, BiasClass::None, BiasClass::Wrong},
    const std::vector<BiasClass>& label_classes = {BiasClass::Right, BiasClass::None, BiasClass::Wrong},
    bool flip_orientation = false) {
  std::vector<Condition> out;
  for (const auto& [w, s] : ws_settings)
    for (auto d : domain_classes)
      for (auto l : label_classes) {
        Condition c;
        c.id = out.size();
        c.domain_bias = d;
        c.label_bias = l;
        c.w = w;
        c.s = s;
        c.flip_orientation = flip_orientation;
        out.push_back(c);
      }
  return out;
}

}  // namespace overhyp
