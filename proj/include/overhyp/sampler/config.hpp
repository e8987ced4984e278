#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "overhyp/error.hpp"
#include "overhyp/model/types.hpp"

namespace overhyp {

enum class SamplerKind {
  /// Multinomial no-U-turn HMC with a diagonal metric.
  Nuts,
  /// Random-walk Metropolis with a diagonal proposal scale.
  AdaptiveMetropolis,
};

inline std::string_view to_string(SamplerKind k) {
  return k == SamplerKind::Nuts ? "nuts" : "metropolis";
}

inline SamplerKind parse_sampler_kind(std::string_view s) {
  if (s == "nuts") return SamplerKind::Nuts;
  if (s == "metropolis") return SamplerKind::AdaptiveMetropolis;
  throw InvalidParameter("unknown sampler '" + std::string(s) + "' (nuts|metropolis)");
}

struct SamplerConfig {
  std::size_t n_chains = 4;
  std::size_t n_warmup = 1000;
  std::size_t n_samples = 1000;
  double target_accept = 0.8;
  std::uint64_t seed = 0;
  /// Cap on doublings/halvings in the initial step-size search.
  std::size_t max_step_halvings = 30;
  std::size_t max_tree_depth = 10;
  SamplerKind kind = SamplerKind::Nuts;

  void validate() const {
    detail::require(n_chains >= 1 && n_samples >= 1, "SamplerConfig: counts must be positive");
    detail::require(target_accept > 0 && target_accept < 1,
                    "SamplerConfig: target_accept must lie in (0, 1)");
    detail::require(max_tree_depth >= 1, "SamplerConfig: max_tree_depth must be >= 1");
  }
};

struct ChainStats {
  double step_size = 0.0;
  /// Mean acceptance statistic over retained iterations.
  double mean_accept = 0.0;
  std::size_t divergences = 0;
  /// Proposals whose log-density was not finite (rejected).
  std::size_t non_finite = 0;
  std::size_t gradient_evals = 0;
  Vector inv_metric;
};

/// Post-warmup draws in unconstrained space, one n_samples x dim matrix per chain.
struct PosteriorDraws {
  std::vector<Matrix> chains;
  std::vector<ChainStats> stats;

  std::size_t n_chains() const { return chains.size(); }
  std::size_t n_draws() const { return chains.empty() ? 0 : static_cast<std::size_t>(chains.front().rows()); }
  std::size_t dim() const { return chains.empty() ? 0 : static_cast<std::size_t>(chains.front().cols()); }

  /// All chains stacked in chain order.
  Matrix pooled() const {
    Matrix out(static_cast<Eigen::Index>(n_chains() * n_draws()), static_cast<Eigen::Index>(dim()));
    Eigen::Index row = 0;
    for (const auto& c : chains) {
      out.middleRows(row, c.rows()) = c;
      row += c.rows();
    }
    return out;
  }

  std::size_t total_divergences() const {
    std::size_t n = 0;
    for (const auto& s : stats) n += s.divergences;
    return n;
  }
};

}  // namespace overhyp
