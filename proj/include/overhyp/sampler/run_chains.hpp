#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <string>

#include "overhyp/error.hpp"
#include "overhyp/rng.hpp"
#include "overhyp/sampler/adaptation.hpp"
#include "overhyp/sampler/config.hpp"
#include "overhyp/sampler/metropolis.hpp"
#include "overhyp/sampler/nuts.hpp"
#include "overhyp/sampler/target.hpp"

namespace overhyp {

namespace sampler {

inline constexpr std::size_t kMaxInitAttempts = 100;

/// Uniform(-1, 1) start with a finite log-density, retried up to 100 times.
template <LogDensity Target>
Vector initial_point(const Target& target, std::size_t dim, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector q(static_cast<Eigen::Index>(dim));
  for (std::size_t attempt = 0; attempt < kMaxInitAttempts; ++attempt) {
    for (Eigen::Index i = 0; i < q.size(); ++i) q(i) = u(rng);
    if (std::isfinite(static_cast<double>(target(q)))) return q;
  }
  throw InitializationError("no finite log-density found in " + std::to_string(kMaxInitAttempts) +
                            " initialization attempts");
}

/// Warmup with step-size and diagonal-metric adaptation, then `n_samples`
/// retained transitions.
template <class Kernel>
Matrix run_chain(Kernel& kernel, PhasePoint z, const SamplerConfig& cfg, ChainStats& stats) {
  const auto d = z.q.size();
  kernel.prime(z);
  kernel.init_step_size(z, cfg.max_step_halvings);
  DualAveraging da(cfg.target_accept);
  da.restart(kernel.step_size());
  WindowSchedule schedule(cfg.n_warmup);
  VarianceEstimator var(d);

  std::size_t moved = 0;
  for (std::size_t it = 0; it < cfg.n_warmup; ++it) {
    const auto info = kernel.transition(z);
    moved += info.moved ? 1 : 0;
    stats.gradient_evals += info.n_leapfrog;
    kernel.set_step_size(da.update(info.accept_stat));
    if (schedule.in_slow_window(it)) var.add(z.q);
    if (schedule.end_of_window(it)) {
      if (var.count() > 1) kernel.set_inv_metric(var.regularized_variance());
      var.restart();
      kernel.init_step_size(z, cfg.max_step_halvings);
      da.restart(kernel.step_size());
    }
  }
  if (cfg.n_warmup > 0) {
    if (moved == 0)
      throw AdaptationFailure("every proposal was rejected during " + std::to_string(cfg.n_warmup) +
                              " warmup iterations");
    kernel.set_step_size(da.final_step_size());
  }

  Matrix draws(static_cast<Eigen::Index>(cfg.n_samples), d);
  double accept_sum = 0.0;
  for (std::size_t s = 0; s < cfg.n_samples; ++s) {
    const auto info = kernel.transition(z);
    accept_sum += info.accept_stat;
    stats.divergences += info.divergent ? 1 : 0;
    stats.non_finite += info.non_finite;
    stats.gradient_evals += info.n_leapfrog;
    draws.row(static_cast<Eigen::Index>(s)) = z.q.transpose();
  }
  stats.step_size = kernel.step_size();
  stats.mean_accept = accept_sum / static_cast<double>(cfg.n_samples);
  stats.inv_metric = kernel.inv_metric();
  return draws;
}

template <LogDensity Target>
Matrix run_one_chain(const Target& target, std::size_t dim, const SamplerConfig& cfg,
                     std::size_t chain, ChainStats& stats) {
  Rng rng = make_rng(derive_seed(cfg.seed, {chain}));
  PhasePoint z;
  z.q = initial_point(target, dim, rng);
  const Vector unit = Vector::Ones(static_cast<Eigen::Index>(dim));
  if (cfg.kind == SamplerKind::AdaptiveMetropolis) {
    MetropolisKernel<Target, Rng> kernel(target, rng, unit);
    return run_chain(kernel, std::move(z), cfg, stats);
  }
  if constexpr (DifferentiableLogDensity<Target>) {
    NutsKernel<Target, Rng> kernel(target, rng, unit, cfg.max_tree_depth);
    return run_chain(kernel, std::move(z), cfg, stats);
  } else {
    FiniteDifferenceGradient<Target> fd(target);
    NutsKernel<FiniteDifferenceGradient<Target>, Rng> kernel(fd, rng, unit, cfg.max_tree_depth);
    return run_chain(kernel, std::move(z), cfg, stats);
  }
}

}  // namespace sampler

/// Runs `cfg.n_chains` independent chains on `target` over R^dim and returns
/// the post-warmup draws. Chain c is seeded from (cfg.seed, c), so results are
/// reproducible. A target without `value_and_gradient` gets a central-difference
/// gradient when NUTS is selected.
template <LogDensity Target>
PosteriorDraws run_chains(const Target& target, std::size_t dim, const SamplerConfig& cfg) {
  cfg.validate();
  detail::require(dim >= 1, "run_chains: dim must be >= 1");
  PosteriorDraws out;
  out.chains.reserve(cfg.n_chains);
  out.stats.resize(cfg.n_chains);
  for (std::size_t c = 0; c < cfg.n_chains; ++c)
    out.chains.push_back(sampler::run_one_chain(target, dim, cfg, c, out.stats[c]));
  return out;
}

}  // namespace overhyp
