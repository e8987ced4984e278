#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "overhyp/datagen.hpp"
#include "overhyp/error.hpp"
#include "overhyp/experiment/condition.hpp"
#include "overhyp/model/densities.hpp"
#include "overhyp/model/posterior_density.hpp"
#include "overhyp/rng.hpp"
#include "overhyp/sampler/diagnostics.hpp"
#include "overhyp/sampler/run_chains.hpp"
#include "overhyp/sampler/summary.hpp"

namespace overhyp {

struct BlockPosterior {
  std::size_t block = 1;
  /// C-vectors per feature the fit conditioned on.
  std::size_t n_observations = 0;
  Hyperparams hyper;
  PosteriorDraws draws;
  /// Posterior mean / sd of sigma and mu, F x C each.
  Matrix mu_mean, mu_sd, sigma_mean, sigma_sd;
  double max_rhat_mu = 1.0;
  double min_ess_mu = 0.0;
  /// Warmup length of the fit that was kept.
  std::size_t n_warmup = 0;
  bool retried = false;
  /// R-hat on mu still above threshold after the retry.
  bool flagged = false;

  std::size_t divergences() const { return draws.total_divergences(); }
};

struct LearningOptions {
  std::size_t n_blocks = 4;
  double rhat_threshold = 1.05;
};

namespace experiment_detail {

inline void fill_summary(BlockPosterior& bp, const Parameterization& param) {
  const auto F = static_cast<Eigen::Index>(param.F());
  const auto C = static_cast<Eigen::Index>(param.C());
  const auto s = posterior_summary(bp.draws, [&](const Vector& z) { return param.flatten(param.constrain(z)); });
  bp.mu_mean.resize(F, C);
  bp.mu_sd.resize(F, C);
  bp.sigma_mean.resize(F, C);
  bp.sigma_sd.resize(F, C);
  for (Eigen::Index i = 0; i < F; ++i)
    for (Eigen::Index c = 0; c < C; ++c) {
      const auto m = static_cast<Eigen::Index>(param.flat_mu_index(static_cast<std::size_t>(i), static_cast<std::size_t>(c)));
      const auto g = static_cast<Eigen::Index>(param.flat_sigma_index(static_cast<std::size_t>(i), static_cast<std::size_t>(c)));
      bp.mu_mean(i, c) = s.mean(m);
      bp.mu_sd(i, c) = s.sd(m);
      bp.sigma_mean(i, c) = s.mean(g);
      bp.sigma_sd(i, c) = s.sd(g);
    }
}

inline void fill_mu_diagnostics(BlockPosterior& bp, const Parameterization& param) {
  bp.max_rhat_mu = 1.0;
  bp.min_ess_mu = std::numeric_limits<double>::infinity();
  if (bp.draws.n_chains() < 2 || bp.draws.n_draws() < 4) {
    bp.min_ess_mu = static_cast<double>(bp.draws.n_draws());
    return;
  }
  const auto F = param.F(), C = param.C();
  std::vector<std::vector<Vector>> mu(F * C, std::vector<Vector>(bp.draws.n_chains()));
  for (std::size_t ch = 0; ch < bp.draws.n_chains(); ++ch) {
    const Matrix& m = bp.draws.chains[ch];
    for (auto& col : mu) col[ch].resize(m.rows());
    for (Eigen::Index t = 0; t < m.rows(); ++t) {
      const LatentState st = param.constrain(m.row(t).transpose());
      for (std::size_t j = 0; j < F * C; ++j)
        mu[j][ch](t) = st.mu(static_cast<Eigen::Index>(j / C), static_cast<Eigen::Index>(j % C));
    }
  }
  for (const auto& col : mu) {
    const double r = split_rhat(col);
    bp.max_rhat_mu = std::isfinite(r) ? std::max(bp.max_rhat_mu, r) : r;
    bp.min_ess_mu = std::min(bp.min_ess_mu, ess_bulk(col));
    if (!std::isfinite(bp.max_rhat_mu)) break;
  }
}

}  // namespace experiment_detail

/// Fits one posterior per block; block b sees the dataset replicated b times.
/// Block b's chains are seeded from (cfg.seed, b). A fit whose mu R-hat misses
/// the threshold is rerun once with doubled warmup and flagged if it still misses.
inline std::vector<BlockPosterior> run_block_learning(const Condition& condition,
                                                      const std::vector<Exemplar>& dataset,
                                                      const SamplerConfig& cfg,
                                                      const LearnerConstants& constants = {},
                                                      const LearningOptions& opts = {}) {
  detail::require(opts.n_blocks >= 1, "run_block_learning: n_blocks must be >= 1");
  const Hyperparams h = make_hyperparams(condition, constants);
  const ObservationSet base = to_observations(dataset);
  detail::require_dims(base.num_features() == h.F && base.num_categories() == h.C,
                       "run_block_learning: dataset shape does not match F x C");
  const Parameterization param(h);

  std::vector<BlockPosterior> out;
  out.reserve(opts.n_blocks);
  for (std::size_t b = 1; b <= opts.n_blocks; ++b) {
    const ObservationSet data = base.replicated(b);
    const PosteriorDensity target(h, data);
    SamplerConfig block_cfg = cfg;
    block_cfg.seed = derive_seed(cfg.seed, {b});

    BlockPosterior bp;
    bp.block = b;
    bp.n_observations = data.num_vectors();
    bp.hyper = h;
    bp.n_warmup = block_cfg.n_warmup;
    bp.draws = run_chains(target, param.dim(), block_cfg);
    experiment_detail::fill_mu_diagnostics(bp, param);
    if (!(bp.max_rhat_mu < opts.rhat_threshold)) {
      block_cfg.n_warmup = std::max<std::size_t>(2 * block_cfg.n_warmup, 1);
      bp.n_warmup = block_cfg.n_warmup;
      bp.retried = true;
      bp.draws = run_chains(target, param.dim(), block_cfg);
      experiment_detail::fill_mu_diagnostics(bp, param);
      bp.flagged = !(bp.max_rhat_mu < opts.rhat_threshold);
    }
    experiment_detail::fill_summary(bp, param);
    out.push_back(std::move(bp));
  }
  return out;
}

/// argmax_c sum_i log N(x_i; mu_ic, sigma_ic^2 + sigma_s2), first index on ties.
inline std::size_t classify_exemplar(const Vector& features, const LatentState& belief, double sigma_s2) {
  detail::require_dims(features.size() == belief.mu.rows() && belief.sigma.rows() == belief.mu.rows() &&
                           belief.sigma.cols() == belief.mu.cols(),
                       "classify_exemplar: belief does not match exemplar features");
  std::size_t best = 0;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < belief.mu.cols(); ++c) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < features.size(); ++i)
      ll += normal_logpdf(features(i), belief.mu(i, c), belief.sigma(i, c) * belief.sigma(i, c) + sigma_s2);
    if (ll > best_ll) {
      best_ll = ll;
      best = static_cast<std::size_t>(c);
    }
  }
  return best;
}

struct ParticipantRecord {
  std::size_t condition_id = 0;
  BiasClass domain_bias = BiasClass::None;
  BiasClass label_bias = BiasClass::None;
  double w = 0.0;
  double s = 0.0;
  std::size_t seed = 0;
  std::size_t block = 1;
  std::size_t participant = 0;
  std::size_t object = 0;
  int correct = 0;
};

/// Each participant classifies every exemplar with one pooled draw; the draws
/// are chosen without replacement.
template <class Gen>
std::vector<ParticipantRecord> simulate_participants(const BlockPosterior& bp,
                                                     const std::vector<Exemplar>& dataset,
                                                     std::size_t n_participants, Gen& rng,
                                                     const ParticipantRecord& tag = {}) {
  const std::size_t n_draws = bp.draws.n_chains() * bp.draws.n_draws();
  if (n_draws < n_participants)
    throw InsufficientDraws("simulate_participants: " + std::to_string(n_draws) + " draws for " +
                            std::to_string(n_participants) + " participants");
  std::vector<std::size_t> idx(n_draws);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t j = 0; j < n_participants; ++j) {
    std::uniform_int_distribution<std::size_t> pick(j, n_draws - 1);
    std::swap(idx[j], idx[pick(rng)]);
  }

  const Parameterization param(bp.hyper);
  const auto per_chain = bp.draws.n_draws();
  std::vector<ParticipantRecord> out;
  out.reserve(n_participants * dataset.size());
  for (std::size_t j = 0; j < n_participants; ++j) {
    const auto& chain = bp.draws.chains[idx[j] / per_chain];
    const Vector z = chain.row(static_cast<Eigen::Index>(idx[j] % per_chain)).transpose();
    const LatentState belief = param.constrain(z);
    for (std::size_t o = 0; o < dataset.size(); ++o) {
      ParticipantRecord r = tag;
      r.block = bp.block;
      r.participant = j;
      r.object = o;
      r.correct = classify_exemplar(dataset[o].features, belief, bp.hyper.sigma_s2) == dataset[o].category;
      out.push_back(r);
    }
  }
  return out;
}

}  // namespace overhyp
