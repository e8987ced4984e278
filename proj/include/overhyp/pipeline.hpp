#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "overhyp/datagen.hpp"
#include "overhyp/error.hpp"
#include "overhyp/experiment/condition.hpp"
#include "overhyp/experiment/grid.hpp"
#include "overhyp/sampler/config.hpp"

namespace overhyp {

/// Everything a grid run depends on. Defaults reproduce the reference grid.
struct RunConfig {
  DatasetSpec dataset;
  std::vector<std::pair<double, double>> ws_settings = default_ws_settings();
  std::vector<BiasClass> domain_classes{BiasClass::Right, BiasClass::None, BiasClass::Wrong};
  std::vector<BiasClass> label_classes{BiasClass::Right, BiasClass::None, BiasClass::Wrong};
  bool flip_orientation = false;
  double gamma = 10.0;
  double sigma_s2 = 1.0;
  std::size_t n_blocks = 4;
  std::size_t n_participants = 75;
  std::size_t n_seeds = 5;
  SamplerConfig sampler;
  double rhat_threshold = 1.05;
  std::uint64_t master_seed = 1;
  std::size_t threads = 1;

  void validate() const {
    dataset.validate();
    sampler.validate();
    detail::require(!ws_settings.empty(), "RunConfig: no (w, s) settings");
    for (const auto& [w, s] : ws_settings) {
      detail::require(w >= 0 && w <= 1, "RunConfig: w must lie in [0, 1]");
      detail::require(s >= 0, "RunConfig: s must be >= 0");
    }
    detail::require(!domain_classes.empty() && !label_classes.empty(), "RunConfig: empty bias class list");
    detail::require(gamma > 0, "RunConfig: gamma must be > 0");
    detail::require(sigma_s2 > 0, "RunConfig: sigma_s2 must be > 0");
    detail::require(n_blocks >= 1, "RunConfig: n_blocks must be >= 1");
    detail::require(n_participants >= 1, "RunConfig: n_participants must be >= 1");
    detail::require(n_seeds >= 1, "RunConfig: n_seeds must be >= 1");
    detail::require(threads >= 1, "RunConfig: threads must be >= 1");
    detail::require(n_participants <= sampler.n_chains * sampler.n_samples,
                    "RunConfig: n_participants exceeds the number of retained draws");
  }

  LearnerConstants constants() const {
    LearnerConstants k;
    k.F = dataset.F;
    k.C = dataset.C;
    k.diagnostic_feature = dataset.diagnostic_feature;
    k.gamma = gamma;
    k.sigma_s2 = sigma_s2;
    return k;
  }

  std::vector<Condition> conditions() const {
    return make_condition_grid(ws_settings, domain_classes, label_classes, flip_orientation);
  }

  GridOptions grid_options() const {
    GridOptions o;
    o.n_participants = n_participants;
    o.master_seed = master_seed;
    o.threads = threads;
    o.constants = constants();
    o.learning.n_blocks = n_blocks;
    o.learning.rhat_threshold = rhat_threshold;
    return o;
  }

  /// The dataset used for seed index 0.
  std::vector<Exemplar> first_dataset() const {
    DatasetSpec spec = dataset;
    spec.seed = dataset_seed(master_seed, 0);
    return generate_exemplars(spec);
  }
};

/// Runs the grid on per-seed datasets, or on `fixed` for every seed if given.
inline GridResult run_pipeline(const RunConfig& cfg, const std::vector<Exemplar>* fixed = nullptr) {
  cfg.validate();
  std::vector<std::vector<Exemplar>> datasets =
      fixed ? std::vector<std::vector<Exemplar>>(cfg.n_seeds, *fixed)
            : make_seed_datasets(cfg.dataset, cfg.master_seed, cfg.n_seeds);
  return run_grid(cfg.conditions(), datasets, cfg.sampler, cfg.grid_options());
}

}  // namespace overhyp
