#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "overhyp/error.hpp"
#include "overhyp/io/csv.hpp"
#include "overhyp/model/types.hpp"
#include "overhyp/rng.hpp"

namespace overhyp {

struct Exemplar {
  Vector features;
  std::size_t category = 0;
};

/// Synthetic two-category stimulus set: one diagnostic feature whose category
/// means sit at -/+ mean_separation/2, every other feature centered at zero.
struct DatasetSpec {
  std::size_t n_per_category = 8;
  std::size_t F = 2;
  std::size_t C = 2;
  std::size_t diagnostic_feature = 0;
  double mean_separation = 2.0;
  double within_sd = 0.25;
  std::uint64_t seed = 0;

  void validate() const {
    detail::require(n_per_category >= 1, "DatasetSpec: n_per_category must be >= 1");
    detail::require(F >= 1, "DatasetSpec: F must be >= 1");
    detail::require(C >= 2, "DatasetSpec: C must be >= 2");
    detail::require(diagnostic_feature < F, "DatasetSpec: diagnostic_feature must be < F");
    detail::require(within_sd > 0, "DatasetSpec: within_sd must be > 0");
  }

  /// Diagnostic-feature mean of category c, evenly spaced over
  /// [-mean_separation/2, +mean_separation/2].
  double category_mean(std::size_t c) const {
    const double t = static_cast<double>(c) / static_cast<double>(C - 1);
    return mean_separation * (t - 0.5);
  }
};

/// Exemplars ordered by category, then by within-category index.
inline std::vector<Exemplar> generate_exemplars(const DatasetSpec& spec) {
  spec.validate();
  Rng rng = make_rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.within_sd);
  std::vector<Exemplar> out;
  out.reserve(spec.C * spec.n_per_category);
  for (std::size_t c = 0; c < spec.C; ++c) {
    for (std::size_t j = 0; j < spec.n_per_category; ++j) {
      Exemplar e;
      e.category = c;
      e.features.resize(static_cast<Eigen::Index>(spec.F));
      for (std::size_t f = 0; f < spec.F; ++f) {
        const double center = f == spec.diagnostic_feature ? spec.category_mean(c) : 0.0;
        e.features(static_cast<Eigen::Index>(f)) = center + noise(rng);
      }
      out.push_back(std::move(e));
    }
  }
  return out;
}

/// Pairs exemplars across categories by within-category index: the j-th
/// C-vector of feature i holds feature i of the j-th exemplar of each category.
inline ObservationSet to_observations(const std::vector<Exemplar>& exemplars) {
  if (exemplars.empty()) throw InvalidParameter("to_observations: no exemplars");
  const auto F = exemplars.front().features.size();
  std::size_t C = 0;
  for (const auto& e : exemplars) {
    detail::require_dims(e.features.size() == F, "to_observations: ragged feature vectors");
    C = std::max(C, e.category + 1);
  }
  std::vector<std::vector<const Exemplar*>> by_cat(C);
  for (const auto& e : exemplars) by_cat[e.category].push_back(&e);
  const std::size_t n = by_cat.front().size();
  for (const auto& v : by_cat)
    if (v.size() != n || n == 0)
      throw InvalidParameter("to_observations: categories are unbalanced");

  ObservationSet obs;
  obs.per_feature.assign(static_cast<std::size_t>(F),
                         Matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(C)));
  for (Eigen::Index f = 0; f < F; ++f)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t j = 0; j < n; ++j)
        obs.per_feature[static_cast<std::size_t>(f)](static_cast<Eigen::Index>(j),
                                                     static_cast<Eigen::Index>(c)) =
            by_cat[c][j]->features(f);
  return obs;
}

inline std::string dataset_to_csv(const std::vector<Exemplar>& exemplars) {
  std::string out = "exemplar_id,category";
  const auto F = exemplars.empty() ? 0 : exemplars.front().features.size();
  for (Eigen::Index f = 0; f < F; ++f) out += ",f" + std::to_string(f);
  out += '\n';
  for (std::size_t id = 0; id < exemplars.size(); ++id) {
    const auto& e = exemplars[id];
    out += std::to_string(id) + "," + std::to_string(e.category);
    for (Eigen::Index f = 0; f < e.features.size(); ++f)
      out += "," + io::format_double(e.features(f));
    out += '\n';
  }
  return out;
}

/// Inverse of dataset_to_csv; rows are returned in file order.
inline std::vector<Exemplar> dataset_from_csv(const io::CsvTable& t) {
  t.require_columns({"exemplar_id", "category"});
  std::vector<std::size_t> feature_cols;
  for (std::size_t f = 0;; ++f) {
    const std::string name = "f" + std::to_string(f);
    bool found = false;
    for (std::size_t i = 0; i < t.header.size(); ++i)
      if (t.header[i] == name) {
        feature_cols.push_back(i);
        found = true;
      }
    if (!found) break;
  }
  if (feature_cols.empty()) throw SchemaError("missing column 'f0'");
  const auto cat_col = t.column("category");
  std::vector<Exemplar> out;
  for (const auto& row : t.rows) {
    Exemplar e;
    e.category = io::parse_int<std::size_t>(row[cat_col], "category");
    e.features.resize(static_cast<Eigen::Index>(feature_cols.size()));
    for (std::size_t f = 0; f < feature_cols.size(); ++f)
      e.features(static_cast<Eigen::Index>(f)) =
          io::parse_double(row[feature_cols[f]], "f" + std::to_string(f));
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace overhyp
