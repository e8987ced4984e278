#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "overhyp/error.hpp"
#include "overhyp/experiment/learning.hpp"
#include "overhyp/io/csv.hpp"
#include "overhyp/stats/logistic.hpp"

namespace overhyp::stats {

enum class ClusterBy {
  /// Object index, pooled across datasets.
  Object,
  /// Exemplar identity: (dataset seed, object).
  SeedObject,
};

/// Columns, in order: intercept, block (centered), label_Right, label_Wrong,
/// domain_Right, domain_Wrong, block:label_{Right,Wrong},
/// block:domain_{Right,Wrong}, label_{R,W}:domain_{R,W} (label-major).
/// None is the reference level of both bias factors.
struct DesignMatrix {
  Matrix X;
  Vector y;
  std::vector<long long> clusters;
  std::vector<std::string> columns;
  double block_center = 0.0;
};

struct EffectGroup {
  std::string name;
  std::vector<std::size_t> columns;
};

inline const std::vector<EffectGroup>& effect_groups() {
  static const std::vector<EffectGroup> g{{"Block", {1}},
                                          {"Label Bias", {2, 3}},
                                          {"Domain Bias", {4, 5}},
                                          {"block:Label", {6, 7}},
                                          {"block:Domain", {8, 9}},
                                          {"Label:Domain", {10, 11, 12, 13}}};
  return g;
}

inline DesignMatrix encode_design(const std::vector<ParticipantRecord>& records,
                                  ClusterBy cluster_by = ClusterBy::Object) {
  detail::require(!records.empty(), "encode_design: no records");
  std::set<BiasClass> labels, domains;
  std::set<std::size_t> blocks;
  double block_sum = 0.0;
  for (const auto& r : records) {
    labels.insert(r.label_bias);
    domains.insert(r.domain_bias);
    blocks.insert(r.block);
    block_sum += static_cast<double>(r.block);
  }
  if (labels.size() < 2) throw RankDeficiency("label", "encode_design: factor 'label' has a single level");
  if (domains.size() < 2) throw RankDeficiency("domain", "encode_design: factor 'domain' has a single level");
  if (blocks.size() < 2) throw RankDeficiency("block", "encode_design: factor 'block' has a single level");

  DesignMatrix d;
  d.columns = {"(Intercept)",         "block",
               "label_Right",         "label_Wrong",
               "domain_Right",        "domain_Wrong",
               "block:label_Right",   "block:label_Wrong",
               "block:domain_Right",  "block:domain_Wrong",
               "label_Right:domain_Right", "label_Right:domain_Wrong",
               "label_Wrong:domain_Right", "label_Wrong:domain_Wrong"};
  const auto n = static_cast<Eigen::Index>(records.size());
  d.block_center = block_sum / static_cast<double>(records.size());
  d.X = Matrix::Zero(n, 14);
  d.y.resize(n);
  d.clusters.resize(records.size());
  std::map<std::pair<std::size_t, std::size_t>, long long> ids;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = records[static_cast<std::size_t>(i)];
    const double b = static_cast<double>(r.block) - d.block_center;
    const double l[2] = {r.label_bias == BiasClass::Right ? 1.0 : 0.0, r.label_bias == BiasClass::Wrong ? 1.0 : 0.0};
    const double m[2] = {r.domain_bias == BiasClass::Right ? 1.0 : 0.0,
                         r.domain_bias == BiasClass::Wrong ? 1.0 : 0.0};
    auto row = d.X.row(i);
    row(0) = 1.0;
    row(1) = b;
    row(2) = l[0];
    row(3) = l[1];
    row(4) = m[0];
    row(5) = m[1];
    row(6) = b * l[0];
    row(7) = b * l[1];
    row(8) = b * m[0];
    row(9) = b * m[1];
    row(10) = l[0] * m[0];
    row(11) = l[0] * m[1];
    row(12) = l[1] * m[0];
    row(13) = l[1] * m[1];
    d.y(i) = r.correct;
    const std::pair<std::size_t, std::size_t> key{cluster_by == ClusterBy::SeedObject ? r.seed : 0, r.object};
    d.clusters[static_cast<std::size_t>(i)] = ids.try_emplace(key, static_cast<long long>(ids.size())).first->second;
  }
  return d;
}

struct AnovaRow {
  std::string effect;
  std::size_t df = 0;
  double wald_chi2 = 0.0;
  double p_value = 1.0;
};

struct SettingAnalysis {
  double w = 0.0;
  double s = 0.0;
  std::size_t n_rows = 0;
  std::size_t n_clusters = 0;
  FitResult fit;
  Matrix robust_cov;
  std::vector<std::string> columns;
  std::vector<AnovaRow> rows;
};

inline SettingAnalysis analyze(const std::vector<ParticipantRecord>& records,
                               ClusterBy cluster_by = ClusterBy::Object) {
  SettingAnalysis a;
  const auto d = encode_design(records, cluster_by);
  a.w = records.front().w;
  a.s = records.front().s;
  a.n_rows = records.size();
  a.n_clusters = std::set<long long>(d.clusters.begin(), d.clusters.end()).size();
  a.columns = d.columns;
  a.fit = irls_fit(d.X, d.y);
  a.robust_cov = sandwich_cov(d.X, d.y, a.fit, d.clusters);
  for (const auto& g : effect_groups()) {
    const auto w = wald_group_test(a.fit.beta, a.robust_cov, g.columns);
    a.rows.push_back({g.name, w.df, w.chi2, w.p_value});
  }
  return a;
}

/// One analysis per distinct (w, s), in ascending order. Input row order does
/// not affect the result.
inline std::vector<SettingAnalysis> analyze_by_setting(const std::vector<ParticipantRecord>& records,
                                                       ClusterBy cluster_by = ClusterBy::Object) {
  detail::require(!records.empty(), "analyze_by_setting: no records");
  using Key = std::tuple<std::size_t, std::size_t, std::size_t, std::size_t, std::size_t>;
  std::map<std::pair<double, double>, std::map<Key, const ParticipantRecord*>> groups;
  for (const auto& r : records) {
    auto& g = groups[{r.w, r.s}];
    const Key k{r.condition_id, r.seed, r.block, r.participant, r.object};
    if (!g.emplace(k, &r).second)
      throw SchemaError(fmt::format("duplicate record (condition {}, seed {}, block {}, participant {}, object {})",
                                    r.condition_id, r.seed, r.block, r.participant, r.object));
  }
  std::vector<SettingAnalysis> out;
  for (const auto& [ws, g] : groups) {
    std::vector<ParticipantRecord> sorted;
    sorted.reserve(g.size());
    for (const auto& [k, r] : g) sorted.push_back(*r);
    out.push_back(analyze(sorted, cluster_by));
  }
  return out;
}

inline std::string anova_to_csv(const std::vector<AnovaRow>& rows) {
  std::string out = "effect,df,wald_chi2,p_value\n";
  for (const auto& r : rows)
    out += fmt::format("{},{},{},{}\n", r.effect, r.df, io::format_double(r.wald_chi2), io::format_double(r.p_value));
  return out;
}

/// Coefficient table with model-based and robust standard errors.
inline std::string coefficients_to_csv(const SettingAnalysis& a) {
  std::string out = "term,estimate,se_model,se_robust\n";
  for (std::size_t j = 0; j < a.columns.size(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    out += fmt::format("{},{},{},{}\n", a.columns[j], io::format_double(a.fit.beta(i)),
                       io::format_double(std::sqrt(a.fit.cov_model(i, i))),
                       io::format_double(std::sqrt(a.robust_cov(i, i))));
  }
  return out;
}

inline std::string anova_file_name(double w, double s) {
  return "anova_w" + io::format_double(w) + "_s" + io::format_double(s) + ".csv";
}

}  // namespace overhyp::stats
