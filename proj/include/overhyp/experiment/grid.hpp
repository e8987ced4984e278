#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <map>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "overhyp/datagen.hpp"
#include "overhyp/experiment/condition.hpp"
#include "overhyp/experiment/learning.hpp"
#include "overhyp/io/csv.hpp"
#include "overhyp/rng.hpp"

namespace overhyp {

/// Seed streams under the master seed.
enum class SeedStream : std::uint64_t { Dataset = 1, Fit = 2, Participants = 3 };

inline std::uint64_t dataset_seed(std::uint64_t master, std::size_t seed_index) {
  return derive_seed(master, {static_cast<std::uint64_t>(SeedStream::Dataset), seed_index});
}

/// One dataset per seed index, each from `spec` with its seed replaced.
inline std::vector<std::vector<Exemplar>> make_seed_datasets(DatasetSpec spec, std::uint64_t master,
                                                             std::size_t n_seeds) {
  std::vector<std::vector<Exemplar>> out;
  out.reserve(n_seeds);
  for (std::size_t k = 0; k < n_seeds; ++k) {
    spec.seed = dataset_seed(master, k);
    out.push_back(generate_exemplars(spec));
  }
  return out;
}

struct GridOptions {
  std::size_t n_participants = 75;
  std::uint64_t master_seed = 0;
  std::size_t threads = 1;
  LearnerConstants constants;
  LearningOptions learning;
};

struct CellDiagnostics {
  std::size_t condition_id = 0;
  std::size_t seed = 0;
  std::size_t block = 1;
  std::size_t n_warmup = 0;
  double max_rhat_mu = 1.0;
  double min_ess_mu = 0.0;
  std::size_t divergences = 0;
  bool retried = false;
  bool flagged = false;
};

struct GridResult {
  std::vector<ParticipantRecord> records;
  std::vector<CellDiagnostics> diagnostics;

  std::size_t n_flagged() const {
    return static_cast<std::size_t>(
        std::count_if(diagnostics.begin(), diagnostics.end(), [](const auto& d) { return d.flagged; }));
  }
};

namespace experiment_detail {

struct JobOutput {
  std::vector<ParticipantRecord> records;
  std::vector<CellDiagnostics> diagnostics;
};

inline JobOutput run_job(const Condition& cond, std::size_t seed_index, const std::vector<Exemplar>& data,
                         SamplerConfig cfg, const GridOptions& opts) {
  cfg.seed = derive_seed(opts.master_seed,
                         {static_cast<std::uint64_t>(SeedStream::Fit), cond.id, seed_index});
  const auto blocks = run_block_learning(cond, data, cfg, opts.constants, opts.learning);
  JobOutput out;
  ParticipantRecord tag;
  tag.condition_id = cond.id;
  tag.domain_bias = cond.domain_bias;
  tag.label_bias = cond.label_bias;
  tag.w = cond.w;
  tag.s = cond.s;
  tag.seed = seed_index;
  for (const auto& bp : blocks) {
    Rng rng = make_rng(derive_seed(opts.master_seed, {static_cast<std::uint64_t>(SeedStream::Participants),
                                                      cond.id, seed_index, bp.block}));
    auto recs = simulate_participants(bp, data, opts.n_participants, rng, tag);
    out.records.insert(out.records.end(), recs.begin(), recs.end());
    out.diagnostics.push_back({cond.id, seed_index, bp.block, bp.n_warmup, bp.max_rhat_mu, bp.min_ess_mu,
                               bp.divergences(), bp.retried, bp.flagged});
  }
  return out;
}

}  // namespace experiment_detail

/// Runs every (condition, seed index) job on a pool of `opts.threads` workers.
/// datasets[k] is used for seed index k. Output order is condition, seed,
/// block, participant, object regardless of thread count.
inline GridResult run_grid(const std::vector<Condition>& conditions,
                           const std::vector<std::vector<Exemplar>>& datasets, const SamplerConfig& cfg,
                           const GridOptions& opts = {}) {
  detail::require(!conditions.empty(), "run_grid: empty condition list");
  detail::require(!datasets.empty(), "run_grid: n_seeds must be >= 1");
  const std::size_t n_seeds = datasets.size();
  const std::size_t n_jobs = conditions.size() * n_seeds;
  std::vector<experiment_detail::JobOutput> slots(n_jobs);
  std::vector<std::exception_ptr> errors(n_jobs);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t j; (j = next.fetch_add(1)) < n_jobs;) {
      try {
        slots[j] = experiment_detail::run_job(conditions[j / n_seeds], j % n_seeds, datasets[j % n_seeds], cfg,
                                              opts);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(opts.threads, 1, n_jobs);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  GridResult out;
  for (auto& s : slots) {
    out.records.insert(out.records.end(), s.records.begin(), s.records.end());
    out.diagnostics.insert(out.diagnostics.end(), s.diagnostics.begin(), s.diagnostics.end());
  }
  return out;
}

struct SummaryRow {
  std::size_t condition_id = 0;
  BiasClass domain_bias = BiasClass::None;
  BiasClass label_bias = BiasClass::None;
  double w = 0.0;
  double s = 0.0;
  std::size_t block = 1;
  double mean_accuracy = 0.0;
  double se = 0.0;
  /// Number of participant means in the cell.
  std::size_t n = 0;
};

/// Groups by (condition, block); a participant is identified by (seed,
/// participant). Reports the mean of participant means and sd / sqrt(n).
inline std::vector<SummaryRow> summarize(const std::vector<ParticipantRecord>& records) {
  detail::require(!records.empty(), "summarize: no records");
  struct Acc {
    const ParticipantRecord* first = nullptr;
    std::map<std::pair<std::size_t, std::size_t>, std::pair<double, std::size_t>> participants;
  };
  std::map<std::pair<std::size_t, std::size_t>, Acc> cells;
  for (const auto& r : records) {
    auto& cell = cells[{r.condition_id, r.block}];
    if (!cell.first) cell.first = &r;
    auto& p = cell.participants[{r.seed, r.participant}];
    p.first += r.correct;
    ++p.second;
  }
  std::vector<SummaryRow> out;
  out.reserve(cells.size());
  for (const auto& [key, cell] : cells) {
    SummaryRow row;
    row.condition_id = key.first;
    row.block = key.second;
    row.domain_bias = cell.first->domain_bias;
    row.label_bias = cell.first->label_bias;
    row.w = cell.first->w;
    row.s = cell.first->s;
    row.n = cell.participants.size();
    double sum = 0.0;
    for (const auto& [id, p] : cell.participants) sum += p.first / static_cast<double>(p.second);
    row.mean_accuracy = sum / static_cast<double>(row.n);
    double ss = 0.0;
    for (const auto& [id, p] : cell.participants) {
      const double d = p.first / static_cast<double>(p.second) - row.mean_accuracy;
      ss += d * d;
    }
    row.se = row.n > 1 ? std::sqrt(ss / static_cast<double>(row.n - 1) / static_cast<double>(row.n)) : 0.0;
    out.push_back(row);
  }
  return out;
}

inline const std::vector<std::string>& records_header() {
  static const std::vector<std::string> h{"condition_id", "domain_bias", "label_bias", "w",      "s",
                                          "seed",         "block",       "participant", "object", "correct"};
  return h;
}

inline const std::vector<std::string>& summary_header() {
  static const std::vector<std::string> h{"domain_bias", "label_bias",    "w",  "s",
                                          "block",       "mean_accuracy", "se", "n"};
  return h;
}

namespace experiment_detail {
inline std::string join_header(const std::vector<std::string>& h) {
  std::string out;
  for (std::size_t i = 0; i < h.size(); ++i) out += (i ? "," : "") + h[i];
  return out + "\n";
}
}  // namespace experiment_detail

inline std::string records_to_csv(const std::vector<ParticipantRecord>& records) {
  std::string out = experiment_detail::join_header(records_header());
  out.reserve(out.size() + records.size() * 32);
  for (const auto& r : records)
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", r.condition_id, to_string(r.domain_bias),
                       to_string(r.label_bias), io::format_double(r.w), io::format_double(r.s), r.seed, r.block,
                       r.participant, r.object, r.correct);
  return out;
}

inline std::vector<ParticipantRecord> records_from_csv(const io::CsvTable& t) {
  t.require_columns(records_header());
  const auto c_id = t.column("condition_id"), c_d = t.column("domain_bias"), c_l = t.column("label_bias"),
             c_w = t.column("w"), c_s = t.column("s"), c_seed = t.column("seed"), c_b = t.column("block"),
             c_p = t.column("participant"), c_o = t.column("object"), c_c = t.column("correct");
  std::vector<ParticipantRecord> out;
  out.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    ParticipantRecord r;
    r.condition_id = io::parse_int<std::size_t>(row[c_id], "condition_id");
    try {
      r.domain_bias = parse_bias_class(row[c_d]);
      r.label_bias = parse_bias_class(row[c_l]);
    } catch (const InvalidParameter& e) {
      throw SchemaError(std::string("bias column: ") + e.what());
    }
    r.w = io::parse_double(row[c_w], "w");
    r.s = io::parse_double(row[c_s], "s");
    r.seed = io::parse_int<std::size_t>(row[c_seed], "seed");
    r.block = io::parse_int<std::size_t>(row[c_b], "block");
    r.participant = io::parse_int<std::size_t>(row[c_p], "participant");
    r.object = io::parse_int<std::size_t>(row[c_o], "object");
    r.correct = io::parse_int<int>(row[c_c], "correct");
    if (r.correct != 0 && r.correct != 1) throw SchemaError("column 'correct' must be 0 or 1");
    out.push_back(r);
  }
  return out;
}

inline std::string summary_to_csv(const std::vector<SummaryRow>& rows) {
  std::string out = experiment_detail::join_header(summary_header());
  for (const auto& r : rows)
    out += fmt::format("{},{},{},{},{},{},{},{}\n", to_string(r.domain_bias), to_string(r.label_bias),
                       io::format_double(r.w), io::format_double(r.s), r.block, io::format_double(r.mean_accuracy),
                       io::format_double(r.se), r.n);
  return out;
}

/// Summary rows carry no condition id on disk; ids are reassigned in
/// first-appearance order of (w, s, domain, label).
inline std::vector<SummaryRow> summary_from_csv(const io::CsvTable& t) {
  t.require_columns(summary_header());
  const auto c_d = t.column("domain_bias"), c_l = t.column("label_bias"), c_w = t.column("w"), c_s = t.column("s"),
             c_b = t.column("block"), c_m = t.column("mean_accuracy"), c_se = t.column("se"), c_n = t.column("n");
  std::map<std::tuple<double, double, BiasClass, BiasClass>, std::size_t> ids;
  std::vector<SummaryRow> out;
  for (const auto& row : t.rows) {
    SummaryRow r;
    try {
      r.domain_bias = parse_bias_class(row[c_d]);
      r.label_bias = parse_bias_class(row[c_l]);
    } catch (const InvalidParameter& e) {
      throw SchemaError(std::string("bias column: ") + e.what());
    }
    r.w = io::parse_double(row[c_w], "w");
    r.s = io::parse_double(row[c_s], "s");
    r.block = io::parse_int<std::size_t>(row[c_b], "block");
    r.mean_accuracy = io::parse_double(row[c_m], "mean_accuracy");
    r.se = io::parse_double(row[c_se], "se");
    r.n = io::parse_int<std::size_t>(row[c_n], "n");
    r.condition_id = ids.try_emplace({r.w, r.s, r.domain_bias, r.label_bias}, ids.size()).first->second;
    out.push_back(r);
  }
  return out;
}

inline std::string diagnostics_to_csv(const std::vector<CellDiagnostics>& diags) {
  std::string out = "condition_id,seed,block,n_warmup,max_rhat_mu,min_ess_mu,divergences,retried,flagged\n";
  for (const auto& d : diags)
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", d.condition_id, d.seed, d.block, d.n_warmup,
                       io::format_double(d.max_rhat_mu), io::format_double(d.min_ess_mu), d.divergences,
                       int{d.retried}, int{d.flagged});
  return out;
}

}  // namespace overhyp
