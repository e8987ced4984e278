// overhyp: generate data, run the bias grid, summarize, analyze and plot.

#include <CLI11.hpp>

#include <fmt/format.h>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "overhyp/datagen.hpp"
#include "overhyp/error.hpp"
#include "overhyp/experiment/grid.hpp"
#include "overhyp/io/csv.hpp"
#include "overhyp/pipeline.hpp"
#include "overhyp/plot/svg.hpp"
#include "overhyp/stats/design.hpp"

namespace fs = std::filesystem;
using namespace overhyp;

namespace {

enum Exit : int { kOk = 0, kGeneric = 1, kConfig = 2, kDiagnostics = 3, kIo = 4, kData = 5 };

struct Args {
  RunConfig cfg;
  std::string out = "out";
  std::vector<std::string> settings{"0.2:0", "0.3:0.03", "0.5:0"};
  std::vector<std::string> domain_classes{"Right", "None", "Wrong"};
  std::vector<std::string> label_classes{"Right", "None", "Wrong"};
  std::string sampler = "nuts";
  std::string dataset_path;
  std::string records_path;
  std::string summary_path;
  std::string cluster = "object";
};

std::pair<double, double> parse_setting(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw InvalidParameter("setting '" + s + "' is not of the form w:s");
  try {
    std::size_t used_w = 0, used_s = 0;
    const std::string ws = s.substr(0, colon), ss = s.substr(colon + 1);
    const double w = std::stod(ws, &used_w), sd = std::stod(ss, &used_s);
    if (used_w != ws.size() || used_s != ss.size()) throw std::invalid_argument(s);
    return {w, sd};
  } catch (const std::logic_error&) {
    throw InvalidParameter("setting '" + s + "' is not of the form w:s");
  }
}

void finalize(Args& a) {
  a.cfg.ws_settings.clear();
  for (const auto& s : a.settings) a.cfg.ws_settings.push_back(parse_setting(s));
  a.cfg.domain_classes.clear();
  for (const auto& s : a.domain_classes) a.cfg.domain_classes.push_back(parse_bias_class(s));
  a.cfg.label_classes.clear();
  for (const auto& s : a.label_classes) a.cfg.label_classes.push_back(parse_bias_class(s));
  a.cfg.sampler.kind = parse_sampler_kind(a.sampler);
  a.cfg.validate();
}

fs::path out_file(const Args& a, const std::string& name) { return fs::path(a.out) / name; }

void ensure_out_dir(const Args& a) {
  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec || !fs::is_directory(a.out)) throw IoError("cannot create output directory '" + a.out + "'");
}

void write(const fs::path& p, const std::string& text) {
  io::write_text(p.string(), text);
  fmt::print(stderr, "wrote {}\n", p.string());
}

int cmd_gen_data(const Args& a) {
  ensure_out_dir(a);
  write(out_file(a, "dataset.csv"), dataset_to_csv(a.cfg.first_dataset()));
  return kOk;
}

int cmd_run(const Args& a) {
  ensure_out_dir(a);
  std::vector<Exemplar> fixed;
  if (!a.dataset_path.empty()) fixed = dataset_from_csv(io::read_csv(a.dataset_path));
  const auto result = run_pipeline(a.cfg, a.dataset_path.empty() ? nullptr : &fixed);
  write(out_file(a, "records.csv"), records_to_csv(result.records));
  write(out_file(a, "summary.csv"), summary_to_csv(summarize(result.records)));
  write(out_file(a, "diagnostics.log"), diagnostics_to_csv(result.diagnostics));
  const auto flagged = result.n_flagged();
  if (flagged > 0) {
    fmt::print(stderr, "{} of {} fits failed convergence diagnostics after retry (see diagnostics.log)\n", flagged,
               result.diagnostics.size());
    return kDiagnostics;
  }
  return kOk;
}

int cmd_summarize(const Args& a) {
  ensure_out_dir(a);
  const auto path = a.records_path.empty() ? out_file(a, "records.csv").string() : a.records_path;
  write(out_file(a, "summary.csv"), summary_to_csv(summarize(records_from_csv(io::read_csv(path)))));
  return kOk;
}

int cmd_analyze(const Args& a) {
  ensure_out_dir(a);
  const auto path = a.records_path.empty() ? out_file(a, "records.csv").string() : a.records_path;
  const auto cluster = a.cluster == "object" ? stats::ClusterBy::Object : stats::ClusterBy::SeedObject;
  for (const auto& s : stats::analyze_by_setting(records_from_csv(io::read_csv(path)), cluster)) {
    write(out_file(a, stats::anova_file_name(s.w, s.s)), stats::anova_to_csv(s.rows));
    write(out_file(a, "coefficients_w" + io::format_double(s.w) + "_s" + io::format_double(s.s) + ".csv"),
          stats::coefficients_to_csv(s));
    if (!s.fit.converged) fmt::print(stderr, "warning: fit for {} did not converge\n", plot::setting_title(s.w, s.s));
  }
  return kOk;
}

int cmd_plot(const Args& a) {
  ensure_out_dir(a);
  const auto path = a.summary_path.empty() ? out_file(a, "summary.csv").string() : a.summary_path;
  for (const auto& f : plot::render_all(summary_from_csv(io::read_csv(path)))) write(out_file(a, f.name), f.content);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  Args a;
  auto& c = a.cfg;
  CLI::App app{"Hierarchical Bayesian category learning with domain and label biases"};
  app.set_config("--config", "", "Key-value config file (TOML/INI); command-line flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.fallthrough();

  app.add_option("--seed", c.master_seed, "Master seed")->capture_default_str();
  app.add_option("--out", a.out, "Output directory")->capture_default_str();
  app.add_option("--threads", c.threads, "Worker threads")->capture_default_str()->check(CLI::Range(1, 1024));

  app.add_option("--n-per-category", c.dataset.n_per_category, "Exemplars per category")->capture_default_str();
  app.add_option("--features", c.dataset.F, "Number of features")->capture_default_str();
  app.add_option("--categories", c.dataset.C, "Number of categories")->capture_default_str();
  app.add_option("--diagnostic-feature", c.dataset.diagnostic_feature, "Index of the diagnostic feature")
      ->capture_default_str();
  app.add_option("--mean-separation", c.dataset.mean_separation, "Category mean separation")->capture_default_str();
  app.add_option("--within-sd", c.dataset.within_sd, "Within-category sd")->capture_default_str();

  app.add_option("--settings", a.settings, "(w, s) settings as w:s")->capture_default_str();
  app.add_option("--domain-classes", a.domain_classes, "Domain bias classes")->capture_default_str();
  app.add_option("--label-classes", a.label_classes, "Label bias classes")->capture_default_str();
  app.add_flag("--flip-orientation", c.flip_orientation, "Point Right biases away from the diagnostic feature");
  app.add_option("--gamma", c.gamma, "Power-transform steepness")->capture_default_str();
  app.add_option("--sigma-s2", c.sigma_s2, "Perceptual noise variance")->capture_default_str();
  app.add_option("--blocks", c.n_blocks, "Learning blocks")->capture_default_str();
  app.add_option("--participants", c.n_participants, "Simulated participants per cell")->capture_default_str();
  app.add_option("--seeds", c.n_seeds, "Independent dataset/posterior seeds")->capture_default_str();

  app.add_option("--sampler", a.sampler, "nuts | metropolis")->capture_default_str();
  app.add_option("--chains", c.sampler.n_chains, "Chains per fit")->capture_default_str();
  app.add_option("--warmup", c.sampler.n_warmup, "Warmup iterations per chain")->capture_default_str();
  app.add_option("--draws", c.sampler.n_samples, "Retained draws per chain")->capture_default_str();
  app.add_option("--target-accept", c.sampler.target_accept, "Adaptation acceptance target")->capture_default_str();
  app.add_option("--max-tree-depth", c.sampler.max_tree_depth, "NUTS tree depth cap")->capture_default_str();
  app.add_option("--rhat-threshold", c.rhat_threshold, "R-hat above which a fit is retried, then flagged")
      ->capture_default_str();

  auto* gen = app.add_subcommand("gen-data", "Write the seed-0 dataset as dataset.csv");
  auto* run = app.add_subcommand("run", "Run the grid; write records.csv, summary.csv, diagnostics.log");
  run->add_option("--dataset", a.dataset_path, "Use this dataset CSV for every seed")->check(CLI::ExistingFile);
  auto* sum = app.add_subcommand("summarize", "Summarize records.csv into summary.csv");
  sum->add_option("--records", a.records_path, "Records CSV (default <out>/records.csv)");
  auto* ana = app.add_subcommand("analyze", "Wald tests per (w, s) setting");
  ana->add_option("--records", a.records_path, "Records CSV (default <out>/records.csv)");
  ana->add_option("--cluster", a.cluster, "object | seed-object")
      ->capture_default_str()
      ->check(CLI::IsMember({"object", "seed-object"}));
  auto* plt = app.add_subcommand("plot", "Render SVG figures from summary.csv");
  plt->add_option("--summary", a.summary_path, "Summary CSV (default <out>/summary.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    finalize(a);
  } catch (const Error& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kConfig;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(a);
    if (run->parsed()) return cmd_run(a);
    if (sum->parsed()) return cmd_summarize(a);
    if (ana->parsed()) return cmd_analyze(a);
    if (plt->parsed()) return cmd_plot(a);
  } catch (const IoError& e) {
    fmt::print(stderr, "I/O error: {}\n", e.what());
    return kIo;
  } catch (const SchemaError& e) {
    fmt::print(stderr, "data error: {}\n", e.what());
    return kData;
  } catch (const RankDeficiency& e) {
    fmt::print(stderr, "data error: {}\n", e.what());
    return kData;
  } catch (const SeparationError& e) {
    fmt::print(stderr, "data error: {}\n", e.what());
    return kData;
  } catch (const InvalidParameter& e) {
    fmt::print(stderr, "data error: {}\n", e.what());
    return kData;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kGeneric;
  }
  return kGeneric;
}
