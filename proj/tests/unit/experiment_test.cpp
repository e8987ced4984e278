#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "overhyp/experiment/grid.hpp"
#include "overhyp/model/densities.hpp"
#include "overhyp/model/transforms.hpp"

using namespace overhyp;

namespace {

SamplerConfig short_config(std::uint64_t seed, std::size_t n = 300) {
  SamplerConfig cfg;
  cfg.n_chains = 2;
  cfg.n_warmup = n;
  cfg.n_samples = n;
  cfg.seed = seed;
  return cfg;
}

Condition condition(BiasClass d, BiasClass l, double w = 0.3, double s = 0.03) {
  Condition c;
  c.domain_bias = d;
  c.label_bias = l;
  c.w = w;
  c.s = s;
  return c;
}

std::vector<Exemplar> dataset(std::uint64_t seed) {
  DatasetSpec spec;
  spec.seed = seed;
  return generate_exemplars(spec);
}

LatentState belief(const Matrix& mu, const Matrix& sigma) {
  LatentState st;
  st.p = Vector::Constant(mu.rows(), 1.0 / static_cast<double>(mu.rows()));
  st.k = st.p;
  st.omega = 0.3;
  st.mu = mu;
  st.sigma = sigma;
  return st;
}

double accuracy(const std::vector<ParticipantRecord>& r) {
  double s = 0;
  for (const auto& x : r) s += x.correct;
  return s / static_cast<double>(r.size());
}

}  // namespace

TEST(ConditionGrid, DefaultHasTwentySevenCells) {
  const auto g = make_condition_grid(default_ws_settings());
  ASSERT_EQ(g.size(), 27u);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g[i].id, i);
  EXPECT_EQ(g[0].domain_bias, BiasClass::Right);
  EXPECT_EQ(g[1].label_bias, BiasClass::None);
  EXPECT_EQ(g[3].domain_bias, BiasClass::None);
  EXPECT_DOUBLE_EQ(g[9].w, 0.3);
  EXPECT_DOUBLE_EQ(g[9].s, 0.03);
  EXPECT_DOUBLE_EQ(g[26].w, 0.5);
}

TEST(ConditionGrid, HyperparamsFollowBiasTable) {
  const auto h = make_hyperparams(condition(BiasClass::Right, BiasClass::Wrong), {});
  EXPECT_DOUBLE_EQ(h.alpha_d(0), 1.0);
  EXPECT_DOUBLE_EQ(h.alpha_d(1), 10.0);
  EXPECT_DOUBLE_EQ(h.alpha_l(0), 10.0);
  EXPECT_DOUBLE_EQ(h.alpha_l(1), 1.0);
  auto flipped = condition(BiasClass::Right, BiasClass::None);
  flipped.flip_orientation = true;
  EXPECT_DOUBLE_EQ(make_hyperparams(flipped, {}).alpha_d(0), 10.0);
  EXPECT_THROW(make_hyperparams(condition(BiasClass::None, BiasClass::None, 0.3, -1.0), {}), InvalidParameter);
}

// A Right bias must leave the diagnostic feature's category means less tied
// together a priori than the other feature's.
TEST(OrientationCalibration, RightBiasLowersDiagnosticCorrelation) {
  Rng rng = make_rng(31);
  for (auto [cls, lower] : {std::pair{BiasClass::Right, true}, std::pair{BiasClass::Wrong, false}}) {
    const auto h = make_hyperparams(condition(BiasClass::None, cls, 0.3, 0.0), {});
    double r0 = 0, r1 = 0;
    for (int t = 0; t < 2000; ++t) {
      const Vector p = sample_dirichlet(h.alpha_d, rng);
      const Vector k = sample_dirichlet(h.alpha_l, rng);
      r0 += feature_correlation(p, k, h.w, 0, h.gamma);
      r1 += feature_correlation(p, k, h.w, 1, h.gamma);
    }
    EXPECT_EQ(r0 < r1, lower) << to_string(cls);
  }
}

TEST(OrientationCalibration, RightLabelOutperformsWrongLabel) {
  const auto data = dataset(41);
  double acc[2] = {0, 0};
  int i = 0;
  for (auto cls : {BiasClass::Right, BiasClass::Wrong}) {
    LearningOptions opts;
    opts.n_blocks = 1;
    const auto bps = run_block_learning(condition(BiasClass::None, cls), data, short_config(5, 500), {}, opts);
    Rng rng = make_rng(6);
    acc[i++] = accuracy(simulate_participants(bps.front(), data, 75, rng));
  }
  EXPECT_GT(acc[0], acc[1]);
}

TEST(RunBlockLearning, FourBlocksAccumulateEvidence) {
  const auto bps = run_block_learning(condition(BiasClass::None, BiasClass::None), dataset(1), short_config(2));
  ASSERT_EQ(bps.size(), 4u);
  for (std::size_t b = 0; b < 4; ++b) {
    EXPECT_EQ(bps[b].block, b + 1);
    EXPECT_EQ(bps[b].n_observations, 8 * (b + 1));
    EXPECT_EQ(bps[b].draws.n_draws(), 300u);
    EXPECT_EQ(bps[b].mu_mean.rows(), 2);
    EXPECT_EQ(bps[b].sigma_sd.cols(), 2);
  }
}

TEST(RunBlockLearning, SingleBlockUsesBaseDataset) {
  LearningOptions opts;
  opts.n_blocks = 1;
  const auto bps = run_block_learning(condition(BiasClass::Right, BiasClass::Right), dataset(1), short_config(3), {}, opts);
  ASSERT_EQ(bps.size(), 1u);
  EXPECT_EQ(bps[0].n_observations, 8u);
}

TEST(RunBlockLearning, DiagnosticMeanSdShrinksAcrossBlocks) {
  std::vector<double> sd(4, 0.0);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto bps =
        run_block_learning(condition(BiasClass::None, BiasClass::None), dataset(10 + s), short_config(20 + s, 500));
    for (std::size_t b = 0; b < 4; ++b) sd[b] += bps[b].mu_sd(0, 0) + bps[b].mu_sd(0, 1);
  }
  for (std::size_t b = 1; b < 4; ++b) EXPECT_LT(sd[b], sd[b - 1]) << "block " << b + 1;
}

TEST(RunBlockLearning, FailedDiagnosticsRetriedThenFlagged) {
  LearningOptions opts;
  opts.n_blocks = 1;
  opts.rhat_threshold = 0.5;
  const auto bps = run_block_learning(condition(BiasClass::None, BiasClass::None), dataset(1), short_config(4, 100), {}, opts);
  EXPECT_TRUE(bps[0].retried);
  EXPECT_TRUE(bps[0].flagged);
  EXPECT_EQ(bps[0].n_warmup, 200u);
  EXPECT_GT(bps[0].max_rhat_mu, 0.5);
}

TEST(RunBlockLearning, UnbalancedDatasetRejected) {
  auto data = dataset(1);
  data.pop_back();
  EXPECT_THROW(run_block_learning(condition(BiasClass::None, BiasClass::None), data, short_config(1)), InvalidParameter);
}

TEST(ClassifyExemplar, AtCategoryZeroMeans) {
  Matrix mu(2, 2), sigma = Matrix::Constant(2, 2, 0.5);
  mu << -1, 1, 0.2, 0.3;
  Vector x(2);
  x << -1, 0.2;
  EXPECT_EQ(classify_exemplar(x, belief(mu, sigma), 1.0), 0u);
  x << 1, 0.3;
  EXPECT_EQ(classify_exemplar(x, belief(mu, sigma), 1.0), 1u);
}

TEST(ClassifyExemplar, TieGoesToLowerIndex) {
  const Matrix mu = Matrix::Constant(2, 3, 0.4), sigma = Matrix::Constant(2, 3, 0.7);
  EXPECT_EQ(classify_exemplar(Vector::Constant(2, -1.3), belief(mu, sigma), 1.0), 0u);
}

TEST(ClassifyExemplar, MatchesBruteForceProductOfDensities) {
  Rng rng = make_rng(12);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0.1, 2.0);
  for (int t = 0; t < 500; ++t) {
    Matrix mu(2, 2), sigma(2, 2);
    for (Eigen::Index i = 0; i < 4; ++i) {
      mu(i) = nd(rng);
      sigma(i) = ud(rng);
    }
    const Vector x = Vector::NullaryExpr(2, [&](Eigen::Index) { return 2 * nd(rng); });
    double like[2];
    for (int c = 0; c < 2; ++c) {
      like[c] = 1.0;
      for (int i = 0; i < 2; ++i) {
        const double v = sigma(i, c) * sigma(i, c) + 1.0;
        like[c] *= std::exp(-0.5 * (x(i) - mu(i, c)) * (x(i) - mu(i, c)) / v) / std::sqrt(2 * M_PI * v);
      }
    }
    EXPECT_EQ(classify_exemplar(x, belief(mu, sigma), 1.0), like[1] > like[0] ? 1u : 0u);
  }
}

TEST(ClassifyExemplar, DimensionMismatchRejected) {
  EXPECT_THROW(classify_exemplar(Vector::Zero(3), belief(Matrix::Zero(2, 2), Matrix::Ones(2, 2)), 1.0),
               DimensionMismatch);
}

namespace {

// A posterior whose every draw is the same state.
BlockPosterior point_posterior(const LatentState& st, std::size_t n_draws) {
  BlockPosterior bp;
  bp.hyper = make_hyperparams(condition(BiasClass::None, BiasClass::None), {});
  const Parameterization param(bp.hyper);
  const Vector z = param.unconstrain(st);
  bp.draws.chains.assign(2, Matrix(z.transpose().replicate(static_cast<Eigen::Index>(n_draws), 1)));
  return bp;
}

LatentState truth() {
  Matrix mu(2, 2), sigma = Matrix::Constant(2, 2, 0.25);
  mu << -1, 1, 0, 0;
  return belief(mu, sigma);
}

}  // namespace

TEST(SimulateParticipants, CompleteCrossing) {
  const auto data = dataset(3);
  const auto bp = point_posterior(truth(), 50);
  Rng rng = make_rng(1);
  const auto recs = simulate_participants(bp, data, 75, rng);
  ASSERT_EQ(recs.size(), 1200u);
  std::map<std::size_t, std::set<std::size_t>> objects;
  for (const auto& r : recs) objects[r.participant].insert(r.object);
  ASSERT_EQ(objects.size(), 75u);
  for (const auto& [p, o] : objects) EXPECT_EQ(o.size(), 16u);
}

TEST(SimulateParticipants, TrueBeliefsClassifyPerfectly) {
  const auto data = dataset(4);
  Rng rng = make_rng(2);
  EXPECT_DOUBLE_EQ(accuracy(simulate_participants(point_posterior(truth(), 50), data, 75, rng)), 1.0);
}

TEST(SimulateParticipants, TooFewDrawsRejected) {
  Rng rng = make_rng(3);
  EXPECT_THROW(simulate_participants(point_posterior(truth(), 30), dataset(1), 75, rng), InsufficientDraws);
}

TEST(SimulateParticipants, DrawsChosenWithoutReplacement) {
  // Draw k puts feature-1 means at (10.5 + k, 10 + k); a probe at 10 + o is then
  // classified correctly iff o <= k, so a participant's score identifies k.
  auto bp = point_posterior(truth(), 1);
  const Parameterization param(bp.hyper);
  Matrix all(75, static_cast<Eigen::Index>(param.dim()));
  for (int k = 0; k < 75; ++k) {
    auto st = truth();
    st.mu.row(0).setZero();
    st.mu(1, 0) = 10.5 + k;
    st.mu(1, 1) = 10.0 + k;
    all.row(k) = param.unconstrain(st).transpose();
  }
  bp.draws.chains = {all.topRows(25), all.middleRows(25, 25), all.bottomRows(25)};
  std::vector<Exemplar> probe;
  for (int o = 0; o < 75; ++o) {
    Exemplar e;
    e.features = Vector(2);
    e.features << 0.0, 10.0 + o;
    e.category = 1;
    probe.push_back(e);
  }
  Rng rng = make_rng(4);
  const auto recs = simulate_participants(bp, probe, 75, rng);
  std::vector<int> score(75, 0);
  for (const auto& r : recs) score[r.participant] += r.correct;
  EXPECT_EQ(std::set<int>(score.begin(), score.end()).size(), 75u);
}

TEST(RunGrid, OneConditionOneSeedRecordCount) {
  const std::vector<Condition> conds{condition(BiasClass::None, BiasClass::None)};
  GridOptions opts;
  opts.master_seed = 9;
  const auto res = run_grid(conds, make_seed_datasets({}, 9, 1), short_config(0, 150), opts);
  EXPECT_EQ(res.records.size(), 4u * 75 * 16);
  EXPECT_EQ(res.diagnostics.size(), 4u);
}

TEST(RunGrid, DeterministicAndThreadIndependent) {
  auto conds = make_condition_grid({{0.3, 0.03}}, {BiasClass::None, BiasClass::Wrong}, {BiasClass::Right});
  GridOptions opts;
  opts.master_seed = 123;
  opts.learning.n_blocks = 2;
  opts.n_participants = 10;
  const auto data = make_seed_datasets({}, opts.master_seed, 2);
  const auto cfg = short_config(0, 100);
  const auto a = run_grid(conds, data, cfg, opts);
  const auto b = run_grid(conds, data, cfg, opts);
  opts.threads = 3;
  const auto c = run_grid(conds, data, cfg, opts);
  EXPECT_EQ(a.records.size(), 2u * 2 * 2 * 10 * 16);
  EXPECT_EQ(records_to_csv(a.records), records_to_csv(b.records));
  EXPECT_EQ(records_to_csv(a.records), records_to_csv(c.records));
  EXPECT_EQ(summary_to_csv(summarize(a.records)), summary_to_csv(summarize(c.records)));
  EXPECT_EQ(diagnostics_to_csv(a.diagnostics), diagnostics_to_csv(c.diagnostics));
}

TEST(RunGrid, EmptyInputsRejected) {
  EXPECT_THROW(run_grid({}, make_seed_datasets({}, 1, 1), short_config(0)), InvalidParameter);
  EXPECT_THROW(run_grid({condition(BiasClass::None, BiasClass::None)}, {}, short_config(0)), InvalidParameter);
}

TEST(SeedDatasets, IndependentPerSeedIndex) {
  const auto d = make_seed_datasets({}, 5, 3);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_FALSE(d[0][0].features == d[1][0].features);
  EXPECT_TRUE(make_seed_datasets({}, 5, 3)[2][7].features == d[2][7].features);
}

namespace {

std::vector<ParticipantRecord> synthetic_records(std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::bernoulli_distribution coin(0.7);
  std::vector<ParticipantRecord> out;
  for (std::size_t cond = 0; cond < 3; ++cond)
    for (std::size_t s = 0; s < 2; ++s)
      for (std::size_t b = 1; b <= 4; ++b)
        for (std::size_t p = 0; p < 5; ++p)
          for (std::size_t o = 0; o < 16; ++o) {
            ParticipantRecord r;
            r.condition_id = cond;
            r.domain_bias = kBiasClasses[cond];
            r.label_bias = BiasClass::None;
            r.w = 0.3;
            r.s = 0.03;
            r.seed = s;
            r.block = b;
            r.participant = p;
            r.object = o;
            r.correct = coin(rng);
            out.push_back(r);
          }
  return out;
}

}  // namespace

TEST(Summarize, AllCorrectGivesOneAndZeroSe) {
  auto recs = synthetic_records(1);
  for (auto& r : recs) r.correct = 1;
  for (const auto& row : summarize(recs)) {
    EXPECT_DOUBLE_EQ(row.mean_accuracy, 1.0);
    EXPECT_DOUBLE_EQ(row.se, 0.0);
    EXPECT_EQ(row.n, 10u);
  }
}

TEST(Summarize, HalfCorrectGivesHalf) {
  auto recs = synthetic_records(2);
  for (auto& r : recs) r.correct = r.object % 2;
  for (const auto& row : summarize(recs)) EXPECT_DOUBLE_EQ(row.mean_accuracy, 0.5);
}

TEST(Summarize, MatchesStreamingOracle) {
  const auto recs = synthetic_records(3);
  // Records arrive grouped by (condition, seed, block, participant) in
  // 16-object runs; fold each participant mean into a per-cell Welford state.
  struct W {
    double n = 0, mean = 0, m2 = 0;
  };
  std::map<std::pair<std::size_t, std::size_t>, W> cells;
  for (std::size_t i = 0; i < recs.size(); i += 16) {
    double pm = 0;
    for (std::size_t j = i; j < i + 16; ++j) pm += recs[j].correct;
    pm /= 16;
    auto& w = cells[{recs[i].condition_id, recs[i].block}];
    w.n += 1;
    const double d = pm - w.mean;
    w.mean += d / w.n;
    w.m2 += d * (pm - w.mean);
  }
  const auto rows = summarize(recs);
  ASSERT_EQ(rows.size(), cells.size());
  for (const auto& row : rows) {
    const auto& w = cells.at({row.condition_id, row.block});
    EXPECT_NEAR(row.mean_accuracy, w.mean, 1e-12);
    EXPECT_NEAR(row.se, std::sqrt(w.m2 / (w.n - 1) / w.n), 1e-12);
  }
}

TEST(Summarize, EmptyRejected) { EXPECT_THROW(summarize({}), InvalidParameter); }

TEST(RecordsCsv, RoundTrip) {
  const auto recs = synthetic_records(4);
  const auto text = records_to_csv(recs);
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "condition_id,domain_bias,label_bias,w,s,seed,block,participant,object,correct");
  std::istringstream in(text);
  EXPECT_EQ(records_to_csv(records_from_csv(io::parse_csv(in))), text);
}

TEST(RecordsCsv, MissingColumnNamed) {
  std::istringstream in("condition_id,domain_bias,label_bias,w,s,seed,block,participant,object\n");
  try {
    records_from_csv(io::parse_csv(in));
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("'correct'"), std::string::npos);
  }
}

TEST(SummaryCsv, RoundTrip) {
  const auto rows = summarize(synthetic_records(5));
  const auto text = summary_to_csv(rows);
  EXPECT_EQ(text.substr(0, text.find('\n')), "domain_bias,label_bias,w,s,block,mean_accuracy,se,n");
  std::istringstream in(text);
  const auto back = summary_from_csv(io::parse_csv(in));
  EXPECT_EQ(summary_to_csv(back), text);
  EXPECT_EQ(back.back().condition_id, 2u);
}
