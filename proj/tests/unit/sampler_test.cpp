#include <gtest/gtest.h>

#include <boost/math/distributions/binomial.hpp>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "calibration.hpp"
#include "overhyp/model/parameterization.hpp"
#include "overhyp/rng.hpp"
#include "overhyp/sampler/diagnostics.hpp"
#include "overhyp/sampler/run_chains.hpp"
#include "overhyp/sampler/summary.hpp"

using namespace overhyp;
using namespace calibration;

namespace {

struct PointMass {
  double operator()(const Vector& z) const {
    return z.isZero(0.0) ? 0.0 : -std::numeric_limits<double>::infinity();
  }
};

SamplerConfig config(std::uint64_t seed) {
  SamplerConfig cfg;
  cfg.seed = seed;
  return cfg;
}

std::vector<Vector> iid_chains(std::size_t m, std::size_t n, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::normal_distribution<double> nd;
  std::vector<Vector> out(m, Vector(static_cast<Eigen::Index>(n)));
  for (auto& c : out)
    for (Eigen::Index t = 0; t < c.size(); ++t) c(t) = nd(rng);
  return out;
}

}  // namespace

TEST(RunChains, FiveDimStandardNormalMoments) {
  const auto d = run_chains(StdNormal{}, 5, config(11));
  ASSERT_EQ(d.n_chains(), 4u);
  ASSERT_EQ(d.n_draws(), 1000u);
  for (Eigen::Index j = 0; j < 5; ++j) {
    const auto c = column_chains(d, j);
    EXPECT_NEAR(pooled_mean(c), 0.0, 0.05);
    EXPECT_NEAR(pooled_sd(c), 1.0, 0.1);
  }
}

TEST(RunChains, CorrelatedGaussianCorrelation) {
  const auto d = run_chains(CorrelatedNormal{}, 2, config(12));
  const Matrix x = d.pooled();
  const Vector m = x.colwise().mean();
  const Matrix c = x.rowwise() - m.transpose();
  const Matrix cov = c.transpose() * c / static_cast<double>(x.rows() - 1);
  EXPECT_NEAR(cov(0, 1) / std::sqrt(cov(0, 0) * cov(1, 1)), 0.8, 0.05);
}

TEST(RunChains, MetropolisKernelMatchesMoments) {
  auto cfg = config(13);
  cfg.kind = SamplerKind::AdaptiveMetropolis;
  cfg.n_warmup = 2000;
  cfg.n_samples = 10000;
  const auto d = run_chains(StdNormal{}, 2, cfg);
  for (Eigen::Index j = 0; j < 2; ++j) {
    const auto c = column_chains(d, j);
    EXPECT_NEAR(pooled_mean(c), 0.0, 0.05);
    EXPECT_NEAR(pooled_sd(c), 1.0, 0.1);
  }
}

TEST(RunChains, UnsatisfiableSupportThrowsInitializationError) {
  EXPECT_THROW(run_chains(PointMass{}, 3, config(1)), InitializationError);
}

TEST(RunChains, InvalidConfigRejected) {
  auto cfg = config(1);
  cfg.target_accept = 1.0;
  EXPECT_THROW(run_chains(StdNormal{}, 1, cfg), InvalidParameter);
  cfg = config(1);
  cfg.n_chains = 0;
  EXPECT_THROW(run_chains(StdNormal{}, 1, cfg), InvalidParameter);
}

TEST(RunChains, DeterministicGivenSeed) {
  auto cfg = config(99);
  cfg.n_warmup = 200;
  cfg.n_samples = 200;
  const auto a = run_chains(CorrelatedNormal{}, 2, cfg);
  const auto b = run_chains(CorrelatedNormal{}, 2, cfg);
  for (std::size_t c = 0; c < a.n_chains(); ++c) EXPECT_TRUE(a.chains[c] == b.chains[c]);
  cfg.seed = 100;
  const auto other = run_chains(CorrelatedNormal{}, 2, cfg);
  EXPECT_FALSE(a.chains[0] == other.chains[0]);
}

TEST(RunChains, RetainedDrawsHaveFiniteLogDensity) {
  const LogGamma target;
  for (auto kind : {SamplerKind::Nuts, SamplerKind::AdaptiveMetropolis}) {
    auto cfg = config(5);
    cfg.kind = kind;
    const auto d = run_chains(target, 1, cfg);
    for (const auto& c : d.chains)
      for (Eigen::Index t = 0; t < c.rows(); ++t) ASSERT_TRUE(std::isfinite(target(c.row(t).transpose())));
  }
}

// Posterior moments within 3 Monte-Carlo standard errors of the analytic values.
TEST(Calibration, IsotropicGaussian) {
  const auto d = run_chains(StdNormal{}, 3, config(21));
  for (Eigen::Index j = 0; j < 3; ++j) {
    const auto c = column_chains(d, j);
    EXPECT_LT(std::abs(pooled_mean(c)), 3 * mcse_mean(c));
    EXPECT_LT(std::abs(pooled_sd(c) - 1.0), 3 * mcse_sd(c));
  }
}

TEST(Calibration, CorrelatedGaussian) {
  const auto d = run_chains(CorrelatedNormal{}, 2, config(22));
  for (Eigen::Index j = 0; j < 2; ++j) {
    const auto c = column_chains(d, j);
    EXPECT_LT(std::abs(pooled_mean(c)), 3 * mcse_mean(c));
    EXPECT_LT(std::abs(pooled_sd(c) - 1.0), 3 * mcse_sd(c));
  }
}

TEST(Calibration, GammaViaLogTransform) {
  const LogGamma target;
  const auto d = run_chains(target, 1, config(23));
  const auto x = map_chains(column_chains(d, 0), [](double y) { return std::exp(y); });
  EXPECT_LT(std::abs(pooled_mean(x) - target.a / target.b), 3 * mcse_mean(x));
  EXPECT_LT(std::abs(pooled_sd(x) - std::sqrt(target.a) / target.b), 3 * mcse_sd(x));
}

// With x drawn exactly from N(0, 1), accepted moves across the cut at 0.3 must
// balance in both directions.
TEST(DetailedBalance, RandomWalkFluxAcrossCut) {
  const StdNormal target;
  Rng rng = make_rng(77);
  std::normal_distribution<double> nd;
  sampler::MetropolisKernel<StdNormal, Rng> kernel(target, rng, Vector::Ones(1));
  kernel.set_step_size(1.5);
  const double cut = 0.3;
  std::size_t up = 0, down = 0;
  for (int i = 0; i < 100000; ++i) {
    sampler::PhasePoint z;
    z.q = Vector::Constant(1, nd(rng));
    kernel.prime(z);
    const double before = z.q(0);
    kernel.transition(z);
    const double after = z.q(0);
    if (before < cut && after >= cut) ++up;
    if (before >= cut && after < cut) ++down;
  }
  ASSERT_GT(up + down, 1000u);
  const boost::math::binomial_distribution<double> binom(static_cast<double>(up + down), 0.5);
  const double k = static_cast<double>(std::min(up, down));
  const double p = std::min(1.0, 2.0 * boost::math::cdf(binom, k));
  EXPECT_GT(p, 0.01) << "up=" << up << " down=" << down;
}

TEST(Diagnostics, IdenticalIidChainsRhatNearOne) {
  const auto one = iid_chains(1, 1000, 3).front();
  const std::vector<Vector> chains(4, one);
  const double r = split_rhat(chains);
  EXPECT_GE(r, 0.99);
  EXPECT_LE(r, 1.02);
}

TEST(Diagnostics, ConstantSeparatedChainsRhatLarge) {
  const std::vector<Vector> chains{Vector::Zero(100), Vector::Constant(100, 10.0)};
  EXPECT_GT(split_rhat(chains), 1.5);
}

TEST(Diagnostics, IidEssNearDrawCount) {
  const auto chains = iid_chains(4, 1000, 4);
  const double ess = ess_bulk(chains);
  EXPECT_NEAR(ess / 4000.0, 1.0, 0.3);
  EXPECT_LE(ess, 4000.0);
}

TEST(Diagnostics, RhatAtLeastOneAndEssBoundedAtDefaultLength) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto chains = iid_chains(4, 1000, 100 + s);
    EXPECT_GE(split_rhat(chains), 1.0 - 1e-3);
    EXPECT_LE(ess_bulk(chains), 4000.0);
  }
}

TEST(Diagnostics, EssNeverExceedsDrawCount) {
  for (std::uint64_t s = 0; s < 20; ++s) EXPECT_LE(ess_bulk(iid_chains(4, 50, 200 + s)), 200.0);
}

TEST(Diagnostics, InsufficientDrawsRejected) {
  EXPECT_THROW(split_rhat(std::vector<Vector>{Vector::Zero(10)}), InsufficientDraws);
  EXPECT_THROW(ess_bulk(std::vector<Vector>{Vector::Zero(3), Vector::Zero(3)}), InsufficientDraws);
}

TEST(Diagnostics, PerDimensionShapes) {
  auto cfg = config(8);
  cfg.n_warmup = 100;
  cfg.n_samples = 100;
  const auto d = run_chains(StdNormal{}, 3, cfg);
  const auto diag = diagnose(d);
  EXPECT_EQ(diag.rhat.size(), 3);
  EXPECT_EQ(diag.ess_bulk.size(), 3);
  EXPECT_LT(diag.max_rhat(), 1.1);
}

namespace {

PosteriorDraws draws_from_rows(const std::vector<Vector>& rows) {
  PosteriorDraws d;
  Matrix m(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t t = 0; t < rows.size(); ++t) m.row(static_cast<Eigen::Index>(t)) = rows[t].transpose();
  d.chains.push_back(m);
  return d;
}

}  // namespace

TEST(PosteriorSummary, DegenerateDrawsGiveConstrainedPoint) {
  Hyperparams h;
  h.alpha_d = Vector::Constant(2, 1.0);
  h.alpha_l = Vector::Constant(2, 1.0);
  const Parameterization param(h);
  Vector z(static_cast<Eigen::Index>(param.dim()));
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = 0.1 * static_cast<double>(i) - 0.4;
  const auto d = draws_from_rows(std::vector<Vector>(7, z));
  const auto s = posterior_summary(d, [&](const Vector& v) { return param.flatten(param.constrain(v)); });
  const Vector expected = param.flatten(param.constrain(z));
  EXPECT_LT((s.mean - expected).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT(s.sd.cwiseAbs().maxCoeff(), 1e-14);
}

TEST(PosteriorSummary, SymmetricLogDrawsGiveCoshMean) {
  const double a = 0.7, base = 1.3;
  const Vector plus = Vector::Constant(1, std::log(base) + a);
  const Vector minus = Vector::Constant(1, std::log(base) - a);
  const auto d = draws_from_rows({plus, minus, plus, minus});
  const auto s = posterior_summary(d, [](const Vector& v) { return Vector(v.array().exp()); });
  EXPECT_NEAR(s.mean(0), base * (std::exp(a) / 2 + std::exp(-a) / 2), 1e-12);
}

TEST(PosteriorSummary, SimplexMeanStaysOnSimplex) {
  Hyperparams h;
  h.F = 4;
  h.alpha_d = Vector::Constant(4, 1.0);
  h.alpha_l = Vector::Constant(4, 1.0);
  const Parameterization param(h);
  Rng rng = make_rng(6);
  std::normal_distribution<double> nd(0.0, 2.0);
  std::vector<Vector> rows;
  for (int t = 0; t < 200; ++t) {
    Vector z(static_cast<Eigen::Index>(param.dim()));
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = nd(rng);
    rows.push_back(z);
  }
  const auto s = posterior_summary(draws_from_rows(rows), [&](const Vector& v) { return param.flatten(param.constrain(v)); });
  EXPECT_NEAR(s.mean.head(4).sum(), 1.0, 1e-9);
  EXPECT_NEAR(s.mean.segment(4, 4).sum(), 1.0, 1e-9);
}

TEST(DrawsCsv, HeaderAndRowCount) {
  auto cfg = config(2);
  cfg.n_chains = 2;
  cfg.n_warmup = 20;
  cfg.n_samples = 5;
  const auto csv = draws_to_csv(run_chains(StdNormal{}, 2, cfg));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "chain,draw,dim0,dim1");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 11);
}
