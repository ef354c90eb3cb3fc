#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "webrel/config.hpp"
#include "webrel/sweep.hpp"

using namespace webrel;

namespace {

Config parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, DefaultsAreTable1) {
  const Config c;
  EXPECT_EQ(c.geometry.span, 1.0);
  EXPECT_EQ(c.geometry.half_width, 0.6);
  EXPECT_EQ(c.geometry.thickness, 8e-5);
  EXPECT_EQ(c.material.youngs, 4e9);
  EXPECT_EQ(c.material.g_c, 6500.0);
  EXPECT_EQ(c.run.band_length, 3.5e5);
  EXPECT_EQ(c.tension.a, 1.0);
}

TEST(Config, ShippedDefaultFileMatchesBuiltins) {
  const auto c = load_config(std::filesystem::path(WEBREL_SOURCE_DIR) / "configs" / "default.ini");
  const Config d;
  EXPECT_EQ(c.tension.t0, d.tension.t0);
  EXPECT_EQ(c.tension.c_t, d.tension.c_t);
  EXPECT_EQ(c.cracks.mean, d.cracks.mean);
  EXPECT_EQ(c.spacing.param, d.spacing.param);
  EXPECT_EQ(c.run.seed, d.run.seed);
  EXPECT_EQ(c.fracture_model().table().hash(), WeightFunctionTable::standard().hash());
}

TEST(Config, ParsesSectionsAndLists) {
  const auto c = parse("[tension]\nt0 = 100, 200\nc_T = 0.2\n[spacing]\nmodel = binomial\nparam = 4\np_s = 0.5\n"
                       "[run]\nseed = 7\nsamples = 12\n");
  EXPECT_EQ(c.tension.t0, (std::vector<double>{100.0, 200.0}));
  EXPECT_EQ(c.spacing.kind, SpacingKind::Binomial);
  EXPECT_EQ(c.run.seed, 7u);
  EXPECT_EQ(c.run.samples, 12u);
  const auto m = std::get<BinomialLattice>(c.spacing_model(4.0));
  EXPECT_EQ(m.zone, c.run.band_length);
}

TEST(Config, FieldLevelDiagnostics) {
  EXPECT_NE(error_of("[tension]\nbogus = 1\n").find("tension.bogus"), std::string::npos);
  EXPECT_NE(error_of("[nosuch]\nx = 1\n").find("nosuch"), std::string::npos);
  EXPECT_NE(error_of("[run]\nsamples = -3\n").find("run.samples"), std::string::npos);
  EXPECT_NE(error_of("[tension]\nt0 = 100, abc\n").find("tension.t0"), std::string::npos);
  EXPECT_NE(error_of("[spacing]\nmodel = fractal\n").find("spacing.model"), std::string::npos);
}

TEST(Config, RejectsInconsistentModels) {
  EXPECT_FALSE(error_of("[spacing]\nmodel = poisson\nparam = 0.001\n").empty());
  EXPECT_TRUE(error_of("[spacing]\nmodel = poisson\nparam = 0.001\n[tension]\nc_T = 0\n").empty());
  EXPECT_FALSE(error_of("[spacing]\nparam = 0.5\n").empty());
  EXPECT_FALSE(error_of("[spacing]\nmodel = lognormal3\nparam = 0.5\n").empty());
}

TEST(Sweep, SmallGridShapeAndCsv) {
  Config c;
  c.tension.t0 = {350.0};
  c.tension.c_t = {0.0, 0.1};
  c.cracks.mean = {0.015};
  c.spacing.param = {3.0, 6.0};
  c.run.band_length = 30.0;
  c.run.inner = 20;
  c.run.inner_max = 20;
  c.run.q3_samples = 2000;
  const auto frac = c.fracture_model();
  const auto rows = run_reliability_sweep(c, frac);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].c_t, 0.0);
  EXPECT_EQ(rows[0].n_inner, 0u);
  EXPECT_EQ(rows[1].n_inner, 20u);
  EXPECT_DOUBLE_EQ(rows[0].result.estimate, std::pow(qbar(350.0, CrackLengthDist::from_mean(0.015), frac), 10.0));
  std::ostringstream os;
  write_sweep_csv(os, base_metadata(c, frac), rows);
  const auto text = os.str();
  EXPECT_NE(text.find("# seed=20240501"), std::string::npos);
  EXPECT_NE(text.find("# weight_table_hash="), std::string::npos);
  EXPECT_NE(text.find("# truncation_tol="), std::string::npos);
  EXPECT_NE(text.find(kSweepHeader), std::string::npos);
}

TEST(Sweep, CriticalTensionReportsInfeasibleRows) {
  Config c;
  c.tension.c_t = {0.0};
  c.cracks.mean = {0.015};
  c.spacing.kind = SpacingKind::Poisson;
  c.spacing.param = {1.0 / 5000.0, 2000.0};
  const auto rows = run_critical_tension(c, c.fracture_model());
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].status, "ok");
  EXPECT_GT(rows[0].tension, 0.0);
  EXPECT_EQ(rows[1].status.rfind("infeasible", 0), 0u);
}

TEST(Sweep, ConditionalStartLiesBelowBoundary) {
  const auto p = OuParams::from_cv(350.0, 1.0, 0.1);
  const double b = 385.0;
  double prev = -INFINITY;
  for (double q : {0.05, 0.5, 0.95}) {
    const double y = conditional_start(p, b, q);
    EXPECT_LT(y, b);
    EXPECT_GT(y, prev);
    prev = y;
    EXPECT_NEAR(normal_cdf((y - 350.0) / 35.0) / normal_cdf(1.0), q, 1e-12);
  }
}

TEST(Sweep, Fmt17RoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 0.99958819471905458}) EXPECT_EQ(std::stod(fmt17(v)), v);
  EXPECT_EQ(fmt17(INFINITY), "inf");
}

TEST(Sweep, FirstPassageZUsesBinomialFloor) {
  FirstPassageRow r{350.0, 0.1, 3.0, 455.0, 290.0, 0.5, 1.0 - 1e-6, Estimate{1.0, 0.0}, 10000};
  EXPECT_NEAR(first_passage_se(r), std::sqrt(r.spectral * (1.0 - r.spectral) / 1e4), 1e-20);
  EXPECT_LT(std::fabs(first_passage_z(r)), 1.0);
  r.oracle.error = 0.01;
  EXPECT_DOUBLE_EQ(first_passage_se(r), 0.01);
}
