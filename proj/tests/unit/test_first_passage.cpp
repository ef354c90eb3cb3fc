#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "webrel/first_passage.hpp"

using namespace webrel;

namespace {

const OuParams kP = OuParams::from_cv(350.0, 1.0, 0.1);

double level(double k) { return kP.t0() + k * kP.stationary_sd(); }

struct Case {
  double boundary_sd;
  double start_sd;
  double s[3];
};

// mpmath spectral sums with 40 terms, s = 0.5, 1, 2.
const Case kCases[] = {
    {1.0, 0.0, {0.72142601712549, 0.5466169961357, 0.35410777174723}},
    {2.0, 0.0, {0.98169038119789, 0.93088957285732, 0.83686320159619}},
    {2.0, -1.0, {0.9985661648042, 0.98007851784904, 0.90760706543465}},
    {3.0, 1.0, {0.99473353991672, 0.98264995014978, 0.96489779395278}},
};

}  // namespace

TEST(Survival, MatchesReferenceSums) {
  for (const auto& c : kCases) {
    const auto e = build_expansion(kP, level(c.boundary_sd), level(c.start_sd), 0.5);
    const double s[] = {0.5, 1.0, 2.0};
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(survival(e, s[i]), c.s[i], 1e-9) << c.boundary_sd << ' ' << s[i];
  }
}

TEST(Survival, DependsOnTimeOnlyThroughAS) {
  const OuParams fast(350.0, 4.0, kP.stationary_sd() * std::sqrt(8.0));
  ASSERT_NEAR(fast.stationary_sd(), kP.stationary_sd(), 1e-12);
  const auto slow_e = build_expansion(kP, level(2.0), level(0.5), 1.0);
  const auto fast_e = build_expansion(fast, level(2.0), level(0.5), 0.25);
  EXPECT_NEAR(survival(slow_e, 1.0), survival(fast_e, 0.25), 1e-10);
}

TEST(Survival, MonotoneInTimeBoundaryAndStart) {
  const auto e = build_expansion(kP, level(1.5), level(0.0), 0.2);
  double prev = 1.0;
  for (double s = 0.2; s <= 4.0; s += 0.05) {
    const double v = survival(e, s);
    EXPECT_LE(v, prev + 1e-12);
    EXPECT_GE(v, 0.0);
    prev = v;
  }
  const double lower_b = survival(build_expansion(kP, level(1.0), level(0.0), 1.0), 1.0);
  const double higher_b = survival(build_expansion(kP, level(2.0), level(0.0), 1.0), 1.0);
  EXPECT_LT(lower_b, higher_b);
  const double near_start = survival(build_expansion(kP, level(1.0), level(0.8), 1.0), 1.0);
  EXPECT_LT(near_start, lower_b);
}

TEST(Survival, LeadingCoefficientPositive) {
  for (double b : {-1.0, 0.0, 1.0, 3.0})
    for (double y : {-3.0, -0.5, 0.9}) {
      if (y >= b) continue;
      const auto e = build_expansion(kP, level(b), level(y), 0.5);
      ASSERT_FALSE(e.terms.empty());
      EXPECT_GT(e.terms.front().c, 0.0) << b << ' ' << y;
    }
}

TEST(Survival, FarBoundaryNearOne) {
  const auto e = build_expansion(kP, level(8.0), level(0.0), 0.5);
  EXPECT_GT(survival(e, 2.0), 1.0 - 1e-12);
}

TEST(Survival, TruncationRuleStopsOnTwoSmallTerms) {
  const auto e = build_expansion(kP, level(1.0), level(0.0), 0.5);
  const auto n = e.terms.size();
  ASSERT_GE(n, 2u);
  for (std::size_t i = n - 2; i < n; ++i)
    EXPECT_LE(std::fabs(e.terms[i].c) * std::exp(-e.terms[i].lambda * 0.5), kTruncationTol);
}

TEST(Survival, ShortHorizonNeedsMoreTerms) {
  const auto longer = build_expansion(kP, level(1.0), level(0.0), 1.0);
  const auto shorter = build_expansion(kP, level(1.0), level(0.0), 0.2);
  EXPECT_GT(shorter.terms.size(), longer.terms.size());
  EXPECT_NEAR(survival(shorter, 1.0), survival(longer, 1.0), 1e-12);
}

TEST(Survival, ScanCeilingLimitsShortHorizons) {
  EXPECT_THROW(build_expansion(kP, level(1.0), level(0.0), 0.05), ScanExhausted);
  RootScanConfig cfg;
  cfg.max_order = 100.0;
  EXPECT_THROW(build_expansion(kP, level(1.0), level(0.0), 0.2, cfg), ScanExhausted);
  RootCache cache;
  EXPECT_THROW(build_expansion(kP, level(1.0), level(0.0), 0.2, cfg, &cache), ScanExhausted);
  const auto e = build_expansion(kP, level(1.0), level(0.0), 0.5, cfg, &cache);
  EXPECT_NEAR(survival(e, 0.5), 0.72142601712549, 1e-9);
}

TEST(Survival, ZeroBoundaryGivesOddEigenvalues) {
  const auto e = build_expansion(kP, kP.t0(), level(-1.0), 0.5);
  for (std::size_t n = 0; n < 5; ++n) EXPECT_NEAR(e.terms[n].lambda, 2.0 * n + 1.0, 1e-8);
}

TEST(Survival, TenSdBoundaryRarelyHit) {
  const auto e = build_expansion(kP, level(10.0), kP.t0(), 1.0);
  EXPECT_GE(survival(e, 1.0), 0.999);
}

TEST(Survival, ShiftScaleInvariance) {
  const OuParams unit(1.0, 1.0, std::sqrt(2.0));
  const auto a = build_expansion(kP, level(1.7), level(-0.4), 0.5);
  const auto b = build_expansion(unit, 1.0 + 1.7, 1.0 - 0.4, 0.5);
  for (double s : {0.5, 1.0, 2.0}) EXPECT_NEAR(survival(a, s), survival(b, s), 1e-12);
}

TEST(Survival, ExtraTermsChangeLittle) {
  const auto e = build_expansion(kP, level(2.0), level(0.3), 0.5);
  const auto rs = find_hermite_roots(e.xbar / std::numbers::sqrt2, e.terms.size() + 5);
  double extra = 0.0;
  for (std::size_t n = e.terms.size(); n < rs.size(); ++n) {
    const double nu = rs[n];
    const double c = -hermite_h(nu, e.ybar / std::numbers::sqrt2) / (nu * hermite_h_dnu(nu, e.xbar / std::numbers::sqrt2));
    extra += c * std::exp(-nu * 0.5);
  }
  EXPECT_LE(std::fabs(extra), 1e-12);
}

TEST(Survival, CacheGivesIdenticalResult) {
  RootCache cache;
  const auto plain = build_expansion(kP, level(2.0), level(-1.0), 0.5);
  const auto cached = build_expansion(kP, level(2.0), level(-1.0), 0.5, {}, &cache);
  EXPECT_EQ(cache.size(), 1u);
  ASSERT_EQ(plain.terms.size(), cached.terms.size());
  for (std::size_t i = 0; i < plain.terms.size(); ++i) EXPECT_EQ(plain.terms[i].c, cached.terms[i].c);
  const auto again = build_expansion(kP, level(2.0), level(0.5), 0.5, {}, &cache);
  EXPECT_EQ(cache.size(), 1u);
  EXPECT_GT(survival(again, 1.0), 0.0);
}

TEST(Survival, Preconditions) {
  EXPECT_THROW(build_expansion(kP, level(1.0), level(1.0), 0.5), DomainError);
  EXPECT_THROW(build_expansion(kP, level(1.0), level(0.0), 0.0), DomainError);
  EXPECT_THROW(build_expansion(kP, level(1.0), level(0.0), 0.001), DomainError);
  const auto e = build_expansion(kP, level(1.0), level(0.0), 0.5);
  EXPECT_THROW(survival(e, 0.25), DomainError);
}

TEST(Survival, ClampCounts) {
  const auto before = clamp_events();
  EXPECT_EQ(clamp_probability(1.0 + 1e-14), 1.0);
  EXPECT_EQ(clamp_probability(-1e-15), 0.0);
  EXPECT_EQ(clamp_events(), before + 2);
  EXPECT_EQ(clamp_probability(0.5), 0.5);
  EXPECT_EQ(clamp_events(), before + 2);
}
