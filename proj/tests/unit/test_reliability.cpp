#include <gtest/gtest.h>

#include <cmath>

#include "webrel/path_oracle.hpp"
#include "webrel/reliability.hpp"

using namespace webrel;

namespace {

FractureModel table1() { return {Material::from_energy(4e9, 6500.0), WebGeometry{}, WeightFunctionTable::standard()}; }

const FractureModel kFrac = table1();
const CrackLengthDist kDist = CrackLengthDist::from_mean(0.015);
const OuParams kP = OuParams::from_cv(350.0, 1.0, 0.1);

}  // namespace

TEST(ConstantTension, PoissonClosedFormMatchesSeries) {
  for (double mu : {1e-3, 0.1, 1.0, 7.5, 50.0})
    for (double q : {0.0, 0.5, 0.99, 1.0}) EXPECT_NEAR(r1_poisson(mu, 1.0, q).estimate, r1_poisson_series(mu, 1.0, q), 1e-13);
}

TEST(ConstantTension, BinomialClosedFormMatchesSum) {
  for (std::size_t n : {0u, 1u, 5u, 33u, 60u})
    for (double q : {0.0, 0.7, 0.999}) {
      const double zone = 3.0 * static_cast<double>(n) + 1.0;
      EXPECT_NEAR(r1_binomial(0.4, zone, 3.0, q).estimate, r1_binomial_sum(0.4, n, q), 1e-13);
    }
}

TEST(ConstantTension, DeterministicIsPower) {
  EXPECT_DOUBLE_EQ(r1_deterministic(2500.0, 3.5e5, 0.999).estimate, std::pow(0.999, 140.0));
  EXPECT_EQ(r1_deterministic(1e6, 3.5e5, 0.5).estimate, 1.0);
}

TEST(ConstantTension, ExactlyOneWhenEveryCrackSurvives) {
  EXPECT_EQ(r1_poisson(0.01, 1e5, 1.0).estimate, 1.0);
  EXPECT_EQ(r1_binomial(0.3, 1e5, 7.0, 1.0).estimate, 1.0);
  EXPECT_EQ(r1_deterministic(7.0, 1e5, 1.0).estimate, 1.0);
  EXPECT_EQ(r1_conditional_mc(Lognormal3::from_mean_cv(50.0, 1.0, 1.0), 1.0, 1e4, 100, 1).estimate, 1.0);
}

TEST(ConstantTension, ClosedFormRejectsLognormal) {
  EXPECT_THROW(r1_closed_form(Lognormal3::from_mean_cv(50.0, 1.0, 1.0), 100.0, 0.9), DomainError);
}

TEST(ConstantTension, ConditionalMcAgreesWithClosedForm) {
  const double q = 0.999;
  const Poisson p{0.002};
  const auto mc = r1_conditional_mc(p, q, 1e5, 20000, 11);
  EXPECT_NEAR(mc.estimate, r1_poisson(0.002, 1e5, q).estimate, 4.0 * mc.std_error);
  const BinomialLattice b{500.0, 0.6, 1e5};
  const auto mb = r1_conditional_mc(b, q, 1e5, 20000, 12);
  EXPECT_NEAR(mb.estimate, r1_binomial(0.6, 1e5, 500.0, q).estimate, 4.0 * mb.std_error);
}

TEST(ConstantTension, MonotoneInTension) {
  double prev = 1.0;
  for (double t0 = 100.0; t0 <= 700.0; t0 += 50.0) {
    const double q = qbar(t0, kDist, kFrac);
    EXPECT_LE(q, prev);
    prev = q;
  }
}

TEST(QIntegrals, Q2MatchesIndependentQuadrature) {
  // scipy quad over the pchip boundary
  EXPECT_NEAR(compute_q2(kP, kDist, kFrac).value, 0.9995151439506377, 1e-11);
  EXPECT_NEAR(compute_q2(OuParams::from_cv(350.0, 1.0, 0.05), kDist, kFrac).value, 0.9995702845945209, 1e-11);
  EXPECT_NEAR(compute_q2(OuParams::from_cv(500.0, 1.0, 0.1), CrackLengthDist::from_mean(0.005), kFrac).value,
              0.9999968208280424, 1e-11);
  EXPECT_NEAR(compute_q2(OuParams::from_cv(200.0, 1.0, 0.1), kDist, kFrac).value, 0.9999879243474029, 1e-11);
}

TEST(QIntegrals, Q3MatchesIndependentQuadrature) {
  Q3Options o;
  o.samples = 2000;
  o.seed = 5;
  const auto q3 = compute_q3(kP, kDist, kFrac, 2.0, 1.0, o);
  // nested scipy quad in (u, xi)
  EXPECT_NEAR(q3.value, 0.9990305568222375, 3.0 * q3.error + 1e-9);
  EXPECT_GT(q3.error, 0.0);
  EXPECT_LT(q3.error, 1e-7);
}

TEST(QIntegrals, Q3AgreesWithIndicatorMonteCarlo) {
  const double gap = 1.7, sd = kP.stationary_sd();
  const double decay = std::exp(-(gap - 1.0)), sd_gap = sd * std::sqrt(-std::expm1(-2.0 * (gap - 1.0)));
  Rng rng = make_rng(17);
  SampleStats plain;
  for (int i = 0; i < 400000; ++i) {
    const double bx = kFrac.boundary(kDist.sample(rng));
    const double bz = kFrac.boundary(kDist.sample(rng));
    const double u = kP.t0() + sd * standard_normal(rng);
    plain.push(u < bz ? normal_cdf((bx - kP.t0() - (u - kP.t0()) * decay) / sd_gap) : 0.0);
  }
  const auto q3 = compute_q3(kP, kDist, kFrac, gap, 1.0);
  EXPECT_NEAR(q3.value, plain.mean, 4.0 * std::hypot(plain.std_error(), q3.error));
}

TEST(QIntegrals, Q3GapLimits) {
  const auto q2 = compute_q2(kP, kDist, kFrac, 1e-12);
  const auto far = compute_q3(kP, kDist, kFrac, 31.0, 1.0);
  EXPECT_NEAR(far.value, q2.value * q2.value, 3.0 * far.error + 1e-12);
  // coincident windows: E[G(u)^2] with G(u) = P[u < B(xi)]
  const double sd = kP.stationary_sd();
  auto g2 = [&](double u) {
    const double reach = kDist.cdf(kFrac.critical_length(u));
    return reach * reach * normal_pdf((u - kP.t0()) / sd) / sd;
  };
  const double coincident = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      g2, kP.t0() - 8.0 * sd, kP.t0() + 8.0 * sd, 15, 1e-13);
  const auto near = compute_q3(kP, kDist, kFrac, 1.0 + 1e-9, 1.0);
  EXPECT_NEAR(near.value, coincident, 3.0 * near.error + 1e-9);
}

TEST(Stratified, MonotoneIntegrandWithinStandardErrors) {
  auto f = [](double m) { return std::exp(-5.0 * m); };
  const double exact = (1.0 - std::exp(-5.0)) / 5.0;
  for (std::size_t n : {2u, 7u, 64u, 1000u}) {
    const auto e = detail::stratified_monotone([](double t) { return t; }, f, n, 3, {1, 16});
    EXPECT_NEAR(e.value, exact, 4.0 * e.error + 1e-15) << n;
    EXPECT_GT(e.error, 0.0);
  }
  const auto flat = detail::stratified_monotone([](double t) { return 0.2 + 0.5 * t; }, [](double) { return 2.0; },
                                                10, 3, {1, 4});
  EXPECT_DOUBLE_EQ(flat.value, 1.0);
  EXPECT_EQ(flat.error, 0.0);
}

TEST(QIntegrals, Q1AgreesWithPathSimulation) {
  Q1Options o;
  o.samples = 100;
  const auto q1 = compute_q1(kP, kDist, kFrac, 1.0, o);
  const auto sim = simulate_q1(kP, kDist, kFrac, 1.0, 40000, 9);
  EXPECT_NEAR(q1.value, sim.value, 4.0 * std::hypot(q1.error, sim.error));
  // one crack over one window: between the window-start and single-point events
  EXPECT_LT(q1.value, compute_q2(kP, kDist, kFrac).value);
}

TEST(QIntegrals, Q1InnerLimits) {
  const double sd = kP.stationary_sd();
  const double mass = normal_cdf(kStartWindowSd) - normal_cdf(-kStartWindowSd);
  EXPECT_NEAR(q1_inner(kP, kP.t0() + 30.0 * sd, 1.0), mass, 1e-12);
  EXPECT_LT(q1_inner(kP, kP.t0() - 7.0 * sd, 1.0), 1e-10);
  EXPECT_LT(q1_inner(kP, kP.t0(), 1.0), q1_inner(kP, kP.t0() + sd, 1.0));
}

TEST(QIntegrals, DecorrelatedGapUsesSquare) {
  QProvider qp(kP, kDist, kFrac, 1.0, Estimate{0.999, 1e-5}, Estimate{0.9995, 1e-12}, Q3Options{});
  EXPECT_DOUBLE_EQ(qp.q3(100.0).value, 0.9995 * 0.9995);
}

TEST(Chain, DeterministicEqualsChainWithEqualGaps) {
  QIntegrals q;
  q.q1 = {0.998, 1e-5};
  q.q2 = {0.999, 1e-12};
  q.q3[gap_key(2.5)] = {0.9981, 2e-6};
  const auto r = r2_deterministic(2.5, 100.0, q, 1.0);
  EXPECT_EQ(r.estimate, qbar_chain(q, std::vector<double>(39, 2.5)));
  const double bound = (3.0 * 1e-5 + 2.0 * 3.0 * 1e-12 + 3.0 * 2e-6) * 40.0;
  EXPECT_NEAR(r.numeric_error_bound, bound, 1e-15);
}

TEST(Chain, SingleCrackIsQ1) {
  QIntegrals q;
  q.q1 = {0.97, 1e-4};
  q.q2 = {0.99, 0.0};
  EXPECT_EQ(qbar_chain(q, {}), 0.97);
  EXPECT_EQ(r2_deterministic(3.0, 5.0, q, 1.0).estimate, 0.97);
  EXPECT_EQ(r2_deterministic(3.0, 2.0, q, 1.0).estimate, 1.0);
}

TEST(Chain, ConditionalMcWithFixedPositionsMatchesDeterministic) {
  QProvider qp(kP, kDist, kFrac, 1.0, Estimate{0.9991, 1e-5}, Estimate{0.9995, 1e-12}, Q3Options{500, 3, {}});
  const auto det = r2_deterministic(2.0, 50.0, qp);
  const auto mc = r2_conditional_mc(Deterministic{2.0}, qp, 50.0, 64, 4);
  EXPECT_EQ(mc.estimate, det.estimate);
  EXPECT_EQ(mc.std_error, 0.0);
  EXPECT_DOUBLE_EQ(mc.numeric_error_bound, det.numeric_error_bound);
}

TEST(Chain, ResultIndependentOfThreadCount) {
  const BinomialLattice m{3.0, 0.7, 90.0};
  auto run = [&](unsigned threads) {
    QProvider qp(kP, kDist, kFrac, 1.0, Estimate{0.9991, 1e-5}, Estimate{0.9995, 1e-12}, Q3Options{300, 3, {threads, 16}});
    return r2_conditional_mc(m, qp, 90.0, 400, 77, {threads, 16});
  };
  const auto a = run(1);
  const auto b = run(3);
  EXPECT_EQ(a.estimate, b.estimate);
  EXPECT_EQ(a.std_error, b.std_error);
  EXPECT_EQ(a.numeric_error_bound, b.numeric_error_bound);
}

TEST(Chain, SpacingGuard) {
  QProvider qp(kP, kDist, kFrac, 1.0, Estimate{0.9991, 1e-5}, Estimate{0.9995, 1e-12}, Q3Options{});
  EXPECT_THROW(r2_conditional_mc(Poisson{0.1}, qp, 50.0, 10, 1), DomainError);
  EXPECT_THROW(r2_conditional_mc(Deterministic{0.5}, qp, 50.0, 10, 1), DomainError);
  EXPECT_THROW(r2_deterministic(1.0, 50.0, qp), DomainError);
}

TEST(ErrorBound, Formula) {
  EXPECT_DOUBLE_EQ(error_bound(1e-4, 1e-6, 2e-5, 10.0), (1e-4 + 2e-6 + 2e-5) * 10.0);
  EXPECT_THROW(error_bound(-1.0, 0.0, 0.0, 1.0), DomainError);
}

TEST(CriticalTension, PoissonRoundTrip) {
  const double rate = 1.0 / 5000.0, band = 3.5e5, q = 0.99;
  for (double mean : {0.005, 0.015}) {
    const auto d = CrackLengthDist::from_mean(mean);
    const double t = critical_tension_poisson(rate, band, q, d, kFrac);
    EXPECT_NEAR(r1_poisson(rate, band, qbar(t, d, kFrac)).estimate, q, 1e-8);
  }
}

TEST(CriticalTension, BinomialRoundTripAndMonotone) {
  const double band = 3.5e5;
  const auto d = CrackLengthDist::from_mean(0.015);
  const double t99 = critical_tension_binomial(0.9, band, 2500.0, 0.99, d, kFrac);
  const double t95 = critical_tension_binomial(0.9, band, 2500.0, 0.95, d, kFrac);
  EXPECT_NEAR(r1_binomial(0.9, band, 2500.0, qbar(t99, d, kFrac)).estimate, 0.99, 1e-8);
  EXPECT_LT(t99, t95);
  EXPECT_TRUE(std::isinf(critical_tension_binomial(0.9, 100.0, 2500.0, 0.99, d, kFrac)));
  EXPECT_NEAR(critical_tension_deterministic(2500.0, band, 0.99, d, kFrac),
              critical_tension_binomial(1.0, band, 2500.0, 0.99, d, kFrac), 1e-12);
}

TEST(CriticalTension, InfeasibleTargetThrows) {
  // the required crack quantile lies beyond the deepest tabulated crack
  EXPECT_THROW(critical_tension_poisson(1.0, 1e9, 0.99, kDist, kFrac), DomainError);
  EXPECT_GT(critical_tension_poisson(1.0, 1e6, 0.99, kDist, kFrac), 0.0);
}

TEST(CriticalTension, NumericSearchMatchesClosedForm) {
  const double rate = 1.0 / 2500.0, band = 3.5e5;
  const double closed = critical_tension_poisson(rate, band, 0.99, kDist, kFrac);
  const auto num = critical_tension_numeric([&](double t) { return r1_poisson(rate, band, qbar(t, kDist, kFrac)); },
                                            0.99, 1.0, 5000.0, 1e-10);
  EXPECT_NEAR(num.tension, closed, 1e-6 * closed);
  EXPECT_FALSE(num.noise_limited);
  EXPECT_THROW(critical_tension_numeric([&](double t) { return r1_poisson(rate, band, qbar(t, kDist, kFrac)); }, 0.99,
                                        1.0, 2.0),
               DomainError);
}
