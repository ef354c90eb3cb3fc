#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "webrel/fracture_mechanics.hpp"
#include "webrel/reliability.hpp"

using namespace webrel;

namespace {

FractureModel table1() { return {Material::from_energy(4e9, 6500.0), WebGeometry{}, WeightFunctionTable::standard()}; }

std::filesystem::path temp_file(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << body;
  return path;
}

}  // namespace

TEST(Material, ToughnessFromEnergy) {
  EXPECT_NEAR(fracture_toughness(4e9, 6500.0), 5099019.513592785, 1e-6);
  EXPECT_THROW(fracture_toughness(0.0, 1.0), DomainError);
}

TEST(WeightTable, ReproducesKnotsAndMatchesScipyPchip) {
  const auto t = WeightFunctionTable::standard();
  for (std::size_t i = 0; i < t.knots().size(); ++i)
    EXPECT_DOUBLE_EQ(t.f_prime(t.knots()[i]), edge_crack_polynomial(t.knots()[i]));
  const auto m = table1();
  // scipy PchipInterpolator on the same knots, divided by (1 - r)^1.5; the
  // end intervals use a different endpoint slope rule there
  EXPECT_NEAR(m.alpha(0.1), 1.3266903812153419, 1e-12);
  EXPECT_NEAR(m.alpha(0.3), 2.3135363480615734, 1e-12);
  EXPECT_NEAR(m.alpha(0.5), 4.943141893960676, 1e-11);
  EXPECT_NEAR(m.alpha(0.01), 1.1357256875449655, 1e-4);
  EXPECT_NEAR(m.alpha(0.7), 14.074778929973325, 1e-2);
  // and stays close to the polynomial itself
  for (double r = 0.0; r <= 0.6; r += 0.0125) EXPECT_NEAR(t.f_prime(r), edge_crack_polynomial(r), 5e-3);
}

TEST(WeightTable, RejectsBadTables) {
  EXPECT_THROW(WeightFunctionTable({0.0, 0.1, 0.2}, {1.0, 1.0, 1.0}), DomainError);
  EXPECT_THROW(WeightFunctionTable({0.1, 0.2, 0.3, 0.4}, {1.0, 1.0, 1.0, 1.0}), DomainError);
  EXPECT_THROW(WeightFunctionTable({0.0, 0.2, 0.1, 0.4}, {1.0, 1.0, 1.0, 1.0}), DomainError);
  EXPECT_THROW(WeightFunctionTable({0.0, 0.1, 0.2, 0.3}, {1.0, -1.0, 1.0, 1.0}), DomainError);
  EXPECT_THROW(WeightFunctionTable::standard().f_prime(0.61), DomainError);
}

TEST(WeightTable, CsvRoundTripKeepsHash) {
  const auto t = WeightFunctionTable::standard();
  std::string body = "relative_depth,f_prime\n";
  char buf[64];
  for (std::size_t i = 0; i < t.knots().size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", t.knots()[i], t.values()[i]);
    body += buf;
  }
  const auto loaded = WeightFunctionTable::load_csv(temp_file("webrel_wt.csv", body).string());
  EXPECT_EQ(loaded.hash(), t.hash());
  const auto shipped = std::filesystem::path(WEBREL_SOURCE_DIR) / "data" / "weight_function_default.csv";
  EXPECT_EQ(WeightFunctionTable::load_csv(shipped.string()).hash(), t.hash());
  EXPECT_THROW(WeightFunctionTable::load_csv(temp_file("webrel_bad.csv", "h\n0,abc\n").string()), DomainError);
}

TEST(FractureModel, CriticalLengthsMatchIndependentRootFind) {
  const auto m = table1();
  // scipy brentq on the pchip-interpolated g
  EXPECT_NEAR(m.critical_length(200.0), 0.2804838380904864, 1e-11);
  EXPECT_NEAR(m.critical_length(350.0), 0.17243583396293907, 1e-11);
  EXPECT_NEAR(m.critical_length(500.0), 0.1133618201067113, 1e-11);
}

TEST(FractureModel, BoundaryIsStrictlyDecreasingAndInvertsCriticalLength) {
  const auto m = table1();
  double prev = INFINITY;
  for (double xi = 1e-5; xi < m.max_crack(); xi *= 1.3) {
    const double b = m.boundary(xi);
    EXPECT_LT(b, prev);
    prev = b;
    EXPECT_NEAR(m.critical_length(b), xi, 1e-10);
    EXPECT_NEAR(m.stress_intensity(b, xi), m.material().k_c, 1e-6 * m.material().k_c);
  }
  EXPECT_EQ(m.boundary(m.max_crack()), 0.0);
  EXPECT_EQ(m.critical_length(1e-3), m.max_crack());
}

TEST(FractureModel, FractureEventEquivalence) {
  const auto m = table1();
  Rng rng = make_rng(7);
  for (int i = 0; i < 2000; ++i) {
    const double t = 50.0 + 900.0 * uniform_open(rng);
    const double xi = m.max_crack() * uniform_open(rng);
    const bool survives = t < m.boundary(xi);
    const double xc = m.critical_length(t);
    if (std::fabs(xi - xc) > 1e-9) EXPECT_EQ(survives, xi < xc) << t << ' ' << xi;
  }
}

TEST(FractureModel, RejectsNonMonotoneTable) {
  const WeightFunctionTable bad({0.0, 0.1, 0.2, 0.3}, {3.0, 0.3, 0.2, 0.1});
  EXPECT_THROW(FractureModel(Material::from_energy(4e9, 6500.0), WebGeometry{}, bad), DomainError);
}

TEST(Weibull, ScaleAndCvForTheDefaultShape) {
  const auto d = CrackLengthDist::from_mean(0.015, 0.8);
  EXPECT_NEAR(d.scale(), 0.013239151815850047, 1e-15);
  EXPECT_NEAR(d.cv(), 1.2605127868071077, 1e-12);
  EXPECT_NEAR(d.mean(), 0.015, 1e-15);
  EXPECT_NEAR(CrackLengthDist::from_mean(0.005).scale(), 0.004413050605283349, 1e-15);
}

TEST(Weibull, QuantileInvertsCdf) {
  const auto d = CrackLengthDist::from_mean(0.01);
  for (double p : {1e-9, 0.01, 0.5, 0.99, 1.0 - 1e-9}) EXPECT_NEAR(d.cdf(d.quantile(p)), p, 1e-12);
  EXPECT_NEAR(d.cdf(0.02) + d.survival(0.02), 1.0, 1e-15);
  EXPECT_THROW(d.quantile(1.0), DomainError);
}

TEST(Weibull, SampleMeanConverges) {
  const auto d = CrackLengthDist::from_mean(0.01);
  Rng rng = make_rng(3);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) sum += d.sample(rng);
  const double se = std::sqrt(d.variance() / n);
  EXPECT_NEAR(sum / n, 0.01, 4.0 * se);
}

TEST(Qbar, MatchesIndependentValues) {
  const auto m = table1();
  const auto small = CrackLengthDist::from_mean(0.005);
  const auto large = CrackLengthDist::from_mean(0.015);
  EXPECT_NEAR(qbar(200.0, large, m), 0.99998990747782557, 1e-13);
  EXPECT_NEAR(qbar(350.0, large, m), 0.99958819471905458, 1e-12);
  EXPECT_NEAR(qbar(500.0, large, m), 0.99620075229045602, 1e-12);
  EXPECT_NEAR(qbar(350.0, small, m), 0.99999999296251485, 1e-14);
  EXPECT_NEAR(qbar(500.0, small, m), 0.99999851622503444, 1e-14);
}
