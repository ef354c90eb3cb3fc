#pragma once

// Cross-validation suite: one check per acceptance criterion, each with its
// tolerance fixed here. Quick mode shrinks sample sizes and grids.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "webrel/config.hpp"
#include "webrel/first_passage.hpp"
#include "webrel/path_oracle.hpp"
#include "webrel/reliability.hpp"
#include "webrel/special_functions.hpp"
#include "webrel/sweep.hpp"

namespace webrel {

struct CriterionResult {
  int id;
  std::string name;
  bool passed;
  std::string detail;
  double seconds = 0.0;
};

struct ValidationOptions {
  bool quick = false;
  std::uint64_t seed = 20240501;
  unsigned threads = 0;
};

namespace validation {

inline constexpr double kSeMultiple = 3.0;
inline constexpr double kRootTol = 1e-8;
inline constexpr double kClosedFormTol = 1e-12;
inline constexpr double kRoundTripTol = 1e-6;
inline constexpr double kNumericCriticalRelTol = 1e-4;
inline constexpr double kRequiredReliability = 0.99;

inline std::string num(double v, int digits = 6) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

/// Table 1 geometry and material.
inline FractureModel table1_model() {
  return {Material::from_energy(4e9, 6500.0), WebGeometry{}, WeightFunctionTable::standard()};
}

inline CriterionResult spectral_vs_paths(const ValidationOptions& o) {
  Config c;
  c.tension.t0 = {350.0};
  c.tension.c_t = {0.05, 0.1};
  c.run.seed = o.seed;
  c.run.threads = o.threads;
  c.first_passage.paths = o.quick ? 20000 : 100000;
  c.first_passage.step = 1e-3;
  if (o.quick) {
    c.tension.c_t = {0.1};
    c.first_passage.boundary_sd = {1.0, 3.0};
    c.first_passage.start_quantiles = {0.05, 0.5, 0.95};
  }
  const auto rows = run_first_passage(c);
  double worst = 0.0;
  std::size_t fails = 0;
  for (const auto& r : rows) {
    const double z = std::fabs(first_passage_z(r));
    worst = std::max(worst, z);
    if (!(z <= kSeMultiple)) ++fails;
  }
  return {1, "spectral survival vs path oracle", fails == 0,
          std::to_string(rows.size()) + " points, " + std::to_string(fails) + " outside 3 SE, max |z| = " + num(worst, 3)};
}

inline CriterionResult root_identity(const ValidationOptions&) {
  const auto roots = find_hermite_roots(0.0, 5);
  double worst = 0.0;
  for (std::size_t i = 0; i < roots.size(); ++i) worst = std::max(worst, std::fabs(roots[i] - (2.0 * i + 1.0)));
  return {2, "Hermite roots at z = 0 are 1,3,5,7,9", roots.size() == 5 && worst <= kRootTol,
          "max deviation " + num(worst, 3)};
}

inline CriterionResult closed_form_equivalences(const ValidationOptions&) {
  double worst_p = 0.0;
  for (double ln = std::log(1e-3); ln <= std::log(50.0) + 1e-12; ln += (std::log(50.0) - std::log(1e-3)) / 40.0) {
    const double rs = std::exp(ln);
    for (double q : {0.0, 0.3, 0.9, 0.999, 0.999999, 1.0}) {
      const double a = r1_poisson(rs, 1.0, q).estimate;
      const double b = r1_poisson_series(rs, 1.0, q);
      worst_p = std::max(worst_p, std::fabs(a - b));
    }
  }
  double worst_b = 0.0;
  for (std::size_t n = 0; n <= 60; ++n)
    for (double p_s : {0.1, 0.5, 0.9, 1.0})
      for (double q : {0.0, 0.5, 0.95, 0.9999, 1.0}) {
        const double a = r1_binomial(p_s, static_cast<double>(n) * 2.0 + 1.0, 2.0, q).estimate;
        const double b = r1_binomial_sum(p_s, n, q);
        worst_b = std::max(worst_b, std::fabs(a - b));
      }
  bool exact = true;
  for (double pitch : {1.5, 2.0, 7.0}) {
    for (double band : {10.0, 100.0, 1000.0}) {
      QIntegrals q;
      q.q1 = {0.99, 1e-6};
      q.q2 = {0.995, 1e-9};
      q.q3[gap_key(pitch)] = {0.9905, 1e-6};
      const auto n = lattice_sites(band, pitch);
      const std::vector<double> gaps(n > 0 ? n - 1 : 0, pitch);
      const double chain = n == 0 ? 1.0 : qbar_chain(q, gaps);
      exact = exact && r2_deterministic(pitch, band, q, 1.0).estimate == chain;
    }
  }
  const bool ok = worst_p <= kClosedFormTol && worst_b <= kClosedFormTol && exact;
  return {3, "closed-form equivalences", ok,
          "poisson " + num(worst_p, 3) + ", binomial " + num(worst_b, 3) + ", r2 chain " + (exact ? "exact" : "differs")};
}

inline CriterionResult conditional_vs_closed(const ValidationOptions& o) {
  const auto frac = table1_model();
  const double band = 3.5e5;
  const std::size_t m = o.quick ? 2000 : 10000;
  const ParallelOptions par{o.threads, 256};
  const Poisson pois{1.0 / 5000.0};
  const BinomialLattice bin{5000.0, 0.9, band};
  std::size_t fails = 0;
  std::size_t checks = 0;
  double worst = 0.0;
  for (double t0 : {200.0, 350.0, 500.0}) {
    for (double mean : {0.005, 0.01, 0.015}) {
      const double q = qbar(t0, CrackLengthDist::from_mean(mean), frac);
      const auto seed = derive_seed(o.seed, stream_id("c4") + checks);
      const std::pair<SpacingModel, double> cases[] = {{pois, r1_poisson(pois.rate, band, q).estimate},
                                                       {bin, r1_binomial(0.9, band, 5000.0, q).estimate}};
      for (const auto& [model, exact] : cases) {
        const auto mc = r1_conditional_mc(model, q, band, m, seed, par);
        const double diff = std::fabs(mc.estimate - exact);
        if (mc.std_error > 0.0) worst = std::max(worst, diff / mc.std_error);
        if (!(diff <= kSeMultiple * mc.std_error)) ++fails;
        ++checks;
      }
    }
  }
  return {4, "r1 conditional MC vs closed forms", fails == 0,
          std::to_string(checks) + " checks, " + std::to_string(fails) + " outside 3 SE, max |z| = " + num(worst, 3)};
}

/// The small end-to-end instance: S = 100, pitch 2, t0 = 350, c_T = 0.1.
struct SmallInstance {
  FractureModel frac = table1_model();
  OuParams p = OuParams::from_cv(350.0, 1.0, 0.1);
  CrackLengthDist dist = CrackLengthDist::from_mean(0.015, 0.8);
  double band = 100.0;
  double pitch = 2.0;
};

inline CriterionResult end_to_end_r2(const ValidationOptions& o) {
  const SmallInstance s;
  const double span = s.frac.geometry().span;
  Q1Options o1;
  o1.samples = o.quick ? 200 : 800;
  o1.seed = derive_seed(o.seed, "c5-q1");
  o1.par.threads = o.threads;
  Q3Options o3;
  o3.samples = o.quick ? 2000 : 20000;
  o3.seed = derive_seed(o.seed, "c5-q3");
  o3.par.threads = o.threads;
  QProvider qp(s.p, s.dist, s.frac, span, o1, o3);
  const Deterministic model{s.pitch};
  const auto det = r2_deterministic(s.pitch, s.band, qp);
  const auto cmc = r2_conditional_mc(model, qp, s.band, 1000, derive_seed(o.seed, "c5-outer"), {o.threads, 256});
  PathOptions po;
  po.par.threads = o.threads;
  const auto sim = simulate_r2(model, s.p, s.dist, s.frac, s.band, o.quick ? 20000 : 100000,
                               derive_seed(o.seed, "c5-paths"), po);
  auto within = [&](const ReliabilityResult& r) {
    const double se = std::hypot(r.std_error, sim.error);
    return std::fabs(r.estimate - sim.value) <= kSeMultiple * se + r.numeric_error_bound;
  };
  const bool ok = within(det) && within(cmc);
  return {5, "end-to-end r2 vs full path simulation", ok,
          "det " + num(det.estimate, 7) + " (bound " + num(det.numeric_error_bound, 3) + "), cmc " +
              num(cmc.estimate, 7) + ", paths " + num(sim.value, 7) + " +- " + num(sim.error, 3)};
}

inline CriterionResult degeneracies(const ValidationOptions& o) {
  const auto frac = table1_model();
  const double span = frac.geometry().span;
  const auto dist = CrackLengthDist::from_mean(0.015, 0.8);
  const double t0 = 350.0;
  const auto p = OuParams::from_cv(t0, 1.0, 1e-6);
  const double q = qbar(t0, dist, frac);
  const ParallelOptions par{o.threads, 256};
  const std::size_t m = o.quick ? 500 : 2000;

  Q1Options o1;
  o1.samples = o.quick ? 50 : 200;
  o1.seed = derive_seed(o.seed, "c6-q1");
  o1.par.threads = o.threads;
  Q3Options o3;
  o3.samples = o.quick ? 64 : 200;
  o3.seed = derive_seed(o.seed, "c6-q3");
  o3.par.threads = o.threads;
  QProvider qp(p, dist, frac, span, o1, o3);

  std::vector<std::string> notes;
  bool ok = true;
  auto compare = [&](const std::string& name, const ReliabilityResult& r2, const ReliabilityResult& r1) {
    const double se = std::hypot(r2.std_error, r1.std_error);
    const double diff = std::fabs(r2.estimate - r1.estimate);
    const bool pass = diff <= kSeMultiple * se + r2.numeric_error_bound;
    ok = ok && pass;
    notes.push_back(name + " " + num(diff, 2) + (pass ? "" : " FAIL"));
  };
  const Deterministic det{2.0};
  const BinomialLattice bin{2.0, 0.9, 100.0};
  const auto logn = Lognormal3::from_mean_cv(200.0, 1.0, span);
  const auto seed = derive_seed(o.seed, "c6-outer");
  compare("det", r2_deterministic(2.0, 100.0, qp), r1_deterministic(2.0, 100.0, q));
  compare("det-mc", r2_conditional_mc(det, qp, 100.0, m, seed, par), r1_deterministic(2.0, 100.0, q));
  compare("binomial", r2_conditional_mc(bin, qp, 100.0, m, seed, par), r1_binomial(0.9, 100.0, 2.0, q));
  compare("lognormal", r2_conditional_mc(logn, qp, 4000.0, m, seed, par),
          r1_conditional_mc(logn, q, 4000.0, m, seed, par));

  bool ones = true;
  ones = ones && r1_poisson(0.01, 1e5, 1.0).estimate == 1.0;
  ones = ones && r1_binomial(0.7, 1e5, 3.0, 1.0).estimate == 1.0;
  ones = ones && r1_deterministic(3.0, 1e5, 1.0).estimate == 1.0;
  for (const SpacingModel& mdl : {SpacingModel{Poisson{0.01}}, SpacingModel{bin}, SpacingModel{det}, SpacingModel{logn}})
    ones = ones && r1_conditional_mc(mdl, 1.0, 1e4, 200, seed, par).estimate == 1.0;
  ok = ok && ones;
  std::string detail;
  for (const auto& n : notes) detail += n + ", ";
  detail += std::string("qbar = 1 ") + (ones ? "exact" : "not exact");
  return {6, "degenerate limits", ok, detail};
}

inline CriterionResult critical_round_trips(const ValidationOptions&) {
  const auto frac = table1_model();
  const double band = 3.5e5;
  const double q = kRequiredReliability;
  double worst = 0.0;
  double worst_rel = 0.0;
  for (double mean : {0.005, 0.015}) {
    const auto dist = CrackLengthDist::from_mean(mean);
    for (double rate : {1.0 / 2500.0, 1.0 / 7500.0}) {
      const double t = critical_tension_poisson(rate, band, q, dist, frac);
      worst = std::max(worst, std::fabs(r1_poisson(rate, band, qbar(t, dist, frac)).estimate - q));
      const auto num_t = critical_tension_numeric(
          [&](double t0) { return r1_poisson(rate, band, qbar(t0, dist, frac)); }, q, 1.0, 5000.0, 1e-10);
      worst_rel = std::max(worst_rel, std::fabs(num_t.tension - t) / t);
    }
    for (double pitch : {2500.0, 7500.0}) {
      const double t = critical_tension_binomial(0.9, band, pitch, q, dist, frac);
      worst = std::max(worst, std::fabs(r1_binomial(0.9, band, pitch, qbar(t, dist, frac)).estimate - q));
    }
  }
  const bool ok = worst <= kRoundTripTol && worst_rel <= kNumericCriticalRelTol;
  return {7, "critical tension round trips", ok,
          "max |r1 - q| " + num(worst, 3) + ", numeric vs closed rel " + num(worst_rel, 3)};
}

/// Trend checks over the shipped default sweep.
inline CriterionResult sweep_trends(const ValidationOptions& o, const Config& defaults) {
  Config c = defaults;
  c.run.seed = o.seed;
  c.run.threads = o.threads;
  if (o.quick) {
    c.tension.t0 = {200.0, 500.0};
    c.tension.c_t = {0.0, 0.1};
    c.spacing.param = {c.spacing.param.front(), c.spacing.param.back()};
    c.run.inner = 50;
    c.run.inner_max = 50;
    c.run.q3_samples = 500;
  }
  const auto frac = c.fracture_model();
  const auto rows = run_reliability_sweep(c, frac);

  using Key = std::tuple<double, double, double, double>;  // param, t0, c_T, mean
  std::map<Key, const SweepRow*> at;
  for (const auto& r : rows) at[{r.spacing_param, r.t0, r.c_t, r.mean_crack}] = &r;
  auto tol = [](const SweepRow& x, const SweepRow& y) {
    return kSeMultiple * std::hypot(x.result.std_error, y.result.std_error) + x.result.numeric_error_bound +
           y.result.numeric_error_bound;
  };
  std::size_t violations = 0;
  std::size_t checks = 0;
  std::string first;
  // Require hi.estimate <= lo.estimate within tolerance.
  auto not_above = [&](const SweepRow& hi, const SweepRow& lo, const char* what) {
    ++checks;
    if (hi.result.estimate > lo.result.estimate + tol(hi, lo)) {
      ++violations;
      if (first.empty())
        first = std::string(what) + " at t0=" + num(hi.t0) + " c_T=" + num(hi.c_t) + " mean=" + num(hi.mean_crack) +
                " param=" + num(hi.spacing_param);
    }
  };
  auto sorted = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  const auto params = sorted(c.spacing.param);
  const auto t0s = sorted(c.tension.t0);
  const auto cts = sorted(c.tension.c_t);
  const auto means = sorted(c.cracks.mean);
  const bool spacing_is_rate = c.spacing.kind == SpacingKind::Poisson;
  for (double pr : params)
    for (double ct : cts)
      for (double mean : means)
        for (std::size_t i = 1; i < t0s.size(); ++i)
          not_above(*at.at({pr, t0s[i], ct, mean}), *at.at({pr, t0s[i - 1], ct, mean}), "t0");
  for (double pr : params)
    for (double t0 : t0s)
      for (double ct : cts)
        for (std::size_t i = 1; i < means.size(); ++i)
          not_above(*at.at({pr, t0, ct, means[i]}), *at.at({pr, t0, ct, means[i - 1]}), "mean crack");
  for (double t0 : t0s)
    for (double ct : cts)
      for (double mean : means)
        for (std::size_t i = 1; i < params.size(); ++i) {
          const auto& denser = spacing_is_rate ? *at.at({params[i], t0, ct, mean}) : *at.at({params[i - 1], t0, ct, mean});
          const auto& sparser = spacing_is_rate ? *at.at({params[i - 1], t0, ct, mean}) : *at.at({params[i], t0, ct, mean});
          not_above(denser, sparser, "spacing");
        }
  if (!cts.empty() && cts.front() == 0.0)
    for (double pr : params)
      for (double t0 : t0s)
        for (double mean : means)
          for (std::size_t i = 1; i < cts.size(); ++i)
            not_above(*at.at({pr, t0, cts[i], mean}), *at.at({pr, t0, 0.0, mean}), "r2 <= r1");

  double min_small = 1.0;
  for (const auto& r : rows)
    if (r.mean_crack == 0.005) min_small = std::min(min_small, r.result.estimate);
  const bool small_ok = min_small >= kRequiredReliability;
  return {8, "sweep trends", violations == 0 && small_ok,
          std::to_string(rows.size()) + " rows, " + std::to_string(checks) + " trend checks, " +
              std::to_string(violations) + " violations" + (first.empty() ? "" : " (first: " + first + ")") +
              ", min r at mean 0.005 = " + num(min_small, 8)};
}

inline CriterionResult error_bound_soundness(const ValidationOptions& o) {
  const auto frac = table1_model();
  const double span = frac.geometry().span;
  const std::size_t instances = o.quick ? 2 : 5;
  const std::size_t per_instance = o.quick ? 3 : 20;
  Rng meta = make_rng(derive_seed(o.seed, "c9"));
  std::size_t trials = 0;
  std::size_t fails = 0;
  double worst_ratio = 0.0;
  for (std::size_t inst = 0; inst < instances; ++inst) {
    const double t0 = 300.0 + 150.0 * uniform_open(meta);
    const double ct = 0.04 + 0.08 * uniform_open(meta);
    const double mean = 0.008 + 0.012 * uniform_open(meta);
    const double pitch = 1.5 + 3.5 * uniform_open(meta);
    const double band = 20.0 + 80.0 * uniform_open(meta);
    const auto p = OuParams::from_cv(t0, 1.0, ct);
    const auto dist = CrackLengthDist::from_mean(mean);

    Q1Options r1o;
    r1o.samples = o.quick ? 200 : 800;
    r1o.seed = derive_seed(o.seed, "c9-ref-q1") + inst;
    r1o.par.threads = o.threads;
    Q3Options r3o;
    r3o.samples = o.quick ? 5000 : 20000;
    r3o.seed = derive_seed(o.seed, "c9-ref-q3") + inst;
    r3o.par.threads = o.threads;
    QProvider ref(p, dist, frac, span, compute_q1(p, dist, frac, span, r1o), compute_q2(p, dist, frac, 1e-12), r3o);
    const double r_ref = r2_deterministic(pitch, band, ref).estimate;
    const Estimate q2_coarse = compute_q2(p, dist, frac, 1e-7);

    for (std::size_t k = 0; k < per_instance; ++k) {
      Q1Options c1 = r1o;
      c1.samples = 64;
      c1.seed = derive_seed(o.seed, "c9-q1") + 1000 * inst + k;
      Q3Options c3 = r3o;
      c3.samples = 64;
      c3.seed = derive_seed(o.seed, "c9-q3") + 1000 * inst + k;
      QProvider coarse(p, dist, frac, span, compute_q1(p, dist, frac, span, c1), q2_coarse, c3);
      const auto rc = r2_deterministic(pitch, band, coarse);
      const double shift = std::fabs(rc.estimate - r_ref);
      if (rc.numeric_error_bound > 0.0) worst_ratio = std::max(worst_ratio, shift / rc.numeric_error_bound);
      if (!(shift <= rc.numeric_error_bound)) ++fails;
      ++trials;
    }
  }
  return {9, "error bound dominates refinement shift", fails == 0,
          std::to_string(trials) + " trials, " + std::to_string(fails) + " violations, max shift/bound = " +
              num(worst_ratio, 3)};
}

inline std::string numeric_columns(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  write_sweep_csv(os, {}, rows);
  return os.str();
}

inline CriterionResult reproducibility(const ValidationOptions& o) {
  Config c;
  c.tension.t0 = {350.0};
  c.tension.c_t = {0.0, 0.1};
  c.cracks.mean = {0.015};
  c.spacing.kind = SpacingKind::Binomial;
  c.spacing.param = {3.0};
  c.run.band_length = 60.0;
  c.run.samples = 300;
  c.run.inner = 40;
  c.run.inner_max = 40;
  c.run.q3_samples = 200;
  c.run.chunk = 32;
  c.run.seed = o.seed;
  const auto frac = c.fracture_model();
  const unsigned n = std::max(2u, resolve_threads(o.threads));
  c.run.threads = 1;
  const auto a = numeric_columns(run_reliability_sweep(c, frac));
  const auto b = numeric_columns(run_reliability_sweep(c, frac));
  c.run.threads = n;
  const auto d = numeric_columns(run_reliability_sweep(c, frac));
  const bool ok = a == b && a == d;
  return {10, "byte-identical output across runs and thread counts", ok,
          std::string("repeat ") + (a == b ? "identical" : "differs") + ", threads 1 vs " + std::to_string(n) + " " +
              (a == d ? "identical" : "differs")};
}

}  // namespace validation

using CriterionFn = std::function<CriterionResult(const ValidationOptions&)>;

/// All criteria in order; `defaults` is the shipped sweep configuration.
inline std::vector<CriterionFn> acceptance_criteria(const Config& defaults) {
  using namespace validation;
  return {spectral_vs_paths,
          root_identity,
          closed_form_equivalences,
          conditional_vs_closed,
          end_to_end_r2,
          degeneracies,
          critical_round_trips,
          [defaults](const ValidationOptions& o) { return sweep_trends(o, defaults); },
          error_bound_soundness,
          reproducibility};
}

/// Runs one criterion, timing it; exceptions count as failures.
inline CriterionResult run_criterion(const CriterionFn& fn, const ValidationOptions& o, int id) {
  const auto start = std::chrono::steady_clock::now();
  CriterionResult r{id, "criterion " + std::to_string(id), false, ""};
  try {
    r = fn(o);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

inline std::string format_result(const CriterionResult& r) {
  std::ostringstream os;
  os << (r.passed ? "PASS" : "FAIL") << "  [" << r.id << "] " << r.name << ": " << r.detail << " ("
     << validation::num(r.seconds, 3) << " s)";
  return os.str();
}

}  // namespace webrel
