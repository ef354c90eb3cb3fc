#pragma once

// Batch runners behind the command-line tool: reliability sweeps, critical
// tensions and first-passage tables, each written as CSV with `# key=value`
// metadata lines ahead of the header.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "webrel/config.hpp"
#include "webrel/first_passage.hpp"
#include "webrel/normal.hpp"
#include "webrel/parallel.hpp"
#include "webrel/path_oracle.hpp"
#include "webrel/reliability.hpp"

namespace webrel {

/// Shortest round-trip decimal form for doubles.
inline std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Run-wide metadata shared by all outputs.
inline Metadata base_metadata(const Config& c, const FractureModel& frac) {
  const RootScanConfig scan;
  return {{"seed", std::to_string(c.run.seed)},
          {"samples", std::to_string(c.run.samples)},
          {"inner", std::to_string(c.run.inner)},
          {"inner_max", std::to_string(c.run.inner_max)},
          {"q3_samples", std::to_string(c.run.q3_samples)},
          {"chunk", std::to_string(c.run.chunk)},
          {"target_bound", fmt17(c.run.target_bound)},
          {"band_length", fmt17(c.run.band_length)},
          {"span", fmt17(c.geometry.span)},
          {"half_width", fmt17(c.geometry.half_width)},
          {"thickness", fmt17(c.geometry.thickness)},
          {"youngs", fmt17(c.material.youngs)},
          {"g_c", fmt17(c.material.g_c)},
          {"k_c", fmt17(frac.material().k_c)},
          {"weibull_shape", fmt17(c.cracks.shape)},
          {"spacing_model", spacing_kind_name(c.spacing.kind)},
          {"p_s", fmt17(c.spacing.p_s)},
          {"zone", fmt17(c.spacing.zone)},
          {"cv", fmt17(c.spacing.cv)},
          {"shift", fmt17(c.spacing.shift)},
          {"a_units", "1/m"},
          {"root_initial_step", fmt17(scan.initial_step)},
          {"root_refine_tol", fmt17(scan.refine_tol)},
          {"root_max_order", fmt17(scan.max_order)},
          {"truncation_tol", fmt17(kTruncationTol)},
          {"start_window_sd", fmt17(kStartWindowSd)},
          {"far_boundary_sd", fmt17(kFarBoundarySd)},
          {"q3_decorrelated", fmt17(kDecorrelated)},
          {"error_se_multiple", fmt17(kErrorSe)},
          {"weight_table", c.material.weight_table.empty() ? "builtin" : c.material.weight_table},
          {"weight_table_hash", hex64(frac.table().hash())}};
}

inline void write_metadata(std::ostream& out, const Metadata& md) {
  for (const auto& [k, v] : md) out << "# " << k << '=' << v << '\n';
}

struct SweepRow {
  std::string model;
  double t0;
  double c_t;
  double a;
  double mean_crack;
  double spacing_param;
  ReliabilityResult result;
  std::size_t n_inner;
  std::uint64_t seed;
};

inline constexpr const char* kSweepHeader =
    "model,t0,c_T,a,mean_crack,spacing_param,estimate,std_error,error_bound,M,n_inner,seed";

inline void write_sweep_csv(std::ostream& out, const Metadata& md, const std::vector<SweepRow>& rows) {
  write_metadata(out, md);
  out << kSweepHeader << '\n';
  for (const auto& r : rows) {
    out << r.model << ',' << fmt17(r.t0) << ',' << fmt17(r.c_t) << ',' << fmt17(r.a) << ',' << fmt17(r.mean_crack)
        << ',' << fmt17(r.spacing_param) << ',' << fmt17(r.result.estimate) << ',' << fmt17(r.result.std_error) << ','
        << fmt17(r.result.numeric_error_bound) << ',' << r.result.samples << ',' << r.n_inner << ',' << r.seed
        << '\n';
  }
}

/// Largest crack count any spacing parameter of the sweep can produce.
inline double sweep_k_max(const Config& c) {
  double k = 0.0;
  for (double param : c.spacing.param) {
    const auto m = c.spacing_model(param);
    if (const auto* d = std::get_if<Deterministic>(&m)) k = std::max(k, std::floor(c.run.band_length / d->pitch));
    else if (const auto* b = std::get_if<BinomialLattice>(&m))
      k = std::max(k, std::floor(std::min(b->zone, c.run.band_length) / b->pitch));
    else k = std::max(k, std::ceil(c.run.band_length / min_gap(m)));
  }
  return k;
}

/// q-integrals for one (t0, c_T, mean crack) cell; q1 sample size grows by 4x
/// until 3 SE(q1) k_max falls below half the target bound or reaches inner_max.
struct QCell {
  std::unique_ptr<QProvider> provider;
  std::size_t n_inner;
};

inline QCell build_q_cell(const Config& c, const FractureModel& frac, double t0, double c_t, double mean,
                          double k_max, unsigned threads) {
  const auto p = OuParams::from_cv(t0, c.tension.a, c_t);
  const auto dist = CrackLengthDist::from_mean(mean, c.cracks.shape);
  const double span = c.geometry.span;
  Q1Options o1;
  o1.seed = derive_seed(c.run.seed, "q1");
  o1.par = {threads, 8};
  o1.samples = c.run.inner;
  Estimate q1 = compute_q1(p, dist, frac, span, o1);
  while (kErrorSe * q1.error * k_max > 0.5 * c.run.target_bound && o1.samples < c.run.inner_max) {
    o1.samples = std::min(c.run.inner_max, 4 * o1.samples);
    q1 = compute_q1(p, dist, frac, span, o1);
  }
  const Estimate q2 = compute_q2(p, dist, frac);
  Q3Options o3;
  o3.samples = c.run.q3_samples;
  o3.seed = derive_seed(c.run.seed, "q3");
  o3.par = {threads, 4096};
  return {std::make_unique<QProvider>(p, dist, frac, span, q1, q2, o3), o1.samples};
}

/// The reliability sweep. Rows come in the order spacing param, t0, c_T,
/// mean crack. Rows with c_T = 0 use r1, others r2.
inline std::vector<SweepRow> run_reliability_sweep(const Config& c, const FractureModel& frac) {
  validate_config(c);
  const unsigned threads = c.run.threads;
  const ParallelOptions par{threads, c.run.chunk};
  const double k_max = sweep_k_max(c);

  std::map<std::tuple<double, double, double>, QCell> cells;
  std::vector<std::tuple<double, double, double>> keys;
  for (double t0 : c.tension.t0)
    for (double ct : c.tension.c_t)
      for (double mean : c.cracks.mean)
        if (ct > 0.0) keys.emplace_back(t0, ct, mean);
  for (const auto& key : keys) {
    const auto [t0, ct, mean] = key;
    cells.emplace(key, build_q_cell(c, frac, t0, ct, mean, k_max, threads));
  }

  std::vector<SweepRow> rows;
  const std::string name = spacing_kind_name(c.spacing.kind);
  for (double param : c.spacing.param) {
    const auto model = c.spacing_model(param);
    for (double t0 : c.tension.t0) {
      for (double ct : c.tension.c_t) {
        for (double mean : c.cracks.mean) {
          SweepRow row{name, t0, ct, c.tension.a, mean, param, {}, 0, c.run.seed};
          const auto dist = CrackLengthDist::from_mean(mean, c.cracks.shape);
          if (ct == 0.0) {
            const double q = qbar(t0, dist, frac);
            if (c.spacing.kind == SpacingKind::Lognormal3)
              row.result = r1_conditional_mc(model, q, c.run.band_length, c.run.samples,
                                             derive_seed(c.run.seed, "outer"), par);
            else row.result = r1_closed_form(model, c.run.band_length, q);
          } else {
            auto& cell = cells.at({t0, ct, mean});
            row.n_inner = cell.n_inner;
            if (const auto* d = std::get_if<Deterministic>(&model))
              row.result = r2_deterministic(d->pitch, c.run.band_length, *cell.provider);
            else
              row.result = r2_conditional_mc(model, *cell.provider, c.run.band_length, c.run.samples,
                                             derive_seed(c.run.seed, "outer"), par);
          }
          rows.push_back(std::move(row));
        }
      }
    }
  }
  return rows;
}

// ---------------------------------------------------------------- critical tension

struct CriticalRow {
  std::string model;
  double mean_crack;
  double spacing_param;
  double c_t;
  std::string method;
  double tension;
  double bracket_width;
  std::string status;
};

inline constexpr const char* kCriticalHeader =
    "model,mean_crack,spacing_param,c_T,reliability,method,tension,bracket_width,status";

inline std::vector<CriticalRow> run_critical_tension(const Config& c, const FractureModel& frac) {
  validate_config(c);
  const double q = c.critical.reliability;
  const double band = c.run.band_length;
  const ParallelOptions par{c.run.threads, c.run.chunk};
  std::vector<CriticalRow> rows;
  const std::string name = spacing_kind_name(c.spacing.kind);
  auto attempt = [](CriticalRow& row, auto&& solve) {
    try {
      solve();
      row.status = "ok";
    } catch (const std::exception& e) {
      row.tension = std::nan("");
      row.status = std::string("infeasible: ") + e.what();
    }
  };
  for (double param : c.spacing.param) {
    const auto model = c.spacing_model(param);
    for (double mean : c.cracks.mean) {
      const auto dist = CrackLengthDist::from_mean(mean, c.cracks.shape);
      for (double ct : c.tension.c_t) {
        if (ct == 0.0 && c.spacing.kind != SpacingKind::Lognormal3) {
          CriticalRow row{name, mean, param, ct, "closed", 0.0, 0.0, ""};
          attempt(row, [&] {
            if (const auto* p = std::get_if<Poisson>(&model))
              row.tension = critical_tension_poisson(p->rate, band, q, dist, frac);
            else if (const auto* b = std::get_if<BinomialLattice>(&model))
              row.tension = critical_tension_binomial(b->p_s, std::min(b->zone, band), b->pitch, q, dist, frac);
            else row.tension = critical_tension_deterministic(std::get<Deterministic>(model).pitch, band, q, dist, frac);
          });
          rows.push_back(row);
        }
        const bool numeric = c.critical.numeric || (ct == 0.0 && c.spacing.kind == SpacingKind::Lognormal3);
        if (!numeric) continue;
        CriticalRow row{name, mean, param, ct, "numeric", 0.0, 0.0, ""};
        attempt(row, [&] {
          std::function<ReliabilityResult(double)> rel;
          if (ct == 0.0) {
            rel = [&](double t0) {
              const double qb = qbar(t0, dist, frac);
              if (c.spacing.kind == SpacingKind::Lognormal3)
                return r1_conditional_mc(model, qb, band, c.run.samples, derive_seed(c.run.seed, "outer"), par);
              return r1_closed_form(model, band, qb);
            };
          } else {
            rel = [&](double t0) {
              auto cell = build_q_cell(c, frac, t0, ct, mean, sweep_k_max(c), c.run.threads);
              if (const auto* d = std::get_if<Deterministic>(&model))
                return r2_deterministic(d->pitch, band, *cell.provider);
              return r2_conditional_mc(model, *cell.provider, band, c.run.samples, derive_seed(c.run.seed, "outer"),
                                       par);
            };
          }
          const auto res = critical_tension_numeric(rel, q, c.critical.lo, c.critical.hi, ct == 0.0 ? 1e-9 : 1e-4);
          row.tension = res.tension;
          row.bracket_width = res.bracket_width;
        });
        rows.push_back(row);
      }
    }
  }
  return rows;
}

inline void write_critical_csv(std::ostream& out, const Metadata& md, double q, const std::vector<CriticalRow>& rows) {
  write_metadata(out, md);
  out << kCriticalHeader << '\n';
  for (const auto& r : rows) {
    std::string status = r.status;
    for (char& ch : status)
      if (ch == ',' || ch == '\n') ch = ';';
    out << r.model << ',' << fmt17(r.mean_crack) << ',' << fmt17(r.spacing_param) << ',' << fmt17(r.c_t) << ','
        << fmt17(q) << ',' << r.method << ',' << fmt17(r.tension) << ',' << fmt17(r.bracket_width) << ',' << status
        << '\n';
  }
}

// ---------------------------------------------------------------- first passage

struct FirstPassageRow {
  double t0;
  double c_t;
  double boundary_sd;
  double boundary;
  double start;
  double s;
  double spectral;
  Estimate oracle;
  std::size_t paths;
};

/// Oracle standard error, floored by the binomial error implied by the spectral value
/// so that a curve where every path survives still has a finite scale.
inline double first_passage_se(const FirstPassageRow& r) {
  const double p = std::clamp(r.spectral, 0.0, 1.0);
  return std::max(r.oracle.error, std::sqrt(p * (1.0 - p) / static_cast<double>(r.paths)));
}

inline double first_passage_z(const FirstPassageRow& r) {
  const double se = first_passage_se(r);
  return se > 0.0 ? (r.spectral - r.oracle.value) / se : (r.spectral == r.oracle.value ? 0.0 : INFINITY);
}

inline constexpr const char* kFirstPassageHeader = "t0,c_T,a,boundary_sd,boundary,start,s,spectral,oracle,oracle_se,z";

/// Start level at stationary quantile `q` conditional on lying below `boundary`.
inline double conditional_start(const OuParams& p, double boundary, double q) {
  const double sd = p.stationary_sd();
  return p.t0() + sd * normal_quantile(q * normal_cdf((boundary - p.t0()) / sd));
}

inline std::vector<FirstPassageRow> run_first_passage(const Config& c) {
  validate_config(c);
  const auto& fp = c.first_passage;
  auto horizons = fp.horizons;
  std::sort(horizons.begin(), horizons.end());
  PathOptions po;
  po.step = fp.step;
  po.par = {c.run.threads, 1024};
  std::vector<FirstPassageRow> rows;
  for (double t0 : c.tension.t0) {
    for (double ct : c.tension.c_t) {
      if (ct == 0.0) continue;
      const auto p = OuParams::from_cv(t0, c.tension.a, ct);
      RootCache cache;
      for (double k : fp.boundary_sd) {
        const double b = t0 + k * p.stationary_sd();
        for (double q : fp.start_quantiles) {
          const double y = conditional_start(p, b, q);
          const auto e = build_expansion(p, b, y, horizons.front(), {}, &cache);
          const auto seed = derive_seed(c.run.seed, hex64(std::bit_cast<std::uint64_t>(b)) + hex64(std::bit_cast<std::uint64_t>(y)));
          const auto sims = simulate_survival_curve(p, b, y, horizons, fp.paths, seed, po);
          for (std::size_t i = 0; i < horizons.size(); ++i)
            rows.push_back({t0, ct, k, b, y, horizons[i], survival(e, horizons[i]), sims[i], fp.paths});
        }
      }
    }
  }
  return rows;
}

inline void write_first_passage_csv(std::ostream& out, const Metadata& md, double a,
                                    const std::vector<FirstPassageRow>& rows) {
  write_metadata(out, md);
  out << kFirstPassageHeader << '\n';
  for (const auto& r : rows) {
    const double z = first_passage_z(r);
    out << fmt17(r.t0) << ',' << fmt17(r.c_t) << ',' << fmt17(a) << ',' << fmt17(r.boundary_sd) << ','
        << fmt17(r.boundary) << ',' << fmt17(r.start) << ',' << fmt17(r.s) << ',' << fmt17(r.spectral) << ','
        << fmt17(r.oracle.value) << ',' << fmt17(r.oracle.error) << ',' << fmt17(z) << '\n';
  }
}

}  // namespace webrel
