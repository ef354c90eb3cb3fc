#pragma once

// Experiment configuration read from an INI file. Every key is optional and
// falls back to the defaults below; unknown sections or keys are errors.
// List-valued keys take comma-separated values.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "webrel/crack_occurrence.hpp"
#include "webrel/errors.hpp"
#include "webrel/fracture_mechanics.hpp"

namespace webrel {

/// Invalid configuration; the message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TensionConfig {
  double a = 1.0;
  std::vector<double> t0{200.0, 350.0, 500.0};
  std::vector<double> c_t{0.0, 0.05, 0.1};
};

struct MaterialConfig {
  double youngs = 4e9;
  double g_c = 6500.0;
  std::string weight_table;  // empty: built-in table
};

struct CrackConfig {
  double shape = 0.8;
  std::vector<double> mean{0.005, 0.015};
};

enum class SpacingKind { Poisson, Binomial, Deterministic, Lognormal3 };

struct SpacingConfig {
  SpacingKind kind = SpacingKind::Deterministic;
  std::vector<double> param{2500.0, 5000.0, 7500.0};  // rate, pitch, pitch or mean gap
  double p_s = 0.9;
  double zone = 0.0;    // 0: whole band
  double cv = 1.0;
  double shift = 0.0;   // 0: the span
};

struct RunConfig {
  double band_length = 3.5e5;
  std::uint64_t seed = 20240501;
  std::size_t samples = 100;       // outer M
  std::size_t inner = 200;         // initial q1 sample size
  std::size_t inner_max = 800;     // cap for the adaptive q1 size
  std::size_t q3_samples = 2000;
  double target_bound = 0.01;
  unsigned threads = 0;
  std::size_t chunk = 256;
};

struct CriticalConfig {
  double reliability = 0.99;
  bool numeric = false;
  double lo = 1.0;
  double hi = 5000.0;
};

struct FirstPassageConfig {
  std::vector<double> boundary_sd{1.0, 2.0, 3.0};
  std::vector<double> start_quantiles{0.05, 0.25, 0.5, 0.75, 0.95};
  std::vector<double> horizons{0.5, 1.0, 2.0};
  std::size_t paths = 100000;
  double step = 1e-3;
};

struct Config {
  TensionConfig tension;
  WebGeometry geometry;
  MaterialConfig material;
  CrackConfig cracks;
  SpacingConfig spacing;
  RunConfig run;
  CriticalConfig critical;
  FirstPassageConfig first_passage;

  FractureModel fracture_model() const {
    const auto table = material.weight_table.empty() ? WeightFunctionTable::standard()
                                                     : WeightFunctionTable::load_csv(material.weight_table);
    return {Material::from_energy(material.youngs, material.g_c), geometry, table};
  }

  /// Spacing model with the sweep parameter set to `param`.
  SpacingModel spacing_model(double param) const {
    switch (spacing.kind) {
      case SpacingKind::Poisson:
        return Poisson{param};
      case SpacingKind::Binomial:
        return BinomialLattice{param, spacing.p_s, spacing.zone > 0.0 ? spacing.zone : run.band_length};
      case SpacingKind::Deterministic:
        return Deterministic{param};
      case SpacingKind::Lognormal3:
        return Lognormal3::from_mean_cv(param, spacing.cv, spacing.shift > 0.0 ? spacing.shift : geometry.span);
    }
    throw ConfigError("spacing.model: unknown kind");
  }
};

inline std::string spacing_kind_name(SpacingKind k) {
  switch (k) {
    case SpacingKind::Poisson:
      return "poisson";
    case SpacingKind::Binomial:
      return "binomial";
    case SpacingKind::Deterministic:
      return "deterministic";
    case SpacingKind::Lognormal3:
      return "lognormal3";
  }
  return "?";
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& field, const std::string& text) {
  const std::string t = trim(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw ConfigError(field + ": expected a number, got '" + t + "'");
  }
  if (used != t.size()) throw ConfigError(field + ": expected a number, got '" + t + "'");
  return v;
}

inline std::uint64_t parse_u64(const std::string& field, const std::string& text) {
  const std::string t = trim(text);
  if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError(field + ": expected a non-negative integer, got '" + t + "'");
  try {
    return std::stoull(t);
  } catch (const std::exception&) {
    throw ConfigError(field + ": integer out of range: '" + t + "'");
  }
}

inline std::vector<double> parse_list(const std::string& field, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(field, item));
  if (out.empty()) throw ConfigError(field + ": expected at least one value");
  return out;
}

inline bool parse_bool(const std::string& field, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError(field + ": expected true or false, got '" + t + "'");
}

}  // namespace detail

/// Checks ranges; throws ConfigError naming the field.
inline void validate_config(const Config& c) {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  need(c.tension.a > 0.0, "tension.a: must be positive");
  for (double v : c.tension.t0) need(v > 0.0, "tension.t0: values must be positive");
  for (double v : c.tension.c_t) need(v >= 0.0, "tension.c_T: values must be non-negative");
  need(c.geometry.span > 0.0, "geometry.span: must be positive");
  need(c.geometry.half_width > 0.0, "geometry.half_width: must be positive");
  need(c.geometry.thickness > 0.0, "geometry.thickness: must be positive");
  need(c.material.youngs > 0.0, "material.youngs: must be positive");
  need(c.material.g_c > 0.0, "material.g_c: must be positive");
  need(c.cracks.shape > 0.0, "cracks.shape: must be positive");
  for (double v : c.cracks.mean) need(v > 0.0, "cracks.mean: values must be positive");
  for (double v : c.spacing.param) need(v > 0.0, "spacing.param: values must be positive");
  need(c.spacing.p_s > 0.0 && c.spacing.p_s <= 1.0, "spacing.p_s: must lie in (0, 1]");
  need(c.spacing.zone >= 0.0, "spacing.zone: must be non-negative");
  need(c.spacing.cv > 0.0, "spacing.cv: must be positive");
  need(c.spacing.shift >= 0.0, "spacing.shift: must be non-negative");
  need(c.run.band_length > 0.0, "run.band_length: must be positive");
  need(c.run.samples >= 1, "run.samples: must be at least 1");
  need(c.run.inner >= 2, "run.inner: must be at least 2");
  need(c.run.inner_max >= c.run.inner, "run.inner_max: must be at least run.inner");
  need(c.run.q3_samples >= 1, "run.q3_samples: must be at least 1");
  need(c.run.target_bound > 0.0, "run.target_bound: must be positive");
  need(c.run.chunk >= 1, "run.chunk: must be at least 1");
  need(c.critical.reliability > 0.0 && c.critical.reliability < 1.0, "critical.reliability: must lie in (0, 1)");
  need(c.critical.lo > 0.0 && c.critical.hi > c.critical.lo, "critical.lo/hi: need 0 < lo < hi");
  for (double v : c.first_passage.start_quantiles)
    need(v > 0.0 && v < 1.0, "first_passage.start_quantiles: values must lie in (0, 1)");
  for (double v : c.first_passage.boundary_sd) need(std::isfinite(v), "first_passage.boundary_sd: must be finite");
  for (double v : c.first_passage.horizons) need(v > 0.0, "first_passage.horizons: values must be positive");
  need(c.first_passage.paths >= 1, "first_passage.paths: must be at least 1");
  need(c.first_passage.step > 0.0, "first_passage.step: must be positive");
  if (c.spacing.kind == SpacingKind::Poisson) {
    for (double v : c.tension.c_t)
      need(v == 0.0, "spacing.model: poisson spacing allows gaps shorter than the span and cannot be combined with c_T > 0");
  }
  if (c.spacing.kind == SpacingKind::Deterministic || c.spacing.kind == SpacingKind::Binomial) {
    bool ou = false;
    for (double v : c.tension.c_t) ou = ou || v > 0.0;
    for (double v : c.spacing.param)
      need(!ou || v > c.geometry.span, "spacing.param: pitch must exceed geometry.span when c_T > 0");
  }
  if (c.spacing.kind == SpacingKind::Lognormal3) {
    const double shift = c.spacing.shift > 0.0 ? c.spacing.shift : c.geometry.span;
    for (double v : c.spacing.param) need(v > shift, "spacing.param: lognormal3 mean gap must exceed the shift");
  }
}

/// Parses INI text. Relative weight_table paths resolve against `base_dir`.
inline Config parse_config(std::istream& in, const std::filesystem::path& base_dir = {}) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  Config c;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  std::map<std::string, std::map<std::string, Setter>> fields;
  auto num = [](double& dst) { return Setter([&dst](const std::string& f, const std::string& v) { dst = detail::parse_double(f, v); }); };
  auto list = [](std::vector<double>& dst) {
    return Setter([&dst](const std::string& f, const std::string& v) { dst = detail::parse_list(f, v); });
  };
  auto size = [](std::size_t& dst) {
    return Setter([&dst](const std::string& f, const std::string& v) { dst = detail::parse_u64(f, v); });
  };
  fields["tension"] = {{"a", num(c.tension.a)}, {"t0", list(c.tension.t0)}, {"c_T", list(c.tension.c_t)}};
  fields["geometry"] = {{"span", num(c.geometry.span)},
                        {"half_width", num(c.geometry.half_width)},
                        {"thickness", num(c.geometry.thickness)}};
  fields["material"] = {{"youngs", num(c.material.youngs)},
                        {"g_c", num(c.material.g_c)},
                        {"weight_table", [&](const std::string&, const std::string& v) {
                           const std::filesystem::path path(detail::trim(v));
                           c.material.weight_table = path.is_relative() && !base_dir.empty() ? (base_dir / path).string()
                                                                                              : path.string();
                         }}};
  fields["cracks"] = {{"shape", num(c.cracks.shape)}, {"mean", list(c.cracks.mean)}};
  fields["spacing"] = {{"model",
                        [&](const std::string& f, const std::string& v) {
                          const auto t = detail::trim(v);
                          if (t == "poisson") c.spacing.kind = SpacingKind::Poisson;
                          else if (t == "binomial") c.spacing.kind = SpacingKind::Binomial;
                          else if (t == "deterministic") c.spacing.kind = SpacingKind::Deterministic;
                          else if (t == "lognormal3") c.spacing.kind = SpacingKind::Lognormal3;
                          else throw ConfigError(f + ": expected poisson, binomial, deterministic or lognormal3, got '" + t + "'");
                        }},
                       {"param", list(c.spacing.param)},
                       {"p_s", num(c.spacing.p_s)},
                       {"zone", num(c.spacing.zone)},
                       {"cv", num(c.spacing.cv)},
                       {"shift", num(c.spacing.shift)}};
  fields["run"] = {{"band_length", num(c.run.band_length)},
                   {"seed", [&](const std::string& f, const std::string& v) { c.run.seed = detail::parse_u64(f, v); }},
                   {"samples", size(c.run.samples)},
                   {"inner", size(c.run.inner)},
                   {"inner_max", size(c.run.inner_max)},
                   {"q3_samples", size(c.run.q3_samples)},
                   {"target_bound", num(c.run.target_bound)},
                   {"threads", [&](const std::string& f, const std::string& v) {
                      c.run.threads = static_cast<unsigned>(detail::parse_u64(f, v));
                    }},
                   {"chunk", size(c.run.chunk)}};
  fields["critical"] = {{"reliability", num(c.critical.reliability)},
                        {"numeric", [&](const std::string& f, const std::string& v) { c.critical.numeric = detail::parse_bool(f, v); }},
                        {"lo", num(c.critical.lo)},
                        {"hi", num(c.critical.hi)}};
  fields["first_passage"] = {{"boundary_sd", list(c.first_passage.boundary_sd)},
                             {"start_quantiles", list(c.first_passage.start_quantiles)},
                             {"horizons", list(c.first_passage.horizons)},
                             {"paths", size(c.first_passage.paths)},
                             {"step", num(c.first_passage.step)}};

  for (const auto& [section, body] : tree) {
    const auto sec = fields.find(section);
    if (sec == fields.end()) {
      if (body.empty()) throw ConfigError(section + ": key outside any section");
      throw ConfigError(section + ": unknown section");
    }
    for (const auto& [key, value] : body) {
      const auto it = sec->second.find(key);
      if (it == sec->second.end()) throw ConfigError(section + "." + key + ": unknown key");
      it->second(section + "." + key, value.get_value<std::string>());
    }
  }
  validate_config(c);
  return c;
}

inline Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  return parse_config(in, path.parent_path());
}

}  // namespace webrel
