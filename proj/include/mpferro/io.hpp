#pragma once

// JSON experiment configs (strict: unknown keys are errors), a SHA-256 config
// hash, and locale-independent CSV/number formatting.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "mpferro/errors.hpp"
#include "mpferro/model.hpp"
#include "mpferro/solver.hpp"
#include "mpferro/spins.hpp"

namespace mpferro {

using json = nlohmann::json;

namespace detail {

inline void require_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

inline double get_number(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
  if (!j.at(key).is_number()) throw ConfigError(where + ": '" + key + "' must be a number");
  return j.at(key).get<double>();
}

inline std::vector<double> get_numbers(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
  const json& a = j.at(key);
  if (!a.is_array()) throw ConfigError(where + ": '" + key + "' must be an array");
  std::vector<double> out;
  for (const auto& x : a) {
    if (!x.is_number()) throw ConfigError(where + ": '" + key + "' must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace detail

inline SpinFamily family_from_json(const json& j) {
  if (j.is_string()) return family_from_json(json{{"kind", j.get<std::string>()}});
  detail::require_keys(j, {"kind", "q", "a", "support", "weights"}, "family");
  if (!j.contains("kind") || !j.at("kind").is_string()) throw ConfigError("family: missing 'kind'");
  const std::string kind = j.at("kind").get<std::string>();
  auto only = [&](const std::set<std::string>& keys) { detail::require_keys(j, keys, "family '" + kind + "'"); };
  if (kind == "rademacher") {
    only({"kind"});
    return SpinFamily::rademacher();
  }
  if (kind == "uniform") {
    only({"kind"});
    return SpinFamily::uniform();
  }
  if (kind == "three_point") {
    only({"kind", "q", "a"});
    const double q = detail::get_number(j, "q", "family");
    return j.contains("a") ? SpinFamily::three_point(q, detail::get_number(j, "a", "family")) : SpinFamily::three_point(q);
  }
  if (kind == "discrete") {
    only({"kind", "support", "weights"});
    return SpinFamily::discrete(detail::get_numbers(j, "support", "family"), detail::get_numbers(j, "weights", "family"));
  }
  throw ConfigError("family: unknown kind '" + kind + "'");
}

inline json family_to_json(const SpinFamily& f) {
  switch (f.kind()) {
    case SpinKind::rademacher: return {{"kind", "rademacher"}};
    case SpinKind::uniform: return {{"kind", "uniform"}};
    case SpinKind::three_point: return {{"kind", "three_point"}, {"q", f.hole_probability()}, {"a", f.three_point_scale()}};
    case SpinKind::discrete: return {{"kind", "discrete"}, {"support", f.support()}, {"weights", f.weights()}};
  }
  return {};
}

/// {nu, alpha, h, beta, families}; h defaults to zeros, families to +-1.
inline ModelSpec model_from_json(const json& j) {
  detail::require_keys(j, {"nu", "alpha", "h", "beta", "families"}, "model");
  ModelSpec s;
  s.alpha = detail::get_numbers(j, "alpha", "model");
  const int nu = j.contains("nu") ? static_cast<int>(detail::get_number(j, "nu", "model")) : static_cast<int>(s.alpha.size());
  if (nu != static_cast<int>(s.alpha.size())) throw ConfigError("model: nu does not match alpha");
  s.h = j.contains("h") ? detail::get_numbers(j, "h", "model") : std::vector<double>(nu, 0.0);
  s.beta = detail::get_number(j, "beta", "model");
  if (j.contains("families")) {
    const json& fs = j.at("families");
    if (fs.is_array()) {
      for (const auto& f : fs) s.families.push_back(family_from_json(f));
    } else {
      s.families.assign(nu, family_from_json(fs));
    }
  } else {
    s.families.assign(nu, SpinFamily::rademacher());
  }
  s.validate();
  return s;
}

inline json model_to_json(const ModelSpec& s) {
  json fams = json::array();
  for (const auto& f : s.families) fams.push_back(family_to_json(f));
  return {{"nu", s.nu()}, {"alpha", s.alpha}, {"h", s.h}, {"beta", s.beta}, {"families", fams}};
}

/// Parsed experiment config. Every key is optional except where a command needs it.
struct ExperimentConfig {
  json raw = json::object();
  std::optional<ModelSpec> model;
  std::optional<double> c;
  StartGrid start_grid;
  std::vector<long> N;
  double h2_min = 0, h2_max = 1;
  int h2_samples = 101;
  int samples = 4001;
  double eps_lo = 1e-4, eps_hi = 1e-2;
  int eps_samples = 9;
  int grid = 400;
  double tol = 1e-8;
};

inline const std::set<std::string>& config_keys() {
  static const std::set<std::string> keys{"model", "c", "start_grid", "N", "h2_grid", "samples", "eps_range",
                                          "eps_samples", "grid", "tol"};
  return keys;
}

inline ExperimentConfig config_from_json(const json& j) {
  detail::require_keys(j, config_keys(), "config");
  ExperimentConfig c;
  c.raw = j;
  if (j.contains("model")) c.model = model_from_json(j.at("model"));
  if (j.contains("c")) c.c = detail::get_number(j, "c", "config");
  if (j.contains("start_grid")) {
    const json& g = j.at("start_grid");
    detail::require_keys(g, {"points_per_axis", "kernel_seeds"}, "start_grid");
    if (g.contains("points_per_axis")) c.start_grid.points_per_axis = static_cast<int>(detail::get_number(g, "points_per_axis", "start_grid"));
    if (g.contains("kernel_seeds")) {
      if (!g.at("kernel_seeds").is_boolean()) throw ConfigError("start_grid: 'kernel_seeds' must be boolean");
      c.start_grid.kernel_seeds = g.at("kernel_seeds").get<bool>();
    }
    if (c.start_grid.points_per_axis < 1) throw ConfigError("start_grid: empty start grid");
  }
  if (j.contains("N")) {
    for (double x : detail::get_numbers(j, "N", "config")) {
      if (x < 1 || x != std::floor(x)) throw ConfigError("config: N entries must be positive integers");
      c.N.push_back(static_cast<long>(x));
    }
  }
  if (j.contains("h2_grid")) {
    const json& g = j.at("h2_grid");
    detail::require_keys(g, {"min", "max", "samples"}, "h2_grid");
    c.h2_min = detail::get_number(g, "min", "h2_grid");
    c.h2_max = detail::get_number(g, "max", "h2_grid");
    c.h2_samples = static_cast<int>(detail::get_number(g, "samples", "h2_grid"));
    if (c.h2_samples < 2 || !(c.h2_max > c.h2_min)) throw ConfigError("h2_grid: need samples >= 2 and max > min");
  }
  if (j.contains("samples")) c.samples = static_cast<int>(detail::get_number(j, "samples", "config"));
  if (c.samples < 3) throw ConfigError("config: samples must be >= 3");
  if (j.contains("eps_range")) {
    const auto r = detail::get_numbers(j, "eps_range", "config");
    if (r.size() != 2 || !(r[0] > 0) || !(r[1] > r[0])) throw ConfigError("config: eps_range must be [lo, hi] with 0 < lo < hi");
    c.eps_lo = r[0];
    c.eps_hi = r[1];
  }
  if (j.contains("eps_samples")) c.eps_samples = static_cast<int>(detail::get_number(j, "eps_samples", "config"));
  if (j.contains("grid")) c.grid = static_cast<int>(detail::get_number(j, "grid", "config"));
  if (j.contains("tol")) c.tol = detail::get_number(j, "tol", "config");
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

inline std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

/// Hash of the canonical (sorted-key, compact) dump.
inline std::string config_hash(const json& j) { return sha256_hex(j.dump()); }

/// Shortest round-trip decimal, independent of the C++ locale.
inline std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";  // no "-0"
  char buf[32];
  for (int p = 1; p <= 17; ++p) {
    std::snprintf(buf, sizeof buf, "%.*g", p, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

/// CSV with a leading "# config_hash=..." comment and a header row.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& hash, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw ConfigError("cannot write '" + path + "'");
    out_ << "# config_hash=" << hash << "\n";
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << quote(cells[i]);
    }
    out_ << '\n';
  }

 private:
  static std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
      if (ch == '"') q += '"';
      q += ch;
    }
    return q + "\"";
  }

  std::ofstream out_;
};

}  // namespace mpferro
