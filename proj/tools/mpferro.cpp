// mpferro: command-line front end.
//
// Exit codes: 0 success, 1 a verification or cross-check failed,
// 2 bad config or arguments, 3 a solver did not converge.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mpferro/mpferro.hpp"

namespace fs = std::filesystem;
using namespace mpferro;

namespace {

struct Options {
  std::string config;
  std::string out;
  int threads = 1;
  std::optional<double> tol;

  std::optional<int> nu;
  std::vector<double> alpha;
  std::vector<double> h;
  std::optional<double> beta;
  std::string family;
  std::optional<double> c;

  std::optional<double> h2_min, h2_max;
  std::optional<int> h2_samples;
  std::optional<int> samples;
  std::optional<int> grid;
  std::vector<double> h2_list;
  std::vector<long> sizes;
  std::optional<double> eps_lo, eps_hi;
  std::optional<int> eps_samples;

  bool surface = false;
  bool critical = false;
  bool generalised = false;
  int profile_samples = 401;
};

/// Config file merged with command-line overrides.
struct Setup {
  ExperimentConfig cfg;
  json effective;
  std::string hash;
};

ModelSpec build_model(const Options& o, const ExperimentConfig& cfg, bool need_beta) {
  ModelSpec s;
  if (cfg.model) s = *cfg.model;
  if (!o.alpha.empty()) {
    s.alpha = o.alpha;
    if (s.h.size() != s.alpha.size()) s.h.assign(s.alpha.size(), 0.0);
    if (s.families.size() != s.alpha.size()) s.families.assign(s.alpha.size(), SpinFamily::rademacher());
  }
  if (o.nu && s.alpha.empty()) {
    s.alpha.assign(*o.nu, 1.0 / *o.nu);
    s.h.assign(*o.nu, 0.0);
    s.families.assign(*o.nu, SpinFamily::rademacher());
  }
  if (s.alpha.empty()) throw ConfigError("model: give --alpha, --nu, or a config with a model");
  if (o.nu && *o.nu != s.nu()) throw ConfigError("model: --nu does not match alpha");
  if (!o.h.empty()) s.h = o.h;
  if (!o.family.empty()) s.families.assign(s.alpha.size(), family_from_json(json(o.family)));
  if (o.beta) {
    s.beta = *o.beta;
  } else if (!cfg.model) {
    if (need_beta) throw ConfigError("model: --beta is required");
    s.beta = 1.0;
  }
  s.validate();
  return s;
}

Setup make_setup(const Options& o, const std::string& command) {
  Setup st;
  if (!o.config.empty()) st.cfg = load_config(o.config);
  ExperimentConfig& c = st.cfg;
  if (o.c) c.c = *o.c;
  if (o.h2_min) c.h2_min = *o.h2_min;
  if (o.h2_max) c.h2_max = *o.h2_max;
  if (o.h2_samples) c.h2_samples = *o.h2_samples;
  if (o.samples) c.samples = *o.samples;
  if (o.grid) c.grid = *o.grid;
  if (!o.sizes.empty()) c.N = o.sizes;
  if (o.eps_lo) c.eps_lo = *o.eps_lo;
  if (o.eps_hi) c.eps_hi = *o.eps_hi;
  if (o.eps_samples) c.eps_samples = *o.eps_samples;
  if (o.tol) c.tol = *o.tol;
  if (c.h2_samples < 2 || !(c.h2_max > c.h2_min)) throw ConfigError("h2 grid: need samples >= 2 and max > min");
  if (c.samples < 3) throw ConfigError("samples must be >= 3");
  if (c.grid < 2) throw ConfigError("grid must be >= 2");
  if (!(c.tol > 0)) throw ConfigError("tol must be > 0");
  c.start_grid.threads = std::max(1, o.threads);

  st.effective = c.raw;
  st.effective["command"] = command;
  st.effective["h2_grid"] = {{"min", c.h2_min}, {"max", c.h2_max}, {"samples", c.h2_samples}};
  st.effective["samples"] = c.samples;
  st.effective["grid"] = c.grid;
  st.effective["tol"] = c.tol;
  if (c.c) st.effective["c"] = *c.c;
  if (!c.N.empty()) st.effective["N"] = c.N;
  if (!o.h2_list.empty()) st.effective["h2_list"] = o.h2_list;
  return st;
}

void finalize_hash(Setup& st, const ModelSpec& s) {
  st.effective["model"] = model_to_json(s);
  st.hash = config_hash(st.effective);
}

std::vector<double> h2_grid(const ExperimentConfig& c) {
  std::vector<double> g;
  for (int i = 0; i < c.h2_samples; ++i) g.push_back(c.h2_min + (c.h2_max - c.h2_min) * i / (c.h2_samples - 1.0));
  return g;
}

std::string out_path(const Options& o, const std::string& name) {
  const fs::path dir = o.out.empty() ? fs::path(".") : fs::path(o.out);
  fs::create_directories(dir);
  return (dir / name).string();
}

void write_json(const Options& o, const std::string& name, const json& j) {
  std::cout << j.dump(2) << "\n";
  if (o.out.empty()) return;
  std::ofstream f(out_path(o, name));
  if (!f) throw ConfigError("cannot write '" + name + "'");
  f << j.dump(2) << "\n";
}

json vec_json(const Vector& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

std::string decimal(double x) {
  std::string s = fmt(x);
  if (s.find_first_of(".en") == std::string::npos) s += ".0";
  return s;
}

int cmd_beta_c(const Options& o) {
  Setup st = make_setup(o, "beta-c");
  const ModelSpec s = build_model(o, st.cfg, false);
  finalize_hash(st, s);
  const CriticalReport r = critical_beta(s);
  std::cout << decimal(r.beta_c) << "\n";
  if (!o.out.empty()) {
    json j{{"config_hash", st.hash},
           {"beta_c", r.beta_c},
           {"kernel", vec_json(r.kernel)},
           {"det_coefficients", r.det_coefficients},
           {"det_residual", r.det_residual},
           {"minors_positive_below", r.minors_ok_below}};
    std::ofstream f(out_path(o, "beta_c.json"));
    f << j.dump(2) << "\n";
  }
  if (o.surface) {
    if (s.nu() != 3) throw ConfigError("beta-c --surface: needs nu = 3");
    const int n = st.cfg.grid;
    CsvWriter csv(out_path(o, "beta_c_surface.csv"), st.hash, {"alpha1", "alpha2", "alpha3", "beta_c"});
    for (int i = 1; i < n; ++i)
      for (int k = 1; i + k < n; ++k) {
        ModelSpec t = s;
        t.alpha = {static_cast<double>(i) / n, static_cast<double>(k) / n, static_cast<double>(n - i - k) / n};
        csv.row({fmt(t.alpha[0]), fmt(t.alpha[1]), fmt(t.alpha[2]), fmt(critical_beta(t).beta_c)});
      }
  }
  return 0;
}

int cmd_solve(const Options& o) {
  Setup st = make_setup(o, "solve");
  const ModelSpec s = build_model(o, st.cfg, true);
  finalize_hash(st, s);
  const auto pts = solve_self_consistency(s, st.cfg.start_grid);
  std::vector<std::string> header;
  for (int a = 0; a < s.nu(); ++a) header.push_back("m" + std::to_string(a + 1));
  for (const char* h : {"pressure", "stability", "residual"}) header.push_back(h);
  CsvWriter csv(out_path(o, "stationary.csv"), st.hash, header);
  for (const auto& p : pts) {
    std::vector<std::string> row;
    std::cout << "m = (";
    for (int a = 0; a < s.nu(); ++a) {
      row.push_back(fmt(p.m[a]));
      std::cout << (a ? ", " : "") << fmt(p.m[a]);
    }
    row.push_back(fmt(p.pressure));
    row.push_back(to_string(p.stability));
    row.push_back(fmt(p.residual));
    csv.row(row);
    std::cout << ")  A = " << fmt(p.pressure) << "  " << to_string(p.stability) << "\n";
  }
  return 0;
}

int cmd_pressure(const Options& o) {
  Setup st = make_setup(o, "pressure");
  const ModelSpec s = build_model(o, st.cfg, true);
  const double c = st.cfg.c.value_or(static_cast<double>(s.nu()));
  st.effective["c"] = c;
  finalize_hash(st, s);
  const VariationalResult v = pressure_variational(s, c, st.cfg.start_grid);
  const auto pts = solve_self_consistency(s, st.cfg.start_grid);
  json j{{"config_hash", st.hash},
         {"A", v.pressure},
         {"c", c},
         {"m", vec_json(v.m)},
         {"saddles", v.saddles},
         {"upper_bound", v.upper_bound},
         {"energy_entropy", pressure_energy_entropy(s, v.m)},
         {"entropic", entropic_pressure(s, pts)}};
  double gap = std::max(std::abs(j["energy_entropy"].get<double>() - v.pressure),
                        std::abs(j["entropic"].get<double>() - v.pressure));
  if (s.nu() == 2) {
    const double marg = marginal_optimum(s, st.cfg.samples).pressure;
    j["marginal"] = marg;
    gap = std::max(gap, std::abs(marg - v.pressure));
  }
  j["max_route_gap"] = gap;
  j["routes_agree"] = gap <= st.cfg.tol;
  write_json(o, "pressure.json", j);
  return gap <= st.cfg.tol ? 0 : 1;
}

ModelSpec bipartite_model(const Options& o, Setup& st) {
  ModelSpec s = build_model(o, st.cfg, true);
  if (s.nu() != 2) throw ConfigError("needs a bipartite model (nu = 2)");
  finalize_hash(st, s);
  return s;
}

int cmd_phase_diagram(const Options& o) {
  Setup st = make_setup(o, "phase-diagram");
  const ModelSpec s = bipartite_model(o, st);
  const auto grid = h2_grid(st.cfg);

  CsvWriter lines(out_path(o, "critical_lines.csv"), st.hash, {"h2", "line1_h1", "line2_h1", "residual1", "residual2"});
  for (const auto& p : critical_lines(s, grid))
    lines.row({fmt(p.h2), fmt(p.line1_h1), fmt(p.line2_h1), fmt(p.residual1), fmt(p.residual2)});

  CsvWriter regimes(out_path(o, "regimes.csv"), st.hash, {"h2", "h1", "regime", "global_m1", "global_m2"});
  for (double h2 : grid) {
    const LandscapeReport r = landscape_scan(s, h2, st.cfg.samples);
    const LandscapePoint g = r.global();
    regimes.row({fmt(h2), fmt(r.h1), to_string(r.regime), fmt(g.m1), fmt(g.m2)});
  }

  const auto hits = coupled_line_intersections(s, st.cfg.grid, o.threads);
  CsvWriter ix(out_path(o, "intersections.csv"), st.hash, {"h1", "h2", "norm"});
  bool origin_only = true;
  for (const auto& [h1, h2] : hits) {
    ix.row({fmt(h1), fmt(h2), fmt(std::hypot(h1, h2))});
    if (std::hypot(h1, h2) > 1e-6) origin_only = false;
  }
  std::cout << hits.size() << " critical-line intersection(s)"
            << (origin_only ? ", origin only" : ", some away from the origin") << "\n";
  return 0;
}

int cmd_landscape(const Options& o) {
  Setup st = make_setup(o, "landscape");
  const ModelSpec s = bipartite_model(o, st);
  const auto list = o.h2_list.empty() ? h2_grid(st.cfg) : o.h2_list;
  CsvWriter pts(out_path(o, "landscape_points.csv"), st.hash,
                {"h2", "h1", "m1", "m2", "pressure", "curvature", "label", "regime"});
  CsvWriter prof(out_path(o, "landscape_profile.csv"), st.hash, {"h2", "h1", "m1", "A1"});
  for (double h2 : list) {
    const LandscapeReport r = landscape_scan(s, h2, st.cfg.samples);
    for (const auto& p : r.points)
      pts.row({fmt(h2), fmt(r.h1), fmt(p.m1), fmt(p.m2), fmt(p.pressure), fmt(p.curvature), to_string(p.label),
               to_string(r.regime)});
    ModelSpec t = s;
    t.h = {r.h1, h2};
    for (const auto& [m, a] : marginal_profile(t, o.profile_samples)) prof.row({fmt(h2), fmt(r.h1), fmt(m), fmt(a)});
    std::cout << "h2 = " << fmt(h2) << "  " << to_string(r.regime) << "\n";
  }
  return 0;
}

int cmd_critical_fields(const Options& o) {
  Setup st = make_setup(o, "critical-fields");
  const ModelSpec s = bipartite_model(o, st);
  json j{{"config_hash", st.hash}};
  const auto cf = critical_fields(s, st.cfg.samples);
  if (!cf) {
    j["critical_fields"] = nullptr;
    j["note"] = "beta <= beta_c: no first-order line";
  } else {
    j["h_c1"] = cf->h_c1;
    j["h_c2"] = cf->h_c2;
    j["h_c2_crossing"] = cf->h_c2_crossing;
    j["h_c3"] = cf->h_c3;
    if (const auto jump = first_order_jump(s, st.cfg.samples))
      j["jump"] = {{"h2", jump->h2},
                   {"m1_before", jump->m1_before},
                   {"m1_after", jump->m1_after},
                   {"m2_before", jump->m2_before},
                   {"m2_after", jump->m2_after}};
  }
  write_json(o, "critical_fields.json", j);
  return 0;
}

int cmd_fluctuations(const Options& o) {
  Setup st = make_setup(o, "fluctuations");
  ModelSpec s = build_model(o, st.cfg, !o.critical);
  if (o.critical) s.beta = critical_beta(s).beta_c;
  if (o.generalised) st.effective["generalised"] = true;
  if (o.critical) st.effective["critical"] = true;
  finalize_hash(st, s);
  if (st.cfg.N.empty()) throw ConfigError("fluctuations: give sizes with --N or the config key N");
  CsvWriter csv(out_path(o, "fluctuations.csv"), st.hash,
                {"N", "beta", "observable", "empirical", "predicted", "deviation"});
  auto emit = [&](long N, const std::string& name, double emp, double pred) {
    const double dev = std::isnan(pred) ? pred : std::abs(emp - pred) / std::abs(pred);
    csv.row({std::to_string(N), fmt(s.beta), name, fmt(emp), fmt(pred), fmt(dev)});
    std::cout << "N = " << N << "  " << name << " = " << fmt(emp);
    if (!std::isnan(pred)) std::cout << "  (predicted " << fmt(pred) << ")";
    std::cout << "\n";
  };
  const double nan = std::nan("");
  for (long N : st.cfg.N) {
    if (o.generalised) {
      const GfFluctStats g = gf_fluct_check(EnergyFunction::quadratic(1.0), s.families[0], s.beta, N);
      if (g.critical)
        emit(N, "kurtosis", g.kurtosis_ratio, g.kurtosis_predicted);
      else
        emit(N, "variance", g.variance, g.chi);
      continue;
    }
    if (s.nu() != 2) throw ConfigError("fluctuations: needs nu = 2 (or --generalised)");
    std::vector<long> Ns;
    for (double a : s.alpha) Ns.push_back(std::lround(a * static_cast<double>(N)));
    if (o.critical) {
      const FluctuationStats f = critical_fluct_stats(s, Ns, o.threads);
      emit(N, "kurtosis_w", f.kurtosis_ratio, f.kurtosis_predicted);
      emit(N, "var_perp_quarter", f.var_perp_quarter, nan);
      emit(N, "var_w_quarter", f.var_w_quarter, nan);
      emit(N, "var_w_sqrt", f.var_w_sqrt, nan);
    } else {
      const FluctuationStats f = fluct_covariance(s, Ns, o.threads);
      emit(N, "cov11", f.covariance(0, 0), f.predicted(0, 0));
      emit(N, "cov12", f.covariance(0, 1), f.predicted(0, 1));
      emit(N, "cov22", f.covariance(1, 1), f.predicted(1, 1));
    }
  }
  return 0;
}

int cmd_verify(const Options& o) {
  const auto results = run_full_acceptance(std::max(1, o.threads));
  const std::string report = render(results);
  std::cout << report;
  if (!o.out.empty()) {
    std::ofstream f(out_path(o, "verify.txt"));
    f << report;
  }
  for (const auto& r : results)
    if (!r.passed) return 1;
  return 0;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "JSON experiment config");
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--tol", o.tol, "cross-check tolerance");
}

void add_model(CLI::App* sub, Options& o) {
  sub->add_option("--nu", o.nu, "number of parties");
  sub->add_option("--alpha", o.alpha, "party sizes, comma separated")->delimiter(',');
  sub->add_option("--field", o.h, "fields h_a, comma separated")->delimiter(',');
  sub->add_option("--beta", o.beta, "inverse temperature");
  sub->add_option("--family", o.family, "spin law for every party: rademacher | uniform");
}

void add_h2_grid(CLI::App* sub, Options& o) {
  sub->add_option("--h2-min", o.h2_min);
  sub->add_option("--h2-max", o.h2_max);
  sub->add_option("--h2-samples", o.h2_samples);
  sub->add_option("--samples", o.samples, "root-scan samples on the M1 axis");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-party mean-field ferromagnets"};
  app.require_subcommand(1);
  Options o;

  auto* beta_c = app.add_subcommand("beta-c", "critical inverse temperature and kernel direction");
  add_common(beta_c, o);
  add_model(beta_c, o);
  beta_c->add_flag("--surface", o.surface, "tripartite beta_c over an (alpha1, alpha2) grid");
  beta_c->add_option("--grid", o.grid, "grid divisions for --surface");

  auto* solve = app.add_subcommand("solve", "all stationary points with stability labels");
  add_common(solve, o);
  add_model(solve, o);

  auto* pressure = app.add_subcommand("pressure", "variational pressure and cross-checks");
  add_common(pressure, o);
  add_model(pressure, o);
  pressure->add_option("--c", o.c, "counterterm constant, >= nu - 1");

  auto* phase = app.add_subcommand("phase-diagram", "critical lines, regimes and line intersections");
  add_common(phase, o);
  add_model(phase, o);
  add_h2_grid(phase, o);
  phase->add_option("--grid", o.grid, "starts per axis for the intersection search");

  auto* land = app.add_subcommand("landscape", "marginal pressure profiles along line 1");
  add_common(land, o);
  add_model(land, o);
  add_h2_grid(land, o);
  land->add_option("--h2", o.h2_list, "explicit h2 values, comma separated")->delimiter(',');
  land->add_option("--profile-samples", o.profile_samples)->check(CLI::Range(3, 1000000));

  auto* fields = app.add_subcommand("critical-fields", "h_c1 < h_c2 < h_c3 and the first-order jump");
  add_common(fields, o);
  add_model(fields, o);
  fields->add_option("--samples", o.samples);

  auto* fluct = app.add_subcommand("fluctuations", "exact finite-N fluctuation statistics");
  add_common(fluct, o);
  add_model(fluct, o);
  fluct->add_option("--N", o.sizes, "total sizes, comma separated")->delimiter(',');
  fluct->add_flag("--critical", o.critical, "set beta to beta_c and report critical statistics");
  fluct->add_flag("--generalised", o.generalised, "one party with quadratic energy, party-1 spin law");

  auto* verify = app.add_subcommand("verify", "run the acceptance battery");
  verify->add_option("--out", o.out, "output directory");
  verify->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (beta_c->parsed()) return cmd_beta_c(o);
    if (solve->parsed()) return cmd_solve(o);
    if (pressure->parsed()) return cmd_pressure(o);
    if (phase->parsed()) return cmd_phase_diagram(o);
    if (land->parsed()) return cmd_landscape(o);
    if (fields->parsed()) return cmd_critical_fields(o);
    if (fluct->parsed()) return cmd_fluctuations(o);
    if (verify->parsed()) return cmd_verify(o);
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << " (residual " << fmt(e.residual()) << ")\n";
    return 3;
  } catch (const std::logic_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
