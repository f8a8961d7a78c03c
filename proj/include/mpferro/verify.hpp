#pragma once

// The acceptance battery. Each check returns a pass flag and a detail line
// built only from computed numbers, so the rendered report is reproducible
// byte for byte; wall-clock budgets affect the flag but are never printed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mpferro/bipartite.hpp"
#include "mpferro/criticality.hpp"
#include "mpferro/exactfinite.hpp"
#include "mpferro/genferro.hpp"
#include "mpferro/model.hpp"
#include "mpferro/solver.hpp"

namespace mpferro {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace detail {

inline std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

inline std::string fixed(double x, int digits = 6) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline CriterionResult make_result(int id, std::string name, bool passed, std::string detail) {
  return {id, std::move(name), passed, std::move(detail)};
}

}  // namespace detail

inline CriterionResult check_critical_temperatures() {
  detail::Stopwatch clock;
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> ud(0.02, 0.98);
  double worst = 0;
  for (int i = 0; i < 50; ++i) {
    const double a = ud(rng);
    const double bc = critical_beta(bipartite_rademacher(a, 1.0)).beta_c;
    worst = std::max(worst, std::abs(bc - 1.0 / std::sqrt(a * (1.0 - a))));
  }
  const CriticalReport tri = critical_beta(equal_rademacher(3, 1.0));
  const double tri_err = std::abs(tri.beta_c - 1.5);
  const double tri_det = std::abs(det_direct(equal_rademacher(3, 1.0), tri.beta_c));
  const bool fast = clock.seconds() < 1.0;
  const bool ok = worst < 1e-10 && tri_err < 1e-12 && tri.det_residual < 1e-12 && tri_det < 1e-12 && fast;
  return detail::make_result(1, "critical temperatures", ok,
                             "bipartite max err " + detail::sci(worst) + ", tripartite beta_c " +
                                 detail::fixed(tri.beta_c, 12) + " det residual " +
                                 detail::sci(std::max(tri.det_residual, tri_det)) + (fast ? "" : ", over 1 s budget"));
}

inline CriterionResult check_interaction_factorisation() {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> nu_d(2, 5);
  std::uniform_real_distribution<double> ud(0.05, 1.0), extra(0.0, 3.0);
  double worst_factor = 0, worst_spec = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int nu = nu_d(rng);
    ModelSpec s = equal_rademacher(nu, 1.0);
    double total = 0;
    for (auto& a : s.alpha) total += (a = ud(rng));
    for (auto& a : s.alpha) a /= total;
    double rest = 1.0;
    for (int a = 0; a + 1 < nu; ++a) rest -= s.alpha[a];
    s.alpha.back() = rest;
    const double c = nu - 1.0 + (trial % 10 == 0 ? 0.0 : extra(rng));
    const auto d = interaction_matrices(s, c);
    const Matrix diff = d.P.transpose() * d.P - d.Jc;
    worst_factor = std::max(worst_factor, diff.cwiseAbs().rowwise().sum().maxCoeff());
    worst_spec = std::max(worst_spec, std::abs(d.tc_eigenvalues[0] - (c + 1 - nu)));
    for (int k = 1; k < nu; ++k) worst_spec = std::max(worst_spec, std::abs(d.tc_eigenvalues[k] - (c + 1)));
  }
  const bool ok = worst_factor < 1e-12 && worst_spec < 1e-10;
  return detail::make_result(2, "interaction factorisation", ok,
                             "max |P^T P - Jc|_inf " + detail::sci(worst_factor) + ", max spectrum err " +
                                 detail::sci(worst_spec));
}

inline CriterionResult check_pressure_equivalences(int threads) {
  std::mt19937_64 rng(31337);
  std::uniform_real_distribution<double> beta_d(0.3, 3.5), field_d(-0.3, 0.3);
  std::uniform_int_distribution<int> k2(50, 200), k3(40, 120);
  const std::vector<long> sizes{250, 500, 1000, 2000};
  StartGrid grid;
  grid.threads = threads;
  double worst_route = 0, worst_c = 0, worst_limit = 0;
  int monotone_breaks = 0;
  for (int i = 0; i < 20; ++i) {
    const int nu = i % 2 == 0 ? 2 : 3;
    ModelSpec s = equal_rademacher(nu, beta_d(rng));
    if (nu == 2) {
      const int k = k2(rng);
      s.alpha = {k / 250.0, (250 - k) / 250.0};
    } else {
      const int a = k3(rng), b = k3(rng);
      s.alpha = {a / 250.0, b / 250.0, (250 - a - b) / 250.0};
    }
    if (i % 4 >= 2)
      for (auto& h : s.h) h = field_d(rng);
    s.validate();

    const VariationalResult var = pressure_variational(s, nu, grid);
    const double A = var.pressure;
    const auto pts = solve_self_consistency(s, grid);
    worst_route = std::max(worst_route, std::abs(pressure_energy_entropy(s, var.m) - A));
    worst_route = std::max(worst_route, std::abs(entropic_pressure(s, pts) - A));
    if (nu == 2) worst_route = std::max(worst_route, std::abs(marginal_optimum(s).pressure - A));
    for (double c : {nu - 1.0 + 0.1, 2.0 * nu})
      worst_c = std::max(worst_c, std::abs(pressure_variational(s, c, grid).pressure - A));

    const SumRoute route = nu == 2 ? SumRoute::joint : SumRoute::marginal;
    double prev = std::numeric_limits<double>::infinity();
    for (long N : sizes) {
      std::vector<long> Ns;
      for (double a : s.alpha) Ns.push_back(std::lround(a * N));
      const double AN = exact_logZ(s, Ns, route, threads);
      if (AN > prev) ++monotone_breaks;
      prev = AN;
      if (N == sizes.back()) worst_limit = std::max(worst_limit, std::abs(AN - A));
    }
  }
  const bool ok = worst_route < 1e-8 && worst_c < 1e-8 && worst_limit < 0.01 && monotone_breaks == 0;
  return detail::make_result(3, "pressure equivalences", ok,
                             "max route gap " + detail::sci(worst_route) + ", max c gap " + detail::sci(worst_c) +
                                 ", max |A_2000 - A| " + detail::sci(worst_limit) + ", monotonicity breaks " +
                                 std::to_string(monotone_breaks));
}

inline CriterionResult check_pitchfork_scaling() {
  detail::Stopwatch clock;
  const ScalingFit eq = scaling_fit(bipartite_rademacher(0.5, 1.0), 1e-4, 1e-2, 9);
  const ScalingFit un = scaling_fit(bipartite_rademacher(0.3, 1.0), 1e-4, 1e-2, 9);
  const double kappa_rel = std::abs(eq.kappa * 24.0 - 1.0);
  const bool fast = clock.seconds() < 10.0;
  bool ok = fast && kappa_rel < 0.02;
  for (const ScalingFit* f : {&eq, &un})
    ok = ok && std::abs(f->exponent - 0.5) <= 0.02 && f->direction_error < 1e-3;
  return detail::make_result(4, "pitchfork scaling", ok,
                             "exponents " + detail::fixed(eq.exponent) + " / " + detail::fixed(un.exponent) +
                                 ", direction errors " + detail::sci(eq.direction_error) + " / " +
                                 detail::sci(un.direction_error) + ", kappa " + detail::fixed(eq.kappa, 8) +
                                 " (rel err vs 1/24 " + detail::sci(kappa_rel) + ")" +
                                 (fast ? "" : ", over 10 s budget"));
}

inline CriterionResult check_fluctuations(int threads) {
  const ModelSpec s = bipartite_rademacher(0.5, 1.0);
  const FluctuationStats a = fluct_covariance(s, {800, 800}, threads);
  const FluctuationStats b = fluct_covariance(s, {1600, 1600}, threads);
  const double da = (a.covariance - a.predicted).cwiseAbs().maxCoeff();
  const double db = (b.covariance - b.predicted).cwiseAbs().maxCoeff();
  const double ratio = da / db;
  const bool ok = a.max_rel_deviation < 0.05 && ratio >= 1.6 && ratio <= 2.4;
  return detail::make_result(5, "paramagnetic fluctuations", ok,
                             "cov(800) = [" + detail::fixed(a.covariance(0, 0)) + ", " +
                                 detail::fixed(a.covariance(0, 1)) + "; " + detail::fixed(a.covariance(1, 1)) +
                                 "], max rel dev " + detail::sci(a.max_rel_deviation) + ", deviation ratio " +
                                 detail::fixed(ratio, 4));
}

inline CriterionResult check_critical_fluctuations(int threads) {
  const ModelSpec s = bipartite_rademacher(0.5, 2.0);
  const FluctuationStats big = critical_fluct_stats(s, {1600, 1600}, threads);
  const FluctuationStats small = critical_fluct_stats(s, {400, 400}, threads);
  const double kurt_rel = std::abs(big.kurtosis_ratio / big.kurtosis_predicted - 1.0);
  const double growth = big.var_w_sqrt / small.var_w_sqrt;
  const bool ok = kurt_rel < 0.10 && big.var_perp_quarter < 0.05 && growth > 3.0;
  return detail::make_result(6, "critical fluctuations", ok,
                             "kurtosis " + detail::fixed(big.kurtosis_ratio, 4) + " vs " +
                                 detail::fixed(big.kurtosis_predicted, 4) + ", perp variance " +
                                 detail::fixed(big.var_perp_quarter, 4) + ", sqrt-N variance ratio " +
                                 detail::fixed(growth, 4) + " (needs > 3)");
}

inline CriterionResult check_generalised_ferromagnet() {
  const EnergyFunction quad = EnergyFunction::quadratic(1.0);
  const GfFluctStats g = gf_fluct_check(quad, SpinFamily::rademacher(), 0.5, 2000);
  const double chi_rel = std::abs(g.variance / g.chi - 1.0);

  // cosh(x)^2 = E exp(x S), S a sum of two +-1 spins; the rescaled law of
  // N conjugate variables must reproduce N beta u(x / sqrt N).
  const EnergyFunction u2 = EnergyFunction::scaled_cgf(SpinFamily::rademacher(), 2.0, 1.0);
  const ConjugateMeasure cm = conjugate_measure(u2, 1.0, 3);
  double laplace = 0;
  for (int x = -2; x <= 2; ++x) {
    laplace = std::max(laplace, std::abs(log_laplace(cm.support, cm.weights, x) - u2.eval(x, 0).value));
    const double rx = x / std::sqrt(3.0);
    laplace = std::max(laplace, std::abs(log_laplace(cm.rescaled_support, cm.rescaled_weights, x) -
                                         3.0 * u2.eval(rx, 0).value));
  }

  // P_4 of the party-1 marginal energy: exact identity, cross-checked
  // against the fourth cumulant of the conjugate law when it is constructive.
  double p4_exact = 0, p4_cross = 0;
  for (double a : {0.5, 1.0 / 3.0, 0.25}) {
    const ModelSpec s = bipartite_rademacher(a, 1.0);
    const DualEnergy d = dual_energy(s);
    const double p4u = quartic_cumulant_u(d.u1, d.beta_eff1);
    const double target = (1.0 - a) / a * cumulant(s.families[1], 4);
    p4_exact = std::max(p4_exact, std::abs(p4u - target));
    const ConjugateMeasure c = conjugate_measure(d.u1, d.beta_eff1, 1);
    double m2 = 0, m4 = 0;
    for (std::size_t i = 0; i < c.support.size(); ++i) {
      m2 += c.weights[i] * std::pow(c.support[i], 2);
      m4 += c.weights[i] * std::pow(c.support[i], 4);
    }
    p4_cross = std::max(p4_cross, std::abs((m4 - 3 * m2 * m2) - p4u));
  }
  const bool ok = chi_rel < 0.05 && laplace < 1e-10 && p4_exact == 0.0 && p4_cross < 1e-10;
  return detail::make_result(7, "generalised ferromagnet", ok,
                             "N Var(m) " + detail::fixed(g.variance, 5) + " vs chi " + detail::fixed(g.chi, 5) +
                                 ", Laplace residual " + detail::sci(laplace) + ", P4^u identity gap " +
                                 detail::sci(p4_exact) + ", conjugate cumulant gap " + detail::sci(p4_cross));
}

inline CriterionResult check_phase_diagram() {
  detail::Stopwatch clock;
  const ModelSpec s = bipartite_rademacher(0.5, 4.0);
  const auto cf = critical_fields(s);
  if (!cf) return detail::make_result(8, "phase diagram", false, "critical fields not found");
  const double hc1_err = std::abs(cf->h_c1 - std::acosh(2.0) / 4.0);
  const double hc2_gap = std::abs(cf->h_c2 - cf->h_c2_crossing);
  const bool ordered = 0 < cf->h_c1 && cf->h_c1 < cf->h_c2 && cf->h_c2 < cf->h_c3;

  const int samples = 300;
  std::vector<Regime> seq;
  for (int i = 1; i <= samples; ++i) {
    const Regime r = landscape_scan(s, 1.5 * cf->h_c3 * i / samples).regime;
    if (seq.empty() || seq.back() != r) seq.push_back(r);
  }
  std::string seq_text;
  for (Regime r : seq) seq_text += (seq_text.empty() ? "" : ">") + to_string(r);
  const bool seq_ok = seq == std::vector<Regime>{Regime::R3, Regime::R2, Regime::R1, Regime::R0};

  const auto jump = first_order_jump(s);
  const bool flips = jump && jump->m2_before * jump->m2_after < 0;
  const bool fast = clock.seconds() < 60.0;
  const bool ok = ordered && hc1_err < 1e-9 && hc2_gap < 1e-6 && seq_ok && flips && fast;
  return detail::make_result(8, "phase diagram", ok,
                             "h_c = " + detail::fixed(cf->h_c1, 9) + " < " + detail::fixed(cf->h_c2, 9) + " < " +
                                 detail::fixed(cf->h_c3, 9) + ", h_c1 err " + detail::sci(hc1_err) +
                                 ", h_c2 route gap " + detail::sci(hc2_gap) + ", regimes " + seq_text +
                                 ", M2 " + (jump ? detail::sci(jump->m2_before) + " -> " + detail::sci(jump->m2_after) : "no jump") +
                                 (fast ? "" : ", over 60 s budget"));
}

inline CriterionResult check_high_temperature_control(int threads) {
  const ModelSpec s = bipartite_rademacher(0.5, 1.0);
  const auto hits = coupled_line_intersections(s, 400, threads);
  double far = 0;
  for (const auto& [h1, h2] : hits) far = std::max(far, std::hypot(h1, h2));
  int bad = 0;
  for (int i = 0; i <= 40; ++i) {
    const LandscapeReport r = landscape_scan(s, -1.0 + 2.0 * i / 40.0);
    int minima = 0;
    bool at_zero = false;
    for (const auto& p : r.points)
      if (p.label != PointLabel::max) {
        ++minima;
        at_zero = std::abs(p.m1) < 1e-9;
      }
    if (r.regime != Regime::R0 || minima != 1 || !at_zero) ++bad;
  }
  const bool ok = !hits.empty() && far <= 1e-6 && bad == 0;
  return detail::make_result(9, "high-temperature control", ok,
                             std::to_string(hits.size()) + " intersection(s), farthest " + detail::sci(far) +
                                 ", landscapes off R0 " + std::to_string(bad) + "/41");
}

/// Criteria 1-9 with the given worker count.
inline std::vector<CriterionResult> run_acceptance(int threads = 1) {
  std::vector<std::function<CriterionResult()>> checks{
      [] { return check_critical_temperatures(); },
      [] { return check_interaction_factorisation(); },
      [&] { return check_pressure_equivalences(threads); },
      [] { return check_pitchfork_scaling(); },
      [&] { return check_fluctuations(threads); },
      [&] { return check_critical_fluctuations(threads); },
      [] { return check_generalised_ferromagnet(); },
      [] { return check_phase_diagram(); },
      [&] { return check_high_temperature_control(threads); },
  };
  std::vector<CriterionResult> out;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    try {
      out.push_back(checks[i]());
    } catch (const std::exception& e) {
      out.push_back(detail::make_result(static_cast<int>(i) + 1, "criterion " + std::to_string(i + 1), false,
                                        std::string("threw: ") + e.what()));
    }
  }
  return out;
}

inline std::string render(const std::vector<CriterionResult>& results) {
  std::ostringstream os;
  for (const auto& r : results)
    os << (r.passed ? "PASS" : "FAIL") << " [" << r.id << "] " << r.name << ": " << r.detail << "\n";
  return os.str();
}

/// Criterion 10: the rendered report of 1-9 is identical at every worker count.
inline CriterionResult check_determinism(const std::string& reference, int reference_threads,
                                         const std::vector<int>& thread_counts) {
  std::set<int> all(thread_counts.begin(), thread_counts.end());
  all.insert(reference_threads);
  std::string counts, differing;
  for (int t : all) {
    counts += (counts.empty() ? "" : ",") + std::to_string(t);
    if (t != reference_threads && render(run_acceptance(t)) != reference)
      differing += (differing.empty() ? "" : ",") + std::to_string(t);
  }
  return detail::make_result(10, "determinism", differing.empty(),
                             differing.empty() ? "report identical at threads " + counts
                                               : "report differs at threads " + differing);
}

/// The full battery: 1-9 at `threads` workers, then criterion 10 against 1, 4 and 8.
inline std::vector<CriterionResult> run_full_acceptance(int threads = 1) {
  auto results = run_acceptance(threads);
  results.push_back(check_determinism(render(results), threads, {1, 4, 8}));
  return results;
}

}  // namespace mpferro
