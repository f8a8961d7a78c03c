#pragma once

// One-party ferromagnets with Hamiltonian -N u(m) for a convex, even energy u.
// Pressure by the 1-D maximum principle
//   A(beta, h) = max_M [beta (u(M) - u'(M) M) + phi(beta u'(M) + h)],
// susceptibility, and Laplace-conjugate measures for the constructive case
// exp(beta u(x)) = E[exp(x S)] with S a sum of n i.i.d. spins.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mpferro/roots.hpp"
#include "mpferro/spins.hpp"

namespace mpferro {

enum class EnergyKind { quadratic, scaled_cgf };

/// u(x) = k x^2 / 2, or u(x) = prefactor * phi_family(scale * x).
class EnergyFunction {
 public:
  static EnergyFunction quadratic(double curvature = 1.0) {
    if (!(curvature > 0)) throw ConfigError("quadratic energy: curvature must be > 0");
    EnergyFunction u(EnergyKind::quadratic, SpinFamily::rademacher());
    u.prefactor_ = curvature;
    return u;
  }

  static EnergyFunction scaled_cgf(SpinFamily family, double prefactor, double scale) {
    if (!(prefactor > 0) || !(scale > 0)) throw ConfigError("scaled_cgf energy: prefactor and scale must be > 0");
    EnergyFunction u(EnergyKind::scaled_cgf, std::move(family));
    u.prefactor_ = prefactor;
    u.scale_ = scale;
    return u;
  }

  /// u(x) = phi_family(x): the energy seen by one party after summing out the other.
  static EnergyFunction duality(SpinFamily family) { return scaled_cgf(std::move(family), 1.0, 1.0); }

  EnergyKind kind() const { return kind_; }
  const SpinFamily& family() const { return family_; }
  double prefactor() const { return prefactor_; }
  double scale() const { return scale_; }

  CgfEval eval(double x, int order = 4) const {
    if (kind_ == EnergyKind::quadratic) {
      const double k = prefactor_;
      return {0.5 * k * x * x, order >= 1 ? k * x : 0.0, order >= 2 ? k : 0.0, 0.0, 0.0};
    }
    const CgfEval p = cgf(family_, scale_ * x, order);
    double s = 1.0;
    CgfEval out;
    out.value = prefactor_ * p.value;
    s *= scale_;
    out.d1 = prefactor_ * s * p.d1;
    s *= scale_;
    out.d2 = prefactor_ * s * p.d2;
    s *= scale_;
    out.d3 = prefactor_ * s * p.d3;
    s *= scale_;
    out.d4 = prefactor_ * s * p.d4;
    return out;
  }

  double curvature_at_zero() const { return eval(0.0, 2).d2; }

 private:
  EnergyFunction(EnergyKind kind, SpinFamily family) : kind_(kind), family_(std::move(family)) {}

  EnergyKind kind_;
  SpinFamily family_;
  double prefactor_ = 1.0;
  double scale_ = 1.0;
};

/// beta_c = 1 / u''(0).
inline double gf_critical_beta(const EnergyFunction& u) {
  const double k = u.curvature_at_zero();
  if (!(k > 0)) throw std::domain_error("gf_critical_beta: u''(0) must be positive");
  return 1.0 / k;
}

/// The trial pressure beta (u(M) - u'(M) M) + phi(beta u'(M) + h).
inline double gf_trial_pressure(const EnergyFunction& u, const SpinFamily& family, double beta,
                                double h, double M) {
  const CgfEval e = u.eval(M, 1);
  return beta * (e.value - e.d1 * M) + cgf(family, beta * e.d1 + h, 0).value;
}

/// Residual of M = phi'(beta u'(M) + h).
inline double gf_self_consistency(const EnergyFunction& u, const SpinFamily& family, double beta,
                                  double h, double M) {
  return cgf(family, beta * u.eval(M, 1).d1 + h, 1).d1 - M;
}

/// Every root of M = phi'(beta u'(M) + h) inside the spin hull, ascending.
inline std::vector<double> gf_stationary_points(const EnergyFunction& u, const SpinFamily& family,
                                                double beta, double h, int samples = 2001) {
  auto r = [&](double M) { return gf_self_consistency(u, family, beta, h, M); };
  return scan_roots(r, family.hull_min(), family.hull_max(), samples);
}

struct GfState {
  double pressure = 0;
  double magnetisation = 0;
  bool symmetric_pair = false;  ///< h = 0 above beta_c: -M is an equally good state
};

/// Pressure and equilibrium magnetisation. For h = 0 above beta_c the
/// positive branch is returned and `symmetric_pair` is set.
inline GfState gf_pressure(const EnergyFunction& u, const SpinFamily& family, double beta, double h) {
  if (!(beta >= 0) || !std::isfinite(h)) throw std::domain_error("gf_pressure: need beta >= 0, finite h");
  const double sign = h < 0 ? -1.0 : 1.0;
  const double ha = std::abs(h);
  auto fdf = [&](double M) {
    const CgfEval e = u.eval(M, 2);
    const CgfEval p = cgf(family, beta * e.d1 + ha, 2);
    return std::make_pair(p.d1 - M, p.d2 * beta * e.d2 - 1.0);
  };
  const double top = family.hull_max();
  GfState out;
  double M = 0.0;
  if (ha > 0) {
    M = safeguarded_newton(fdf, 0.0, top, 0.5 * top);
  } else if (beta * u.curvature_at_zero() > 1.0) {
    double lo = 0.5 * top;
    while (fdf(lo).first <= 0) {
      lo *= 0.5;
      if (lo < 1e-300) break;
    }
    if (lo >= 1e-300) {
      M = safeguarded_newton(fdf, lo, top, lo);
      out.symmetric_pair = true;
    }
  }
  out.magnetisation = sign * M;
  out.pressure = gf_trial_pressure(u, family, beta, h, out.magnetisation);
  return out;
}

/// chi = V / (1 - beta u''(M) V), V the tilted spin variance at the equilibrium M.
inline double gf_susceptibility(const EnergyFunction& u, const SpinFamily& family, double beta, double h) {
  const GfState s = gf_pressure(u, family, beta, h);
  const CgfEval e = u.eval(s.magnetisation, 2);
  const double v = cgf(family, beta * e.d1 + h, 2).d2;
  const double denom = 1.0 - beta * e.d2 * v;
  if (denom < 1e-12) throw std::domain_error("gf_susceptibility: divergent at the critical point");
  return v / denom;
}

struct ConjugateMeasure {
  int n = 0;   ///< spins per conjugate variable
  long N = 0;  ///< number of conjugate variables summed in X_N
  std::vector<double> support;   ///< law nu of one conjugate variable xi
  std::vector<double> weights;
  std::vector<double> rescaled_support;  ///< law mu_N of X_N = N^{-1/2} sum xi_i
  std::vector<double> rescaled_weights;
};

namespace detail {

inline void merge_atoms(std::vector<std::pair<double, double>>& atoms) {
  std::sort(atoms.begin(), atoms.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& [x, w] : atoms) {
    if (!merged.empty() && std::abs(merged.back().first - x) <= 1e-12 * std::max(1.0, std::abs(x)))
      merged.back().second += w;
    else
      merged.emplace_back(x, w);
  }
  atoms.swap(merged);
}

inline std::vector<std::pair<double, double>> convolve(const std::vector<std::pair<double, double>>& a,
                                                       const std::vector<std::pair<double, double>>& b) {
  std::vector<std::pair<double, double>> out;
  out.reserve(a.size() * b.size());
  for (const auto& [x, w] : a)
    for (const auto& [y, v] : b) out.emplace_back(x + y, w * v);
  merge_atoms(out);
  return out;
}

}  // namespace detail

/// Laplace-conjugate law of exp(beta u) when beta u = n phi_family, n a
/// positive integer; other energies need Bernstein inversion, which is not
/// provided.
inline ConjugateMeasure conjugate_measure(const EnergyFunction& u, double beta, long N) {
  if (u.kind() != EnergyKind::scaled_cgf || u.scale() != 1.0 || !u.family().finite_support())
    throw std::domain_error("conjugate_measure: only beta*u = n*phi for a finite-support spin law is "
                            "constructive; general Bernstein inversion is out of scope");
  const double nd = beta * u.prefactor();
  const long n = std::lround(nd);
  if (n < 1 || std::abs(nd - n) > 1e-9)
    throw std::domain_error("conjugate_measure: beta*prefactor is not a positive integer; general "
                            "Bernstein inversion is out of scope");
  if (N < 1) throw std::invalid_argument("conjugate_measure: N must be >= 1");

  std::vector<std::pair<double, double>> spin;
  for (std::size_t i = 0; i < u.family().support().size(); ++i)
    if (u.family().weights()[i] > 0) spin.emplace_back(u.family().support()[i], u.family().weights()[i]);
  detail::merge_atoms(spin);

  auto xi = spin;
  for (long k = 1; k < n; ++k) xi = detail::convolve(xi, spin);
  auto sum = xi;
  for (long k = 1; k < N; ++k) sum = detail::convolve(sum, xi);

  ConjugateMeasure m;
  m.n = static_cast<int>(n);
  m.N = N;
  for (const auto& [x, w] : xi) {
    m.support.push_back(x);
    m.weights.push_back(w);
  }
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(N));
  for (const auto& [x, w] : sum) {
    m.rescaled_support.push_back(x * inv_sqrt);
    m.rescaled_weights.push_back(w);
  }
  return m;
}

/// log sum_i w_i exp(x y_i).
inline double log_laplace(const std::vector<double>& support, const std::vector<double>& weights, double x) {
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < support.size(); ++i)
    if (weights[i] > 0) shift = std::max(shift, x * support[i]);
  double s = 0;
  for (std::size_t i = 0; i < support.size(); ++i)
    if (weights[i] > 0) s += weights[i] * std::exp(x * support[i] - shift);
  return shift + std::log(s);
}

/// P_4^u: fourth derivative at 0 of log of the Laplace transform of the
/// conjugate law, i.e. of beta u. Zero for quadratic u.
inline double quartic_cumulant_u(const EnergyFunction& u, double beta) {
  return beta * u.eval(0.0, 4).d4;
}

}  // namespace mpferro
