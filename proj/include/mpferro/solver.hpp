#pragma once

// Stationary magnetisations and the limiting pressure, computed three ways:
// the energy-entropy value at a stationary point, the entropic functional
// maximised over the stationary set, and the saddle points of the
// interpolation Lagrangian in the rotated variables m' = P m.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mpferro/bipartite.hpp"
#include "mpferro/criticality.hpp"
#include "mpferro/errors.hpp"
#include "mpferro/genferro.hpp"
#include "mpferro/model.hpp"
#include "mpferro/parallel.hpp"
#include "mpferro/selfcons.hpp"
#include "mpferro/spins.hpp"

namespace mpferro {

enum class Stability { stable, metastable, unstable };

inline std::string to_string(Stability s) {
  switch (s) {
    case Stability::stable: return "stable";
    case Stability::metastable: return "metastable";
    case Stability::unstable: return "unstable";
  }
  return "unstable";
}

struct StationaryPoint {
  Vector m;
  double pressure = 0;
  Stability stability = Stability::unstable;
  double residual = 0;
};

struct StartGrid {
  int points_per_axis = 3;  ///< per-party grid over the hull, corners and centre included
  bool kernel_seeds = true;
  int threads = 1;
};

/// -beta sum_{a<b} alpha_a alpha_b m_a m_b + sum_a alpha_a phi_a(local field).
inline double pressure_energy_entropy(const ModelSpec& spec, const Vector& m) {
  const Vector t = local_fields(spec, m);
  double pair = 0, ent = 0;
  for (int a = 0; a < spec.nu(); ++a) {
    ent += spec.alpha[a] * cgf(spec.families[a], t[a], 0).value;
    for (int b = a + 1; b < spec.nu(); ++b) pair += spec.alpha[a] * spec.alpha[b] * m[a] * m[b];
  }
  return -spec.beta * pair + ent;
}

/// S(M) = -sup_t (t M - phi(t)). At a hull endpoint, the log of that atom's
/// weight (finite support) or -inf (uniform).
inline double entropy_rate(const SpinFamily& family, double M) {
  const double lo = family.hull_min(), hi = family.hull_max();
  const double slack = 1e-14 * std::max(1.0, hi);
  if (M < lo - slack || M > hi + slack) throw std::domain_error("entropy_rate: M outside the spin hull");
  if (M >= hi - slack || M <= lo + slack) {
    if (!family.finite_support()) return -std::numeric_limits<double>::infinity();
    const double edge = M > 0 ? hi : lo;
    double w = 0;
    for (std::size_t i = 0; i < family.support().size(); ++i)
      if (family.support()[i] == edge) w += family.weights()[i];
    return std::log(w);
  }
  if (family.kind() == SpinKind::rademacher) {
    // Closed form keeps full precision near the edges.
    const double p = 0.5 * (1 + M), q = 0.5 * (1 - M);
    return -(p * std::log1p(M) + q * std::log1p(-M));
  }
  const double t = cgf_derivative_inverse(family, M);
  return -(t * M - cgf(family, t, 0).value);
}

/// beta sum_{a<b} alpha_a alpha_b M_a M_b + beta sum alpha_a h_a M_a + sum alpha_a S_a(M_a).
inline double entropic_functional(const ModelSpec& spec, const Vector& M) {
  double pair = 0, field = 0, ent = 0;
  for (int a = 0; a < spec.nu(); ++a) {
    field += spec.alpha[a] * spec.h[a] * M[a];
    ent += spec.alpha[a] * entropy_rate(spec.families[a], M[a]);
    for (int b = a + 1; b < spec.nu(); ++b) pair += spec.alpha[a] * spec.alpha[b] * M[a] * M[b];
  }
  return spec.beta * pair + spec.beta * field + ent;
}

/// True when m is a local maximum of the pressure landscape: for nu = 2 the
/// marginal A_1 curves down at m_1; otherwise every eigenvalue of I - beta M
/// is positive (I - beta M is similar to a symmetric matrix, so they are real).
inline bool locally_stable(const ModelSpec& spec, const Vector& m) {
  if (spec.nu() == 2) return Bipartite::from(spec).d2A1(m[0]) < 0;
  const Eigen::EigenSolver<Matrix> es(self_consistency_jacobian(spec, m), false);
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    if (!(es.eigenvalues()[i].real() > 0)) return false;
  return true;
}

/// Label m against the best pressure over the known stationary set.
inline Stability classify_stationary(const ModelSpec& spec, const Vector& m, double best_pressure,
                                     double tol = 1e-8) {
  const double res = self_consistency_residual(spec, m).lpNorm<Eigen::Infinity>();
  if (!(res < tol)) throw std::invalid_argument("classify_stationary: residual " + std::to_string(res) + " too large");
  if (!locally_stable(spec, m)) return Stability::unstable;
  return pressure_energy_entropy(spec, m) >= best_pressure - 1e-10 ? Stability::stable : Stability::metastable;
}

/// Multi-start seeds: the per-party grid, +-w sqrt(beta - beta_c) above
/// beta_c, and for two parties every root of the exact 1-D reduction.
inline std::vector<Vector> start_points(const ModelSpec& spec, const StartGrid& grid) {
  if (grid.points_per_axis < 1) throw ConfigError("start grid: points_per_axis must be >= 1");
  const int n = spec.nu();
  std::vector<Vector> starts;
  const int p = grid.points_per_axis;
  long total = 1;
  for (int a = 0; a < n; ++a) total *= p;
  for (long idx = 0; idx < total; ++idx) {
    Vector m(n);
    long r = idx;
    for (int a = 0; a < n; ++a) {
      const int k = static_cast<int>(r % p);
      r /= p;
      const auto& f = spec.families[a];
      m[a] = p == 1 ? 0.0 : f.hull_min() + (f.hull_max() - f.hull_min()) * k / (p - 1.0);
    }
    starts.push_back(m);
  }
  if (grid.kernel_seeds) {
    const CriticalReport cr = critical_beta(spec);
    if (spec.beta > cr.beta_c) {
      const double s = std::sqrt(spec.beta - cr.beta_c);
      starts.push_back(cr.kernel * s);
      starts.push_back(-cr.kernel * s);
    }
  }
  if (n == 2) {
    const Bipartite b = Bipartite::from(spec);
    for (double M : b.stationary_m1()) {
      Vector m(2);
      m << M, b.induced_m2(M);
      starts.push_back(m);
    }
  }
  return starts;
}

namespace detail {

inline bool lex_less(const Vector& a, const Vector& b) {
  for (int i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return a[i] < b[i];
  return false;
}

inline std::vector<Vector> dedupe(std::vector<Vector> pts, double radius) {
  std::sort(pts.begin(), pts.end(), lex_less);
  std::vector<Vector> out;
  for (const auto& p : pts) {
    bool dup = false;
    for (const auto& q : out)
      if ((p - q).lpNorm<Eigen::Infinity>() <= radius) {
        dup = true;
        break;
      }
    if (!dup) out.push_back(p);
  }
  return out;
}

}  // namespace detail

/// Distinct solutions of m = phi'(beta h + beta K m), sorted lexicographically and labelled.
inline std::vector<StationaryPoint> solve_self_consistency(const ModelSpec& spec, const StartGrid& grid = {}) {
  spec.validate();
  const auto starts = start_points(spec, grid);
  std::vector<std::optional<Vector>> slots(starts.size());
  parallel_for(starts.size(), grid.threads, [&](std::size_t i) {
    const NewtonOutcome out = newton_self_consistency(spec, starts[i]);
    if (out.converged) slots[i] = out.m;
  });
  std::vector<Vector> found;
  for (const auto& s : slots)
    if (s) found.push_back(*s);
  // Snap numerically-zero components so +-0 and 1e-17 collapse before sorting.
  for (auto& m : found)
    for (int a = 0; a < m.size(); ++a)
      if (std::abs(m[a]) < 1e-13) m[a] = 0.0;
  found = detail::dedupe(found, 1e-6);

  std::vector<StationaryPoint> pts;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& m : found) {
    StationaryPoint p;
    p.m = m;
    p.pressure = pressure_energy_entropy(spec, m);
    p.residual = self_consistency_residual(spec, m).lpNorm<Eigen::Infinity>();
    pts.push_back(p);
    if (locally_stable(spec, m)) best = std::max(best, p.pressure);
  }
  for (auto& p : pts) p.stability = classify_stationary(spec, p.m, best);
  return pts;
}

/// Overload for a single point: solves the full set to know the best pressure.
inline Stability classify_stationary(const ModelSpec& spec, const Vector& m) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& p : solve_self_consistency(spec))
    if (p.stability != Stability::unstable) best = std::max(best, p.pressure);
  return classify_stationary(spec, m, best);
}

/// Entropic principle: the largest entropic functional over the stationary set.
inline double entropic_pressure(const ModelSpec& spec, const std::vector<StationaryPoint>& pts) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& p : pts) best = std::max(best, entropic_functional(spec, p.m));
  return best;
}

struct VariationalResult {
  double pressure = 0;
  Vector m_rotated;  ///< m' at the selected saddle
  Vector m;          ///< recovered magnetisation, m' = P m
  double c = 0;
  double gradient_norm = 0;
  int saddles = 0;           ///< distinct saddle points found
  double upper_bound = 0;    ///< min over m' of the objective with A_CW as a true maximum
};

namespace detail {

/// One party of the rotated problem: beta' = beta c alpha_a and tilt s'.
struct CwBranch {
  double M = 0;
  double value = 0;  ///< -beta' M^2 / 2 + phi(beta' M + s')
  double slope = 0;  ///< dM / ds' = phi'' / (1 - beta' phi'')
};

inline CwBranch cw_branch_near(const SpinFamily& f, double bp, double sp, double guess) {
  auto r = [&](double M) { return cgf(f, bp * M + sp, 1).d1 - M; };
  double M = std::clamp(guess, f.hull_min(), f.hull_max());
  bool ok = false;
  for (int it = 0; it < 60; ++it) {
    const CgfEval e = cgf(f, bp * M + sp, 2);
    const double F = e.d1 - M;
    if (std::abs(F) < 1e-15) {
      ok = true;
      break;
    }
    const double dF = bp * e.d2 - 1.0;
    if (dF == 0.0) break;
    const double next = M - F / dF;
    if (!std::isfinite(next) || next < f.hull_min() || next > f.hull_max()) break;
    if (std::abs(next - M) < 1e-15 * std::max(1.0, std::abs(M))) {
      M = next;
      ok = true;
      break;
    }
    M = next;
  }
  if (!ok || std::abs(r(M)) > 1e-12) {
    const auto roots = scan_roots(r, f.hull_min(), f.hull_max(), 257);
    double best = roots.empty() ? guess : roots.front();
    for (double x : roots)
      if (std::abs(x - guess) < std::abs(best - guess)) best = x;
    M = best;
  }
  const CgfEval e = cgf(f, bp * M + sp, 2);
  CwBranch b;
  b.M = M;
  b.value = -0.5 * bp * M * M + e.value;
  const double den = 1.0 - bp * e.d2;
  b.slope = std::abs(den) < 1e-300 ? std::numeric_limits<double>::infinity() : e.d2 / den;
  return b;
}

struct RotatedProblem {
  const ModelSpec& spec;
  InteractionDecomposition dec;
  Vector alpha;

  RotatedProblem(const ModelSpec& s, double c) : spec(s), dec(interaction_matrices(s, c)), alpha(s.alpha_vector()) {}

  double beta_prime(int a) const { return spec.beta * dec.c * alpha[a]; }

  /// s'_a = beta h_a - beta (A^{-1} P^T m')_a.
  Vector tilts(const Vector& mp) const {
    const Vector q = dec.P.transpose() * mp;
    Vector s(spec.nu());
    for (int a = 0; a < spec.nu(); ++a) s[a] = spec.beta * spec.h[a] - spec.beta * q[a] / alpha[a];
    return s;
  }
};

}  // namespace detail

/// The pressure as the best saddle value of the rotated Lagrangian
///   L(m') = beta |m'|^2 / 2 + sum_a alpha_a [-beta'_a M_a^2 / 2 + phi_a(beta'_a M_a + s'_a(m'))],
/// each M_a on a stationary branch of its own 1-D problem. Stationarity in m'
/// is m' = P M, which is the self-consistency system; L there equals the
/// energy-entropy value for every c. `upper_bound` is the min over m' when
/// each M_a is instead the global maximiser.
inline VariationalResult pressure_variational(const ModelSpec& spec, double c, const StartGrid& grid = {}) {
  spec.validate();
  const int n = spec.nu();
  const detail::RotatedProblem prob(spec, c);
  const auto& P = prob.dec.P;

  VariationalResult res;
  res.c = c;

  if (spec.beta == 0.0) {
    double A = 0;
    for (int a = 0; a < n; ++a) A += spec.alpha[a] * cgf(spec.families[a], 0.0, 0).value;
    res.pressure = A;
    res.m_rotated = Vector::Zero(n);
    res.m = Vector::Zero(n);
    for (int a = 0; a < n; ++a) res.m[a] = cgf(spec.families[a], spec.beta * spec.h[a], 1).d1;
    res.m_rotated = P * res.m;
    res.saddles = 1;
    res.upper_bound = A;
    return res;
  }

  auto branches = [&](const Vector& mp, const Vector& guess) {
    const Vector s = prob.tilts(mp);
    std::vector<detail::CwBranch> out(n);
    for (int a = 0; a < n; ++a) out[a] = detail::cw_branch_near(spec.families[a], prob.beta_prime(a), s[a], guess[a]);
    return out;
  };
  auto objective = [&](const Vector& mp, const std::vector<detail::CwBranch>& br) {
    double L = 0.5 * spec.beta * mp.squaredNorm();
    for (int a = 0; a < n; ++a) L += spec.alpha[a] * br[a].value;
    return L;
  };
  auto Mvec = [&](const std::vector<detail::CwBranch>& br) {
    Vector M(n);
    for (int a = 0; a < n; ++a) M[a] = br[a].M;
    return M;
  };
  // d(PM)/dm' = -beta P diag(slope / alpha) P^T
  auto jacobian = [&](const std::vector<detail::CwBranch>& br) {
    Vector k(n);
    for (int a = 0; a < n; ++a) k[a] = br[a].slope / spec.alpha[a];
    return Matrix(Matrix::Identity(n, n) + spec.beta * P * k.asDiagonal() * P.transpose());
  };

  // Saddles: Newton on R(m') = m' - P M(m'), branches tracked from the start.
  const auto starts = start_points(spec, grid);
  struct Saddle {
    Vector mp, M;
    double value = 0, grad = 0;
    bool ok = false;
  };
  std::vector<Saddle> slots(starts.size());
  parallel_for(starts.size(), grid.threads, [&](std::size_t i) {
    Vector M = detail::clamp_to_hull(spec, starts[i]);
    Vector mp = P * M;
    auto br = branches(mp, M);
    Vector R = mp - P * Mvec(br);
    double norm = R.lpNorm<Eigen::Infinity>();
    for (int it = 0; it < 60 && norm > 1e-13; ++it) {
      const Vector step = jacobian(br).fullPivLu().solve(R);
      if (!step.allFinite()) break;
      double lambda = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 40; ++ls) {
        const Vector trial = mp - lambda * step;
        const auto tb = branches(trial, Mvec(br));
        const Vector tr = trial - P * Mvec(tb);
        const double tn = tr.lpNorm<Eigen::Infinity>();
        if (tn < norm) {
          mp = trial;
          br = tb;
          R = tr;
          norm = tn;
          moved = true;
          break;
        }
        lambda *= 0.5;
      }
      if (!moved) break;
    }
    Saddle s;
    s.mp = mp;
    s.M = Mvec(br);
    s.value = objective(mp, br);
    s.grad = spec.beta * norm;
    s.ok = spec.beta * norm < 1e-10 &&
           self_consistency_residual(spec, s.M).lpNorm<Eigen::Infinity>() < 1e-8;
    slots[i] = s;
  });

  std::vector<Vector> distinct;
  const Saddle* best = nullptr;
  const Saddle* closest = nullptr;
  for (const auto& s : slots) {
    if (!closest || s.grad < closest->grad) closest = &s;
    if (!s.ok) continue;
    bool dup = false;
    for (const auto& d : distinct)
      if ((d - s.M).lpNorm<Eigen::Infinity>() <= 1e-6) dup = true;
    if (!dup) distinct.push_back(s.M);
    // Ties (the +- pair at zero field) go to the lexicographically larger m.
    if (!best || s.value > best->value + 1e-13 ||
        (std::abs(s.value - best->value) <= 1e-13 && detail::lex_less(best->M, s.M)))
      best = &s;
  }
  if (!best)
    throw ConvergenceError("pressure_variational: no saddle converged", closest ? closest->M : Vector(),
                           closest ? closest->grad : std::numeric_limits<double>::infinity());
  res.pressure = best->value;
  res.m_rotated = best->mp;
  res.m = best->M;
  res.gradient_norm = best->grad;
  res.saddles = static_cast<int>(distinct.size());

  // Upper bound: the objective with A_CW(beta', s') as a true maximum is
  // convex in m'; damped Newton from m' = 0, stopping where no descent remains.
  const EnergyFunction quad = EnergyFunction::quadratic(1.0);
  auto cw_max = [&](const Vector& mp) {
    const Vector s = prob.tilts(mp);
    std::vector<detail::CwBranch> out(n);
    for (int a = 0; a < n; ++a) {
      const GfState g = gf_pressure(quad, spec.families[a], prob.beta_prime(a), s[a]);
      const double bp = prob.beta_prime(a);
      const double v = cgf(spec.families[a], bp * g.magnetisation + s[a], 2).d2;
      out[a] = {g.magnetisation, g.pressure, std::max(0.0, v / std::max(1e-300, 1.0 - bp * v))};
    }
    return out;
  };
  Vector mp = Vector::Zero(n);
  auto br = cw_max(mp);
  double L = objective(mp, br);
  for (int it = 0; it < 100; ++it) {
    const Vector g = spec.beta * (mp - P * Mvec(br));
    if (g.lpNorm<Eigen::Infinity>() < 1e-12) break;
    const Matrix H = spec.beta * jacobian(br);
    const Vector step = H.ldlt().solve(g);
    double lambda = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 50; ++ls) {
      const Vector trial = mp - lambda * step;
      const auto tb = cw_max(trial);
      const double tl = objective(trial, tb);
      if (tl < L) {
        mp = trial;
        br = tb;
        L = tl;
        moved = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!moved) break;
  }
  res.upper_bound = L;
  return res;
}

}  // namespace mpferro
