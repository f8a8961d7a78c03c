#pragma once

// Two parties. Summing out party 2 leaves a generalised ferromagnet in m_1
// with energy u_1 = phi_2, and symmetrically u_2 = phi_1. Along the line
// h_1 = -(1 - alpha) u_1'(beta h_2) the state M_1 = 0 is always stationary;
// the landscape of the marginal pressure on that line changes character at
// three field values h_c1 < h_c2 < h_c3.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mpferro/errors.hpp"
#include "mpferro/genferro.hpp"
#include "mpferro/model.hpp"
#include "mpferro/parallel.hpp"
#include "mpferro/roots.hpp"
#include "mpferro/spins.hpp"

namespace mpferro {

/// Party sizes, temperature, fields and spin laws of a nu = 2 model.
struct Bipartite {
  double alpha = 0.5;  ///< size of party 1
  double beta = 0;
  double h1 = 0;
  double h2 = 0;
  SpinFamily fam1 = SpinFamily::rademacher();
  SpinFamily fam2 = SpinFamily::rademacher();

  static Bipartite from(const ModelSpec& spec) {
    if (spec.nu() != 2) throw ConfigError("bipartite: nu must be 2");
    return {spec.alpha[0], spec.beta, spec.h[0], spec.h[1], spec.families[0], spec.families[1]};
  }

  Bipartite with_fields(double a, double b) const {
    Bipartite out = *this;
    out.h1 = a;
    out.h2 = b;
    return out;
  }

  double beta_c() const { return 1.0 / std::sqrt(alpha * (1.0 - alpha)); }

  // u_1 = phi_2 and u_2 = phi_1.
  CgfEval u1(double x, int order = 4) const { return cgf(fam2, x, order); }
  CgfEval u2(double x, int order = 4) const { return cgf(fam1, x, order); }

  /// Argument of u_1 at M_1, and the induced M_2 = u_1'(alpha beta M_1 + beta h_2).
  double x_of(double M1) const { return alpha * beta * M1 + beta * h2; }
  double induced_m2(double M1) const { return u1(x_of(M1), 1).d1; }
  double y_of(double M1) const { return beta * (1.0 - alpha) * induced_m2(M1) + beta * h1; }

  /// Mirror image: x' = (1 - alpha) beta M_2 + beta h_1, M_1 = u_2'(x').
  double induced_m1(double M2) const { return u2((1.0 - alpha) * beta * M2 + beta * h1, 1).d1; }

  /// Stationarity residual g(M_1) = u_2'(y(M_1)) - M_1; A_1' is a positive multiple of it.
  double g(double M1) const { return u2(y_of(M1), 1).d1 - M1; }

  /// Per-N pressure with party 2 summed out, as a function of M_1.
  double A1(double M1) const {
    const double x = x_of(M1);
    const CgfEval e = u1(x, 1);
    const double y = beta * (1.0 - alpha) * e.d1 + beta * h1;
    return (1.0 - alpha) * (e.value - alpha * beta * M1 * e.d1) + alpha * u2(y, 0).value;
  }

  /// Per-N pressure with party 1 summed out, as a function of M_2.
  double A2(double M2) const {
    const double x = (1.0 - alpha) * beta * M2 + beta * h1;
    const CgfEval e = u2(x, 1);
    const double y = beta * alpha * e.d1 + beta * h2;
    return alpha * (e.value - (1.0 - alpha) * beta * M2 * e.d1) + (1.0 - alpha) * u1(y, 0).value;
  }

  double dA1(double M1) const {
    const double c = alpha * alpha * beta * beta * (1.0 - alpha);
    return c * u1(x_of(M1), 2).d2 * g(M1);
  }

  double dg(double M1) const {
    const CgfEval e = u1(x_of(M1), 2);
    const double y = beta * (1.0 - alpha) * e.d1 + beta * h1;
    return u2(y, 2).d2 * beta * (1.0 - alpha) * e.d2 * alpha * beta - 1.0;
  }

  double d2A1(double M1) const {
    const double c = alpha * alpha * beta * beta * (1.0 - alpha);
    const CgfEval e = u1(x_of(M1), 3);
    return c * (e.d3 * alpha * beta * g(M1) + e.d2 * dg(M1));
  }

  /// All stationary M_1 (roots of g) in the party-1 hull, ascending.
  std::vector<double> stationary_m1(int samples = 4001) const {
    return scan_roots([this](double M) { return g(M); }, fam1.hull_min(), fam1.hull_max(), samples);
  }
};

struct DualEnergy {
  EnergyFunction u1;
  EnergyFunction u2;
  double beta_eff1 = 0;  ///< (1 - alpha) / alpha
  double beta_eff2 = 0;  ///< alpha / (1 - alpha)
};

inline DualEnergy dual_energy(const ModelSpec& spec) {
  const Bipartite b = Bipartite::from(spec);
  return {EnergyFunction::duality(b.fam2), EnergyFunction::duality(b.fam1), (1.0 - b.alpha) / b.alpha,
          b.alpha / (1.0 - b.alpha)};
}

/// The party-1 marginal written as a one-party ferromagnet in m_1 with
/// beta = 1 and field beta h_1; valid for h_2 = 0. Its pressure is per N_1.
inline EnergyFunction marginal_energy(const ModelSpec& spec) {
  const Bipartite b = Bipartite::from(spec);
  if (b.h2 != 0.0) throw ConfigError("marginal_energy: needs h_2 = 0");
  return EnergyFunction::scaled_cgf(b.fam2, (1.0 - b.alpha) / b.alpha, b.alpha * b.beta);
}

inline double marginal_pressure(const ModelSpec& spec, double M1) { return Bipartite::from(spec).A1(M1); }
inline double marginal_pressure_2(const ModelSpec& spec, double M2) { return Bipartite::from(spec).A2(M2); }

/// Global maximum of A_1 over the stationary set: the model pressure.
struct MarginalOptimum {
  double pressure = 0;
  double m1 = 0;
  double m2 = 0;
};

inline MarginalOptimum marginal_optimum(const Bipartite& b, int samples = 4001) {
  MarginalOptimum best{-std::numeric_limits<double>::infinity(), 0, 0};
  for (double M : b.stationary_m1(samples)) {
    const double a = b.A1(M);
    if (a > best.pressure) best = {a, M, b.induced_m2(M)};
  }
  return best;
}

inline MarginalOptimum marginal_optimum(const ModelSpec& spec, int samples = 4001) {
  return marginal_optimum(Bipartite::from(spec), samples);
}

// ---------------------------------------------------------------------------
// Critical lines

struct CriticalLineSample {
  double h2 = 0;
  double line1_h1 = 0;  ///< h_1 = -(1 - alpha) u_1'(beta h_2)
  double line2_h1 = std::numeric_limits<double>::quiet_NaN();  ///< solves h_2 = -alpha u_2'(beta h_1)
  double residual1 = 0;  ///< |g(0)| on line 1
  double residual2 = std::numeric_limits<double>::quiet_NaN();  ///< |M_2(M_1 = u_2'(beta h_1))| on line 2
};

inline double line1_h1(const Bipartite& b, double h2) { return -(1.0 - b.alpha) * b.u1(b.beta * h2, 1).d1; }

/// h_1 on line 2 at the given h_2, or nullopt when |h_2| / alpha leaves the party-1 hull.
inline std::optional<double> line2_h1(const Bipartite& b, double h2) {
  if (b.beta == 0) return std::nullopt;
  const double target = -h2 / b.alpha;
  if (!(target > b.fam1.hull_min() && target < b.fam1.hull_max())) return std::nullopt;
  return cgf_derivative_inverse(b.fam1, target) / b.beta;
}

inline std::vector<CriticalLineSample> critical_lines(const ModelSpec& spec, const std::vector<double>& h2_grid) {
  const Bipartite base = Bipartite::from(spec);
  std::vector<CriticalLineSample> out;
  out.reserve(h2_grid.size());
  for (double h2 : h2_grid) {
    CriticalLineSample s;
    s.h2 = h2;
    s.line1_h1 = line1_h1(base, h2);
    s.residual1 = std::abs(base.with_fields(s.line1_h1, h2).g(0.0));
    if (auto h1 = line2_h1(base, h2)) {
      s.line2_h1 = *h1;
      const Bipartite b = base.with_fields(*h1, h2);
      s.residual2 = std::abs(b.induced_m2(b.u2(b.beta * *h1, 1).d1));
      if (s.residual2 > 1e-10) throw std::runtime_error("critical_lines: line-2 solve failed at h2 = " + std::to_string(h2));
    }
    out.push_back(s);
  }
  return out;
}

/// Solutions (h_1, h_2) of both line equations, from 2-D Newton started on a
/// grid x grid lattice covering the reachable field box. Sorted by h_2.
inline std::vector<std::pair<double, double>> coupled_line_intersections(const ModelSpec& spec, int grid = 400,
                                                                         int threads = 1) {
  const Bipartite b = Bipartite::from(spec);
  const double box1 = (1.0 - b.alpha) * b.fam2.hull_max() * 1.05;
  const double box2 = b.alpha * b.fam1.hull_max() * 1.05;
  auto residual = [&](double h1, double h2) {
    return std::make_pair(h1 + (1.0 - b.alpha) * b.u1(b.beta * h2, 1).d1, h2 + b.alpha * b.u2(b.beta * h1, 1).d1);
  };
  std::vector<std::optional<std::pair<double, double>>> found(static_cast<std::size_t>(grid) * grid);
  parallel_for(found.size(), threads, [&](std::size_t k) {
    const int i = static_cast<int>(k) / grid;
    const int j = static_cast<int>(k) % grid;
    double h1 = -box1 + 2.0 * box1 * (i + 0.5) / grid;
    double h2 = -box2 + 2.0 * box2 * (j + 0.5) / grid;
    for (int it = 0; it < 60; ++it) {
      auto [r1, r2] = residual(h1, h2);
      if (std::max(std::abs(r1), std::abs(r2)) < 1e-14) break;
      // Jacobian [[1, (1-a) beta u1''], [a beta u2'', 1]]
      const double j12 = (1.0 - b.alpha) * b.beta * b.u1(b.beta * h2, 2).d2;
      const double j21 = b.alpha * b.beta * b.u2(b.beta * h1, 2).d2;
      const double det = 1.0 - j12 * j21;
      if (std::abs(det) < 1e-14) break;
      double d1 = (r1 - j12 * r2) / det;
      double d2 = (r2 - j21 * r1) / det;
      double step = 1.0;
      const double r0 = std::hypot(r1, r2);
      for (int ls = 0; ls < 30; ++ls) {
        auto [q1, q2] = residual(h1 - step * d1, h2 - step * d2);
        if (std::hypot(q1, q2) < r0) break;
        step *= 0.5;
      }
      h1 -= step * d1;
      h2 -= step * d2;
    }
    auto [r1, r2] = residual(h1, h2);
    if (std::max(std::abs(r1), std::abs(r2)) < 1e-12) found[k] = std::make_pair(h1, h2);
  });
  std::vector<std::pair<double, double>> roots;
  for (const auto& f : found)
    if (f) roots.push_back(*f);
  std::sort(roots.begin(), roots.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second < b.second : a.first < b.first;
  });
  std::vector<std::pair<double, double>> out;
  for (const auto& r : roots) {
    bool dup = false;
    for (const auto& o : out)
      if (std::max(std::abs(o.first - r.first), std::abs(o.second - r.second)) <= 1e-8) dup = true;
    if (!dup) out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Landscape along line 1

enum class Regime { R0, R1, R2, R3, other };

inline std::string to_string(Regime r) {
  switch (r) {
    case Regime::R0: return "R0";
    case Regime::R1: return "R1";
    case Regime::R2: return "R2";
    case Regime::R3: return "R3";
    case Regime::other: return "other";
  }
  return "other";
}

/// Labels refer to -A_1, the free-energy landscape.
enum class PointLabel { global_min, local_min, max };

inline std::string to_string(PointLabel l) {
  switch (l) {
    case PointLabel::global_min: return "global-min";
    case PointLabel::local_min: return "local-min";
    case PointLabel::max: return "max";
  }
  return "max";
}

struct LandscapePoint {
  double m1 = 0;
  double m2 = 0;
  double pressure = 0;   ///< A_1(m1)
  double curvature = 0;  ///< A_1''(m1)
  PointLabel label = PointLabel::max;
};

struct LandscapeReport {
  double h1 = 0;
  double h2 = 0;
  std::vector<LandscapePoint> points;  ///< ascending in m1
  Regime regime = Regime::other;

  const LandscapePoint& global() const {
    for (const auto& p : points)
      if (p.label == PointLabel::global_min) return p;
    throw std::logic_error("landscape without a global minimum");
  }
};

namespace detail {

constexpr double kZeroM = 1e-9;
constexpr double kCollision = 1e-6;

inline LandscapeReport scan_line1_nonneg(const Bipartite& base, double h2, int samples) {
  const Bipartite b = base.with_fields(line1_h1(base, h2), h2);
  LandscapeReport r;
  r.h1 = b.h1;
  r.h2 = h2;
  const auto roots = b.stationary_m1(samples);
  int best = -1;
  for (std::size_t i = 0; i < roots.size(); ++i) {
    LandscapePoint p;
    p.m1 = std::abs(roots[i]) < kZeroM ? 0.0 : roots[i];
    p.m2 = b.induced_m2(p.m1);
    p.pressure = b.A1(p.m1);
    p.curvature = b.d2A1(p.m1);
    // A tangent pair closer than the collision radius is a fold, not two states.
    const bool colliding = (i > 0 && roots[i] - roots[i - 1] < kCollision) ||
                           (i + 1 < roots.size() && roots[i + 1] - roots[i] < kCollision);
    p.label = (p.curvature < 0 && !colliding) ? PointLabel::local_min : PointLabel::max;
    if (p.label == PointLabel::local_min && (best < 0 || p.pressure > r.points[best].pressure + 1e-14))
      best = static_cast<int>(r.points.size());
    r.points.push_back(p);
  }
  if (best >= 0) r.points[best].label = PointLabel::global_min;

  const LandscapePoint* zero = nullptr;
  bool neg_min = false, pos_min = false;
  for (const auto& p : r.points) {
    if (p.m1 == 0.0) zero = &p;
    else if (p.label != PointLabel::max) (p.m1 < 0 ? neg_min : pos_min) = true;
  }
  if (zero != nullptr && best >= 0) {
    const auto& g = r.points[best];
    const bool zero_is_min = zero->label != PointLabel::max;
    if (zero_is_min && !neg_min && !pos_min) r.regime = Regime::R0;
    else if (zero_is_min && g.m1 == 0.0 && neg_min && !pos_min) r.regime = Regime::R1;
    else if (zero_is_min && g.m1 < 0 && !pos_min) r.regime = Regime::R2;
    else if (!zero_is_min && g.m1 < 0 && pos_min) r.regime = Regime::R3;
  }
  return r;
}

}  // namespace detail

/// Stationary points of A_1 with (h_1, h_2) placed on line 1 at the given
/// h_2. Negative h_2 is the mirror image of positive h_2.
inline LandscapeReport landscape_scan(const ModelSpec& spec, double h2, int samples = 4001) {
  const Bipartite base = Bipartite::from(spec);
  if (h2 >= 0) return detail::scan_line1_nonneg(base, h2, samples);
  LandscapeReport r = detail::scan_line1_nonneg(base, -h2, samples);
  r.h1 = -r.h1;
  r.h2 = h2;
  for (auto& p : r.points) {
    p.m1 = -p.m1;
    p.m2 = -p.m2;
  }
  std::reverse(r.points.begin(), r.points.end());
  return r;
}

/// The A_1 profile itself on an even grid over the party-1 hull.
inline std::vector<std::pair<double, double>> marginal_profile(const ModelSpec& spec, int samples = 401) {
  const Bipartite b = Bipartite::from(spec);
  std::vector<std::pair<double, double>> out;
  const double lo = b.fam1.hull_min(), hi = b.fam1.hull_max();
  for (int i = 0; i < samples; ++i) {
    const double M = lo + (hi - lo) * i / (samples - 1.0);
    out.emplace_back(M, b.A1(M));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Critical fields

struct CriticalFields {
  double h_c1 = 0;
  double h_c2 = 0;           ///< from the intersection of the two lines
  double h_c2_crossing = 0;  ///< from equal pressures of the M_- and 0 states
  double h_c3 = 0;
};

namespace detail {

inline int negative_minima(const Bipartite& base, double h2, int samples) {
  int n = 0;
  for (const auto& p : scan_line1_nonneg(base, h2, samples).points)
    if (p.label != PointLabel::max && p.m1 < 0) ++n;
  return n;
}

inline std::optional<double> negative_branch(const Bipartite& base, double h2, int samples) {
  for (const auto& p : scan_line1_nonneg(base, h2, samples).points)
    if (p.label != PointLabel::max && p.m1 < 0) return p.m1;
  return std::nullopt;
}

}  // namespace detail

/// h_c1 < h_c2 < h_c3 along line 1 (h_2 > 0); nullopt when beta <= beta_c.
inline std::optional<CriticalFields> critical_fields(const ModelSpec& spec, int samples = 4001) {
  const Bipartite b = Bipartite::from(spec);
  const double k = b.beta * b.beta * b.alpha * (1.0 - b.alpha);
  if (!(k > 1.0)) return std::nullopt;
  CriticalFields cf;

  // h_c1: beta^2 alpha (1 - alpha) u_1''(beta h_2) = 1.
  auto cond1 = [&](double h) { return k * b.u1(b.beta * h, 2).d2 - 1.0; };
  double hi = 1.0 / b.beta;
  while (cond1(hi) > 0) hi *= 2.0;
  cf.h_c1 = bracketed_root(cond1, 0.0, hi);

  // h_c2: the positive fixed point t = alpha u_2'(beta (1 - alpha) u_1'(beta t)), polished by 2-D Newton.
  auto fix = [&](double t) { return b.alpha * b.u2(b.beta * (1.0 - b.alpha) * b.u1(b.beta * t, 1).d1, 1).d1 - t; };
  const double top = b.alpha * b.fam1.hull_max();
  std::optional<double> t2;
  for (double r : scan_roots(fix, 0.0, top, samples))
    if (r > 1e-9) {
      t2 = r;
      break;
    }
  if (!t2) throw ConvergenceError("critical_fields: no positive line intersection", Vector(), 0.0);
  {
    double h1 = line1_h1(b, *t2), h2 = *t2;
    for (int it = 0; it < 20; ++it) {
      const double r1 = h1 + (1.0 - b.alpha) * b.u1(b.beta * h2, 1).d1;
      const double r2 = h2 + b.alpha * b.u2(b.beta * h1, 1).d1;
      const double j12 = (1.0 - b.alpha) * b.beta * b.u1(b.beta * h2, 2).d2;
      const double j21 = b.alpha * b.beta * b.u2(b.beta * h1, 2).d2;
      const double det = 1.0 - j12 * j21;
      h1 -= (r1 - j12 * r2) / det;
      h2 -= (r2 - j21 * r1) / det;
    }
    cf.h_c2 = h2;
  }

  // h_c3: the M_- minimum of -A_1 disappears. Bisection on its presence.
  double lo3 = cf.h_c2, hi3 = std::max(2.0 * cf.h_c2, cf.h_c2 + 1.0 / b.beta);
  while (detail::negative_minima(b, hi3, samples) > 0) {
    lo3 = hi3;
    hi3 *= 2.0;
    if (hi3 > 1e6) throw ConvergenceError("critical_fields: spinodal not bracketed", Vector(), hi3);
  }
  while (hi3 - lo3 > 1e-9) {
    const double mid = 0.5 * (lo3 + hi3);
    (detail::negative_minima(b, mid, samples) > 0 ? lo3 : hi3) = mid;
  }
  cf.h_c3 = 0.5 * (lo3 + hi3);

  // Pressure crossing between the M_- branch and the M_1 = 0 state.
  auto gap = [&](double h2) {
    const Bipartite bb = b.with_fields(line1_h1(b, h2), h2);
    const auto m = detail::negative_branch(b, h2, samples);
    if (!m) return -1.0;
    return bb.A1(*m) - bb.A1(0.0);
  };
  cf.h_c2_crossing = bracketed_root(gap, cf.h_c1, lo3, 1e-14);
  return cf;
}

struct FirstOrderJump {
  double h2 = 0;  ///< location from the pressure crossing
  double m1_before = 0, m1_after = 0;
  double m2_before = 0, m2_after = 0;
};

/// The discontinuity of the global state along line 1 at h_c2.
inline std::optional<FirstOrderJump> first_order_jump(const ModelSpec& spec, int samples = 4001) {
  const auto cf = critical_fields(spec, samples);
  if (!cf) return std::nullopt;
  const double d = 1e-6 * std::max(1.0, cf->h_c2_crossing);
  const auto before = landscape_scan(spec, cf->h_c2_crossing - d, samples).global();
  const auto after = landscape_scan(spec, cf->h_c2_crossing + d, samples).global();
  return FirstOrderJump{cf->h_c2_crossing, before.m1, after.m1, before.m2, after.m2};
}

}  // namespace mpferro
