#pragma once

// Single-spin laws and their cumulant generating functions
// phi(t) = log E[exp(t * sigma)], with derivatives up to fourth order.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/special_functions/bernoulli.hpp>

#include "mpferro/errors.hpp"
#include "mpferro/roots.hpp"

namespace mpferro {

enum class SpinKind { rademacher, uniform, three_point, discrete };

inline std::string to_string(SpinKind kind) {
  switch (kind) {
    case SpinKind::rademacher: return "rademacher";
    case SpinKind::uniform: return "uniform";
    case SpinKind::three_point: return "three_point";
    case SpinKind::discrete: return "discrete";
  }
  return "unknown";
}

/// A symmetric single-spin law. Finite support families keep their support
/// and (normalized) weights; the uniform law on [-sqrt 3, sqrt 3] is analytic.
class SpinFamily {
 public:
  static SpinFamily rademacher() { return SpinFamily(SpinKind::rademacher, {-1.0, 1.0}, {0.5, 0.5}); }

  static SpinFamily uniform() { return SpinFamily(SpinKind::uniform, {}, {}); }

  /// Support {-a, 0, a} with P(0) = q.
  static SpinFamily three_point(double q, double a) {
    if (!(q >= 0.0 && q < 1.0) || !(a > 0.0))
      throw ConfigError("three_point: need 0 <= q < 1 and a > 0");
    SpinFamily f(SpinKind::three_point, {-a, 0.0, a}, {(1 - q) / 2, q, (1 - q) / 2});
    f.q_ = q;
    f.a_ = a;
    return f;
  }

  /// Unit-variance three-point law: a = 1 / sqrt(1 - q).
  static SpinFamily three_point(double q) { return three_point(q, 1.0 / std::sqrt(1.0 - q)); }

  static SpinFamily discrete(std::vector<double> support, std::vector<double> weights) {
    if (support.empty() || support.size() != weights.size())
      throw ConfigError("discrete: support and weights must be non-empty and of equal length");
    double total = 0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("discrete: weights must be >= 0");
      total += w;
    }
    if (!(total > 0)) throw ConfigError("discrete: weights sum to zero");
    for (double& w : weights) w /= total;
    for (double x : support)
      if (!std::isfinite(x)) throw ConfigError("discrete: support must be finite");
    return SpinFamily(SpinKind::discrete, std::move(support), std::move(weights));
  }

  SpinKind kind() const { return kind_; }
  bool finite_support() const { return kind_ != SpinKind::uniform; }
  const std::vector<double>& support() const { return support_; }
  const std::vector<double>& weights() const { return weights_; }
  double hole_probability() const { return q_; }
  double three_point_scale() const { return a_; }

  double hull_min() const {
    if (kind_ == SpinKind::uniform) return -std::sqrt(3.0);
    return *std::min_element(support_.begin(), support_.end());
  }
  double hull_max() const {
    if (kind_ == SpinKind::uniform) return std::sqrt(3.0);
    return *std::max_element(support_.begin(), support_.end());
  }

  /// E[sigma^k] for k = 1..4.
  double moment(int k) const {
    if (kind_ == SpinKind::uniform) {
      if (k % 2 == 1) return 0.0;
      return std::pow(3.0, k / 2.0) / (k + 1);
    }
    double s = 0;
    for (std::size_t i = 0; i < support_.size(); ++i) s += weights_[i] * std::pow(support_[i], k);
    return s;
  }

  bool operator==(const SpinFamily& o) const {
    return kind_ == o.kind_ && support_ == o.support_ && weights_ == o.weights_;
  }

 private:
  SpinFamily(SpinKind kind, std::vector<double> support, std::vector<double> weights)
      : kind_(kind), support_(std::move(support)), weights_(std::move(weights)) {}

  SpinKind kind_;
  std::vector<double> support_;
  std::vector<double> weights_;
  double q_ = 0.0;
  double a_ = 0.0;
};

/// phi and its derivatives at one point. Entries above the requested order are 0.
struct CgfEval {
  double value = 0;
  double d1 = 0;
  double d2 = 0;
  double d3 = 0;
  double d4 = 0;

  double derivative(int k) const {
    switch (k) {
      case 0: return value;
      case 1: return d1;
      case 2: return d2;
      case 3: return d3;
      case 4: return d4;
    }
    throw std::invalid_argument("CgfEval: derivative order must be 0..4");
  }
};

namespace detail {

inline double log_cosh(double t) {
  const double a = std::abs(t);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

inline CgfEval rademacher_cgf(double t) {
  const double th = std::tanh(t);
  const double sech2 = 1.0 - th * th;
  return {log_cosh(t), th, sech2, -2.0 * th * sech2, -2.0 * sech2 * (1.0 - 3.0 * th * th)};
}

// g(s) = log(sinh(s)/s) and derivatives. Near the origin the closed forms
// cancel catastrophically, so the Bernoulli series is used there.
inline CgfEval log_sinhc(double s) {
  CgfEval g;
  const double a = std::abs(s);
  if (a < 0.5) {
    for (int n = 1; n <= 12; ++n) {
      const int p = 2 * n;
      const double c = std::ldexp(boost::math::bernoulli_b2n<double>(n), p) /
                       (p * std::tgamma(p + 1.0));
      g.value += c * std::pow(s, p);
      g.d1 += c * p * std::pow(s, p - 1);
      g.d2 += c * p * (p - 1) * std::pow(s, p - 2);
      if (p >= 3) g.d3 += c * p * (p - 1) * (p - 2) * std::pow(s, p - 3);
      g.d4 += c * p * (p - 1) * (p - 2) * (p - 3) * (p >= 4 ? std::pow(s, p - 4) : 0.0);
    }
    return g;
  }
  const double e = std::exp(-2.0 * a);
  g.value = a + std::log1p(-e) - std::log(2.0) - std::log(a);
  const double coth = 1.0 / std::tanh(s);
  const double csch = (a > 700) ? 0.0 : 1.0 / std::sinh(s);
  const double csch2 = csch * csch;
  g.d1 = coth - 1.0 / s;
  g.d2 = 1.0 / (s * s) - csch2;
  g.d3 = -2.0 / (s * s * s) + 2.0 * csch2 * coth;
  g.d4 = 6.0 / (s * s * s * s) - 4.0 * csch2 * coth * coth - 2.0 * csch2 * csch2;
  return g;
}

inline CgfEval uniform_cgf(double t) {
  const double r3 = std::sqrt(3.0);
  const CgfEval g = log_sinhc(r3 * t);
  return {g.value, r3 * g.d1, 3.0 * g.d2, 3.0 * r3 * g.d3, 9.0 * g.d4};
}

// Tilted-moment evaluation with a log-sum-exp shift.
inline CgfEval discrete_cgf(const SpinFamily& fam, double t, int order) {
  const auto& x = fam.support();
  const auto& w = fam.weights();
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i)
    if (w[i] > 0) shift = std::max(shift, std::log(w[i]) + t * x[i]);
  double z = 0;
  std::vector<double> p(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (w[i] > 0) p[i] = std::exp(std::log(w[i]) + t * x[i] - shift);
    z += p[i];
  }
  CgfEval out;
  out.value = shift + std::log(z);
  if (order < 1) return out;
  double mean = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mean += p[i] * x[i];
  mean /= z;
  double c2 = 0, c3 = 0, c4 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - mean;
    c2 += p[i] * d * d;
    c3 += p[i] * d * d * d;
    c4 += p[i] * d * d * d * d;
  }
  c2 /= z;
  c3 /= z;
  c4 /= z;
  out.d1 = mean;
  out.d2 = c2;
  out.d3 = c3;
  out.d4 = c4 - 3.0 * c2 * c2;
  return out;
}

}  // namespace detail

/// phi(t) and derivatives up to `order` (0..4).
inline CgfEval cgf(const SpinFamily& family, double t, int order = 4) {
  if (!std::isfinite(t)) throw std::domain_error("cgf: non-finite argument");
  if (order < 0 || order > 4) throw std::invalid_argument("cgf: order must be 0..4");
  CgfEval e;
  switch (family.kind()) {
    case SpinKind::rademacher: e = detail::rademacher_cgf(t); break;
    case SpinKind::uniform: e = detail::uniform_cgf(t); break;
    default: e = detail::discrete_cgf(family, t, order); break;
  }
  if (order < 4) e.d4 = 0;
  if (order < 3) e.d3 = 0;
  if (order < 2) e.d2 = 0;
  if (order < 1) e.d1 = 0;
  return e;
}

/// The k-th cumulant P_k (k = 2 or 4). P_2 = 1 for admissible laws, P_4 = E[s^4] - 3.
inline double cumulant(const SpinFamily& family, int k) {
  if (k % 2 != 0) throw std::invalid_argument("cumulant: odd order vanishes by symmetry");
  if (k != 2 && k != 4) throw std::invalid_argument("cumulant: only orders 2 and 4 supported");
  return cgf(family, 0.0, 4).derivative(k);
}

struct ValidationReport {
  bool ok = true;
  double variance = 0;
  double fourth_moment = 0;
  std::vector<std::string> failures;
};

/// Admissibility: symmetric, unit variance, E[s^4] < 3 strictly.
inline ValidationReport validate_family(const SpinFamily& family) {
  constexpr double tol = 1e-12;
  ValidationReport r;
  if (family.finite_support()) {
    const auto& x = family.support();
    const auto& w = family.weights();
    for (std::size_t i = 0; i < x.size(); ++i) {
      double mirrored = 0, own = 0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        if (std::abs(x[j] + x[i]) <= tol * std::max(1.0, std::abs(x[i]))) mirrored += w[j];
        if (std::abs(x[j] - x[i]) <= tol * std::max(1.0, std::abs(x[i]))) own += w[j];
      }
      if (std::abs(mirrored - own) > tol) {
        r.failures.push_back("asymmetric: weight(" + std::to_string(x[i]) +
                             ") != weight(" + std::to_string(-x[i]) + ")");
        break;
      }
    }
  }
  r.variance = family.moment(2);
  r.fourth_moment = family.moment(4);
  if (std::abs(r.variance - 1.0) > tol)
    r.failures.push_back("variance " + std::to_string(r.variance) + " != 1");
  if (!(r.fourth_moment - 3.0 < -tol))
    r.failures.push_back("kurtosis: E[s^4] = " + std::to_string(r.fourth_moment) +
                         " is not strictly below 3");
  r.ok = r.failures.empty();
  return r;
}

/// The t solving phi'(t) = m, for m strictly inside the spin hull.
inline double cgf_derivative_inverse(const SpinFamily& family, double m) {
  const double lo_m = family.hull_min();
  const double hi_m = family.hull_max();
  if (!(m > lo_m && m < hi_m)) throw std::domain_error("cgf_derivative_inverse: m outside open hull");
  if (m == 0.0) return 0.0;
  if (family.kind() == SpinKind::rademacher) return std::atanh(m);
  auto fdf = [&](double t) {
    const CgfEval e = cgf(family, t, 2);
    return std::make_pair(e.d1 - m, e.d2);
  };
  double lo = 0.0, hi = (m > 0 ? 1.0 : -1.0);
  while (m > 0 ? fdf(hi).first <= 0 : fdf(hi).first >= 0) {
    lo = hi;
    hi *= 2.0;
    if (std::abs(hi) > 1e300) throw std::domain_error("cgf_derivative_inverse: no bracket");
  }
  return safeguarded_newton(fdf, lo, hi, 0.5 * (lo + hi), 1e-15);
}

}  // namespace mpferro
