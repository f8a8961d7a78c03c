#pragma once

// Zero-field criticality. The trivial state loses uniqueness where
// det(I - beta K) first vanishes, K_ab = alpha_b (a != b). That determinant is
// the polynomial 1 - sum_{k>=2} (k-1) e_k(alpha) beta^k in the elementary
// symmetric functions e_k; principal minors are the same polynomial in the
// sub-vectors of alpha.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "mpferro/errors.hpp"
#include "mpferro/model.hpp"
#include "mpferro/roots.hpp"
#include "mpferro/selfcons.hpp"

namespace mpferro {

/// e_0..e_n of the given values.
inline std::vector<double> elementary_symmetric(const std::vector<double>& x) {
  std::vector<double> e(x.size() + 1, 0.0);
  e[0] = 1.0;
  for (double v : x)
    for (std::size_t k = e.size() - 1; k >= 1; --k) e[k] += v * e[k - 1];
  return e;
}

/// Coefficients c_0..c_nu of det(I - beta K) as a polynomial in beta.
inline std::vector<double> det_polynomial(const std::vector<double>& alpha) {
  const auto e = elementary_symmetric(alpha);
  std::vector<double> c(e.size(), 0.0);
  c[0] = 1.0;
  for (std::size_t k = 2; k < e.size(); ++k) c[k] = -static_cast<double>(k - 1) * e[k];
  return c;
}

inline double eval_polynomial(const std::vector<double>& c, double x) {
  double s = 0;
  for (std::size_t k = c.size(); k-- > 0;) s = s * x + c[k];
  return s;
}

/// det(I - beta K) by LU, for cross-checking the polynomial.
inline double det_direct(const ModelSpec& spec, double beta) {
  return (Matrix::Identity(spec.nu(), spec.nu()) - beta * coupling_matrix(spec)).determinant();
}

struct MinorsReport {
  bool all_positive = true;
  std::vector<unsigned> subsets;  ///< bitmask of parties in each principal minor (size >= 2)
  std::vector<double> values;
};

/// Every principal minor of I - beta K of size >= 2.
inline MinorsReport minors_check(const ModelSpec& spec, double beta) {
  const int n = spec.nu();
  if (n > 20) throw ConfigError("minors_check: nu too large");
  MinorsReport r;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) < 2) continue;
    std::vector<double> sub;
    for (int a = 0; a < n; ++a)
      if (mask & (1u << a)) sub.push_back(spec.alpha[a]);
    const double v = eval_polynomial(det_polynomial(sub), beta);
    r.subsets.push_back(mask);
    r.values.push_back(v);
    if (!(v > 0)) r.all_positive = false;
  }
  return r;
}

/// Unit null vector of I - beta_c K, largest-magnitude component positive.
inline Vector kernel_direction_at(const ModelSpec& spec, double beta_c) {
  const int n = spec.nu();
  const Matrix A = Matrix::Identity(n, n) - beta_c * coupling_matrix(spec);
  Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();  // descending
  if (n >= 2 && s[n - 2] < 1e-8) throw std::runtime_error("kernel_direction: null space is not one-dimensional");
  Vector w = svd.matrixV().col(n - 1);
  w.normalize();
  int big = 0;
  for (int a = 1; a < n; ++a)
    if (std::abs(w[a]) > std::abs(w[big]) + 1e-14) big = a;
  if (w[big] < 0) w = -w;
  return w;
}

struct CriticalReport {
  double beta_c = 0;
  Vector kernel;
  bool minors_ok_below = false;  ///< all minors positive just below beta_c
  std::vector<double> det_coefficients;
  double det_residual = 0;  ///< |det(I - beta_c K)| from the polynomial
};

/// beta_c: bracket [0, 1], doubled until the determinant changes sign, then TOMS748.
inline CriticalReport critical_beta(const ModelSpec& spec) {
  if (spec.nu() < 2) throw ConfigError("critical_beta: nu must be >= 2");
  CriticalReport r;
  r.det_coefficients = det_polynomial(spec.alpha);
  auto p = [&](double b) { return eval_polynomial(r.det_coefficients, b); };
  double hi = 1.0;
  while (p(hi) > 0) {
    hi *= 2.0;
    if (hi > 1e12) throw std::runtime_error("critical_beta: no sign change");
  }
  r.beta_c = bracketed_root(p, 0.0, hi, 1e-16);
  r.det_residual = std::abs(p(r.beta_c));
  r.kernel = kernel_direction_at(spec, r.beta_c);
  r.minors_ok_below = minors_check(spec, r.beta_c * (1.0 - 1e-9)).all_positive;
  return r;
}

inline Vector kernel_direction(const ModelSpec& spec) { return critical_beta(spec).kernel; }

struct ScalingFit {
  double exponent = 0;
  double kappa = 0;
  double eps_lo = 0;
  double eps_hi = 0;
  double direction_error = 0;  ///< radians, at the smallest epsilon
  double r_squared = 0;
  std::vector<double> eps;
  std::vector<double> norms;  ///< |m*| at each epsilon
};

/// Fits |m*| ~ eps^exponent at beta = beta_c + eps on a log grid, and
/// kappa = eps / (beta_c^3 |m*|^2) at the smallest eps.
inline ScalingFit scaling_fit(const ModelSpec& spec, double eps_lo, double eps_hi, int samples) {
  if (!(eps_lo > 0) || !(eps_hi > eps_lo) || samples < 2)
    throw ConfigError("scaling_fit: need 0 < eps_lo < eps_hi and samples >= 2");
  ModelSpec s = spec;
  std::fill(s.h.begin(), s.h.end(), 0.0);
  const CriticalReport cr = critical_beta(s);
  ScalingFit fit;
  fit.eps_lo = eps_lo;
  fit.eps_hi = eps_hi;

  // Continuation from the largest eps down; the first seed sits well outside
  // the root along w so Newton approaches the nonzero branch monotonically.
  Vector seed = cr.kernel * 0.5;
  Vector m_small;
  std::vector<double> xs, ys;
  for (int i = samples - 1; i >= 0; --i) {
    const double eps = std::exp(std::log(eps_lo) + (std::log(eps_hi) - std::log(eps_lo)) * i / (samples - 1));
    s.beta = cr.beta_c + eps;
    const NewtonOutcome out = newton_self_consistency(s, seed, 1e-15);
    const double norm = out.m.norm();
    if (!out.converged || norm < 1e-12)
      throw ConvergenceError("scaling_fit: no nonzero solution at eps = " + std::to_string(eps), out.m, out.residual);
    fit.eps.insert(fit.eps.begin(), eps);
    fit.norms.insert(fit.norms.begin(), norm);
    // Next eps is smaller: start slightly outside the expected root.
    const double next = i > 0 ? std::exp(std::log(eps_lo) + (std::log(eps_hi) - std::log(eps_lo)) * (i - 1) / (samples - 1)) : eps;
    seed = out.m * (1.5 * std::sqrt(next / eps));
    if (i == 0) m_small = out.m;
  }
  for (std::size_t i = 0; i < fit.eps.size(); ++i) {
    xs.push_back(std::log(fit.eps[i]));
    ys.push_back(std::log(fit.norms[i]));
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  fit.exponent = sxy / sxx;
  fit.r_squared = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  const double bc3 = cr.beta_c * cr.beta_c * cr.beta_c;
  fit.kappa = fit.eps.front() / (bc3 * fit.norms.front() * fit.norms.front());
  Vector dir = m_small / m_small.norm();
  if (dir.dot(cr.kernel) < 0) dir = -dir;
  // asin of the perpendicular part: acos loses precision near 1.
  fit.direction_error = std::asin(std::min(1.0, (dir - dir.dot(cr.kernel) * cr.kernel).norm()));
  return fit;
}

}  // namespace mpferro
