#pragma once

// The self-consistency map F(m) = m - phi'(beta h + beta K m) and its
// Jacobian I - beta M, M_ab = phi_a''(t_a) alpha_b off the diagonal.

#include <algorithm>
#include <cmath>
#include <optional>

#include <Eigen/Dense>

#include "mpferro/model.hpp"
#include "mpferro/spins.hpp"

namespace mpferro {

inline Vector self_consistency_residual(const ModelSpec& spec, const Vector& m) {
  const Vector t = local_fields(spec, m);
  Vector r(spec.nu());
  for (int a = 0; a < spec.nu(); ++a) r[a] = m[a] - cgf(spec.families[a], t[a], 1).d1;
  return r;
}

/// The matrix M at m (so the Jacobian of F is I - beta M).
inline Matrix linearised_coupling(const ModelSpec& spec, const Vector& m) {
  const Vector t = local_fields(spec, m);
  const int n = spec.nu();
  Matrix M = Matrix::Zero(n, n);
  for (int a = 0; a < n; ++a) {
    const double v = cgf(spec.families[a], t[a], 2).d2;
    for (int b = 0; b < n; ++b)
      if (a != b) M(a, b) = v * spec.alpha[b];
  }
  return M;
}

inline Matrix self_consistency_jacobian(const ModelSpec& spec, const Vector& m) {
  return Matrix::Identity(spec.nu(), spec.nu()) - spec.beta * linearised_coupling(spec, m);
}

namespace detail {

inline Vector clamp_to_hull(const ModelSpec& spec, Vector m) {
  for (int a = 0; a < spec.nu(); ++a) {
    const auto& f = spec.families[a];
    m[a] = std::clamp(m[a], f.hull_min(), f.hull_max());
  }
  return m;
}

}  // namespace detail

struct NewtonOutcome {
  Vector m;
  double residual = 0;
  bool converged = false;
};

/// Damped Newton on F with backtracking halving; if it stalls, fixed-point
/// sweeps m <- phi'(local fields) take over.
inline NewtonOutcome newton_self_consistency(const ModelSpec& spec, Vector m, double tol = 1e-12,
                                             int max_iter = 60, int sweeps = 200) {
  m = detail::clamp_to_hull(spec, m);
  Vector r = self_consistency_residual(spec, m);
  double norm = r.lpNorm<Eigen::Infinity>();
  for (int it = 0; it < max_iter && norm > tol; ++it) {
    const Matrix J = self_consistency_jacobian(spec, m);
    const Vector step = J.fullPivLu().solve(r);
    if (!step.allFinite()) break;
    double lambda = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 40; ++ls) {
      const Vector trial = detail::clamp_to_hull(spec, m - lambda * step);
      const Vector rt = self_consistency_residual(spec, trial);
      const double nt = rt.lpNorm<Eigen::Infinity>();
      if (nt < norm) {
        m = trial;
        r = rt;
        norm = nt;
        improved = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!improved) break;
  }
  if (norm > tol) {
    for (int s = 0; s < sweeps && norm > tol; ++s) {
      const Vector t = local_fields(spec, m);
      for (int a = 0; a < spec.nu(); ++a) m[a] = cgf(spec.families[a], t[a], 1).d1;
      r = self_consistency_residual(spec, m);
      norm = r.lpNorm<Eigen::Infinity>();
    }
    // A few more Newton steps from wherever the sweeps left us.
    for (int it = 0; it < 10 && norm > tol; ++it) {
      const Vector step = self_consistency_jacobian(spec, m).fullPivLu().solve(r);
      if (!step.allFinite()) break;
      const Vector trial = detail::clamp_to_hull(spec, m - step);
      const Vector rt = self_consistency_residual(spec, trial);
      if (rt.lpNorm<Eigen::Infinity>() >= norm) break;
      m = trial;
      r = rt;
      norm = rt.lpNorm<Eigen::Infinity>();
    }
  }
  return {m, norm, norm <= std::max(tol, 1e-10)};
}

}  // namespace mpferro
