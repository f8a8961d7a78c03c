#pragma once

// Scalar root finding shared by the 1-D solvers: bracketed TOMS748, a
// safeguarded Newton, and a dense scan that also catches near-tangent root
// pairs that fall inside one grid cell.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/toms748_solve.hpp>

namespace mpferro {

/// Root of f on [lo, hi]; f(lo) and f(hi) must differ in sign (or vanish).
template <class F>
double bracketed_root(F&& f, double lo, double hi, double rel_tol = 1e-15,
                      std::uintmax_t max_iter = 200) {
  const double flo = f(lo);
  const double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0) == (fhi > 0)) throw std::domain_error("bracketed_root: no sign change");
  auto stop = [rel_tol](double a, double b) {
    return std::abs(b - a) <= rel_tol * std::max(1.0, std::max(std::abs(a), std::abs(b)));
  };
  std::uintmax_t iters = max_iter;
  auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, stop, iters);
  const double fa = f(a);
  const double fb = f(b);
  return std::abs(fa) <= std::abs(fb) ? a : b;
}

/// Newton's method kept inside a shrinking bracket; falls back to bisection
/// whenever the Newton step leaves the bracket or stalls. `fdf(x)` returns
/// {f(x), f'(x)}.
template <class FdF>
double safeguarded_newton(FdF&& fdf, double lo, double hi, double x0, double tol = 1e-14,
                          int max_iter = 200) {
  auto [flo, dlo] = fdf(lo);
  auto [fhi, dhi] = fdf(hi);
  (void)dlo;
  (void)dhi;
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0) == (fhi > 0)) throw std::domain_error("safeguarded_newton: no sign change");
  if (flo > 0) std::swap(lo, hi);  // keep f(lo) < 0 < f(hi)
  double x = std::clamp(x0, std::min(lo, hi), std::max(lo, hi));
  double dx_old = std::abs(hi - lo);
  double dx = dx_old;
  auto [fx, dfx] = fdf(x);
  for (int it = 0; it < max_iter; ++it) {
    const bool newton_leaves = ((x - hi) * dfx - fx) * ((x - lo) * dfx - fx) > 0;
    const bool slow = std::abs(2.0 * fx) > std::abs(dx_old * dfx);
    dx_old = dx;
    if (newton_leaves || slow || dfx == 0.0) {
      dx = 0.5 * (hi - lo);
      x = lo + dx;
    } else {
      dx = fx / dfx;
      x -= dx;
    }
    if (std::abs(dx) <= tol * std::max(1.0, std::abs(x))) return x;
    std::tie(fx, dfx) = fdf(x);
    if (fx == 0.0) return x;
    if (fx < 0) {
      lo = x;
    } else {
      hi = x;
    }
  }
  return x;
}

/// All roots of f on [lo, hi] found from `samples` equally spaced points.
/// Sign changes are refined with TOMS748. Where |f| has a local minimum
/// without a sign change, the extremum is located exactly and, if it crosses
/// zero, the two roots on either side are returned as well. Output is sorted.
template <class F>
std::vector<double> scan_roots(F&& f, double lo, double hi, int samples = 4001) {
  if (samples < 3 || !(hi > lo)) throw std::invalid_argument("scan_roots: bad interval");
  std::vector<double> xs(samples), fs(samples);
  for (int i = 0; i < samples; ++i) {
    xs[i] = (i == samples - 1) ? hi : lo + (hi - lo) * static_cast<double>(i) / (samples - 1);
    fs[i] = f(xs[i]);
  }
  std::vector<double> roots;
  auto sgn = [](double v) { return (v > 0) - (v < 0); };
  for (int i = 0; i < samples; ++i) {
    if (fs[i] == 0.0) {
      roots.push_back(xs[i]);
      continue;
    }
    if (i + 1 < samples && fs[i + 1] != 0.0 && sgn(fs[i]) != sgn(fs[i + 1])) {
      roots.push_back(bracketed_root(f, xs[i], xs[i + 1]));
    }
    if (i > 0 && i + 1 < samples && sgn(fs[i - 1]) == sgn(fs[i]) &&
        sgn(fs[i + 1]) == sgn(fs[i]) && std::abs(fs[i]) <= std::abs(fs[i - 1]) &&
        std::abs(fs[i]) <= std::abs(fs[i + 1])) {
      const double s = sgn(fs[i]);
      auto signed_f = [&](double x) { return s * f(x); };
      auto [xm, fm] = boost::math::tools::brent_find_minima(signed_f, xs[i - 1], xs[i + 1],
                                                            std::numeric_limits<double>::digits / 2);
      if (fm < 0) {
        roots.push_back(bracketed_root(f, xs[i - 1], xm));
        roots.push_back(bracketed_root(f, xm, xs[i + 1]));
      } else if (fm == 0) {
        roots.push_back(xm);
      }
    }
  }
  std::sort(roots.begin(), roots.end());
  const double merge = 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)});
  roots.erase(std::unique(roots.begin(), roots.end(),
                          [merge](double a, double b) { return std::abs(a - b) <= merge; }),
              roots.end());
  return roots;
}

}  // namespace mpferro
