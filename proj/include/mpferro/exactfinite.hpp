#pragma once

// Exact finite-N Gibbs sums over magnetisation sectors. A party of N_a spins
// with lattice support contributes the law of its empirical mean (log
// probabilities under the product measure), so log Z_N is a log-sum-exp over
// at most prod_a (sectors_a) terms instead of a sum over configurations.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "mpferro/criticality.hpp"
#include "mpferro/errors.hpp"
#include "mpferro/genferro.hpp"
#include "mpferro/model.hpp"
#include "mpferro/parallel.hpp"
#include "mpferro/spins.hpp"

namespace mpferro {

/// Law of the empirical mean of N i.i.d. spins: values m and log P(m).
struct SectorTable {
  long N = 0;
  std::vector<double> m;
  std::vector<double> logp;
};

namespace detail {

inline double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

inline std::vector<double> log_convolve(const std::vector<double>& a, const std::vector<double>& b) {
  const double ninf = -std::numeric_limits<double>::infinity();
  std::vector<double> out(a.size() + b.size() - 1, ninf);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const std::size_t lo = k >= b.size() - 1 ? k - (b.size() - 1) : 0;
    const std::size_t hi = std::min(k, a.size() - 1);
    double mx = ninf;
    for (std::size_t i = lo; i <= hi; ++i) mx = std::max(mx, a[i] + b[k - i]);
    if (mx == ninf) continue;
    double s = 0;
    for (std::size_t i = lo; i <= hi; ++i) s += std::exp(a[i] + b[k - i] - mx);
    out[k] = mx + std::log(s);
  }
  return out;
}

/// Streaming log-sum-exp with weighted observables.
struct LogAccumulator {
  double max = -std::numeric_limits<double>::infinity();
  double sum = 0;
  std::vector<double> obs;

  explicit LogAccumulator(std::size_t k = 0) : obs(k, 0.0) {}

  void add(double lw, const double* f) {
    if (lw > max) {
      const double scale = max == -std::numeric_limits<double>::infinity() ? 0.0 : std::exp(max - lw);
      sum *= scale;
      for (double& o : obs) o *= scale;
      max = lw;
    }
    const double w = std::exp(lw - max);
    sum += w;
    for (std::size_t i = 0; i < obs.size(); ++i) obs[i] += w * f[i];
  }

  void merge(const LogAccumulator& o) {
    if (o.max == -std::numeric_limits<double>::infinity()) return;
    if (o.max > max) {
      const double scale = max == -std::numeric_limits<double>::infinity() ? 0.0 : std::exp(max - o.max);
      sum *= scale;
      for (double& x : obs) x *= scale;
      max = o.max;
    }
    const double s = std::exp(o.max - max);
    sum += s * o.sum;
    for (std::size_t i = 0; i < obs.size(); ++i) obs[i] += s * o.obs[i];
  }

  double log_total() const { return max + std::log(sum); }
};

}  // namespace detail

/// Sector table for N spins. Finite support on a lattice x_0 + d Z only.
inline SectorTable sector_table(const SpinFamily& family, long N) {
  if (N < 1) throw ConfigError("sector_table: N must be >= 1");
  if (!family.finite_support()) throw ConfigError("sector_table: exact enumeration needs finite support");
  SectorTable t;
  t.N = N;
  const double Nd = static_cast<double>(N);
  if (family.kind() == SpinKind::rademacher) {
    const double lg = std::lgamma(Nd + 1.0);
    for (long k = 0; k <= N; ++k) {
      t.m.push_back((2.0 * k - Nd) / Nd);
      t.logp.push_back(lg - std::lgamma(k + 1.0) - std::lgamma(Nd - k + 1.0) - Nd * std::log(2.0));
    }
    return t;
  }
  std::vector<std::pair<double, double>> atoms;
  for (std::size_t i = 0; i < family.support().size(); ++i)
    if (family.weights()[i] > 0) atoms.emplace_back(family.support()[i], family.weights()[i]);
  detail::merge_atoms(atoms);
  const double x0 = atoms.front().first;
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < atoms.size(); ++i) d = std::min(d, atoms[i].first - atoms[i - 1].first);
  std::vector<double> one;
  if (atoms.size() == 1) {
    one = {0.0};
    d = 1.0;
  } else {
    const double span = (atoms.back().first - x0) / d;
    if (span > 1e4) throw ConfigError("sector_table: support lattice too fine");
    one.assign(static_cast<std::size_t>(std::llround(span)) + 1, -std::numeric_limits<double>::infinity());
    for (const auto& [x, w] : atoms) {
      const double j = (x - x0) / d;
      if (std::abs(j - std::round(j)) > 1e-9)
        throw ConfigError("sector_table: support is not on a lattice; exact enumeration unavailable");
      one[static_cast<std::size_t>(std::llround(j))] = std::log(w);
    }
  }
  // Binary powering of the one-spin law.
  std::vector<double> result{0.0}, base = one;
  for (long e = N; e > 0; e >>= 1) {
    if (e & 1) result = detail::log_convolve(result, base);
    if (e > 1) base = detail::log_convolve(base, base);
  }
  for (std::size_t j = 0; j < result.size(); ++j) {
    t.m.push_back((Nd * x0 + d * static_cast<double>(j)) / Nd);
    t.logp.push_back(result[j]);
  }
  return t;
}

enum class SumRoute { joint, marginal };

constexpr double kSectorGuard = 1e8;

namespace detail {

struct Ensemble {
  ModelSpec spec;  ///< alpha replaced by N_a / N
  std::vector<long> Ns;
  long N = 0;
  std::vector<SectorTable> tables;
};

inline Ensemble make_ensemble(const ModelSpec& spec, const std::vector<long>& Ns, SumRoute route) {
  if (static_cast<int>(Ns.size()) != spec.nu()) throw ConfigError("exact: need one N per party");
  Ensemble e;
  e.spec = spec;
  e.Ns = Ns;
  e.N = std::accumulate(Ns.begin(), Ns.end(), 0L);
  for (int a = 0; a < spec.nu(); ++a) {
    if (Ns[a] < 1) throw ConfigError("exact: every N_a must be >= 1");
    e.spec.alpha[a] = static_cast<double>(Ns[a]) / e.N;
  }
  const int enumerated = route == SumRoute::joint ? spec.nu() : spec.nu() - 1;
  double count = 1;
  for (int a = 0; a < enumerated; ++a) {
    e.tables.push_back(sector_table(spec.families[a], Ns[a]));
    count *= static_cast<double>(e.tables.back().m.size());
  }
  if (count > kSectorGuard) throw ConfigError("exact: sector count exceeds the 1e8 guard");
  return e;
}

/// Sum over sectors of exp(log weight) with observables f(m) (k values each).
/// Rows (first-party sectors) are independent; they are merged in index order.
inline detail::LogAccumulator sector_sum(const Ensemble& e, SumRoute route, std::size_t k,
                                         const std::function<void(const Vector&, double*)>& f, int threads) {
  const ModelSpec& s = e.spec;
  const int n = s.nu();
  const int enumerated = static_cast<int>(e.tables.size());
  const double Nd = static_cast<double>(e.N);
  const std::size_t rows = e.tables[0].m.size();
  std::vector<detail::LogAccumulator> acc(rows, detail::LogAccumulator(k));

  parallel_for(rows, threads, [&](std::size_t r) {
    Vector m = Vector::Zero(n);
    std::vector<std::size_t> idx(enumerated, 0);
    idx[0] = r;
    std::vector<double> fv(k);
    while (true) {
      double lw = 0;
      for (int a = 0; a < enumerated; ++a) {
        m[a] = e.tables[a].m[idx[a]];
        lw += e.tables[a].logp[idx[a]];
      }
      double pair = 0, field = 0;
      for (int a = 0; a < enumerated; ++a) {
        field += s.alpha[a] * s.h[a] * m[a];
        for (int b = a + 1; b < enumerated; ++b) pair += s.alpha[a] * s.alpha[b] * m[a] * m[b];
      }
      lw += Nd * s.beta * (pair + field);
      if (route == SumRoute::marginal) {
        // Last party summed exactly: N_last phi_last(beta sum_{a<last} alpha_a m_a + beta h_last).
        const int last = n - 1;
        double t = s.beta * s.h[last];
        for (int a = 0; a < enumerated; ++a) t += s.beta * s.alpha[a] * m[a];
        lw += static_cast<double>(e.Ns[last]) * cgf(s.families[last], t, 0).value;
        m[last] = cgf(s.families[last], t, 1).d1;  // conditional mean of m_last
      }
      if (k > 0) f(m, fv.data());
      acc[r].add(lw, fv.data());
      int a = enumerated - 1;
      while (a >= 1) {
        if (++idx[a] < e.tables[a].m.size()) break;
        idx[a] = 0;
        --a;
      }
      if (a < 1) break;
    }
  });
  detail::LogAccumulator total(k);
  for (const auto& a : acc) total.merge(a);
  return total;
}

}  // namespace detail

/// A_N = (1/N) log Z_N, normalised by the product measure (so beta = 0, h = 0 gives 0).
/// alpha_a is taken as N_a / N.
inline double exact_logZ(const ModelSpec& spec, const std::vector<long>& Ns, SumRoute route = SumRoute::joint,
                         int threads = 1) {
  const auto e = detail::make_ensemble(spec, Ns, route);
  const auto acc = detail::sector_sum(e, route, 0, {}, threads);
  return acc.log_total() / static_cast<double>(e.N);
}

/// Gibbs expectations of prod_a m_a^{p_a}, one per power vector. Joint route.
inline std::vector<double> exact_moments(const ModelSpec& spec, const std::vector<long>& Ns,
                                         const std::vector<std::vector<int>>& powers, int threads = 1) {
  const auto e = detail::make_ensemble(spec, Ns, SumRoute::joint);
  for (const auto& p : powers)
    if (static_cast<int>(p.size()) != spec.nu()) throw ConfigError("exact_moments: power vector size");
  auto f = [&](const Vector& m, double* out) {
    for (std::size_t i = 0; i < powers.size(); ++i) {
      double v = 1;
      for (int a = 0; a < m.size(); ++a)
        for (int q = 0; q < powers[i][a]; ++q) v *= m[a];
      out[i] = v;
    }
  };
  const auto acc = detail::sector_sum(e, SumRoute::joint, powers.size(), f, threads);
  std::vector<double> out(powers.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = acc.obs[i] / acc.sum;
  return out;
}

// ---------------------------------------------------------------------------
// Fluctuations

struct FluctuationStats {
  std::vector<long> Ns;
  Matrix covariance;  ///< Cov(sqrt(N_a) m_a)
  Matrix predicted;
  double max_rel_deviation = 0;
  double kurtosis_ratio = 0;  ///< E z^4 / (E z^2)^2, z = m . w
  double kurtosis_predicted = 0;
  double var_perp_quarter = 0;  ///< Var(N^{1/4} m . w_perp)
  double var_w_quarter = 0;     ///< Var(N^{1/4} m . w)
  double var_w_sqrt = 0;        ///< Var(N^{1/2} m . w)
};

/// E z^4 / (E z^2)^2 for the density exp(p z^4 / 4!) on the line, p < 0; by quadrature.
inline double quartic_density_kurtosis(double p) {
  if (!(p < 0)) throw std::domain_error("quartic_density_kurtosis: quartic coefficient must be negative");
  boost::math::quadrature::exp_sinh<double> q;
  auto moment = [&](int k) {
    return q.integrate([&](double z) {
      const double e = p * z * z * z * z / 24.0;
      return e < -700.0 ? 0.0 : std::pow(z, k) * std::exp(e);
    });
  };
  const double m0 = moment(0), m2 = moment(2), m4 = moment(4);
  return (m4 / m0) / ((m2 / m0) * (m2 / m0));
}

/// Cov(sqrt(N_1) m_1, sqrt(N_2) m_2) against the paramagnetic prediction.
inline FluctuationStats fluct_covariance(const ModelSpec& spec, const std::vector<long>& Ns, int threads = 1) {
  if (spec.nu() != 2) throw ConfigError("fluct_covariance: nu must be 2");
  if (!spec.zero_field()) throw ConfigError("fluct_covariance: needs h = 0");
  const double bc = 1.0 / std::sqrt(spec.alpha[0] * spec.alpha[1]);
  if (!(spec.beta < bc)) throw std::domain_error("fluct_covariance: needs beta < beta_c");
  const auto mom = exact_moments(spec, Ns, {{2, 0}, {1, 1}, {0, 2}}, threads);
  FluctuationStats st;
  st.Ns = Ns;
  const double n1 = static_cast<double>(Ns[0]), n2 = static_cast<double>(Ns[1]);
  st.covariance.resize(2, 2);
  st.covariance << n1 * mom[0], std::sqrt(n1 * n2) * mom[1], std::sqrt(n1 * n2) * mom[1], n2 * mom[2];
  const double b = spec.beta, den = bc * bc - b * b;
  st.predicted.resize(2, 2);
  st.predicted << bc * bc / den, b * bc / den, b * bc / den, bc * bc / den;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double p = st.predicted(i, j);
      const double dev = p == 0 ? std::abs(st.covariance(i, j)) : std::abs(st.covariance(i, j) - p) / std::abs(p);
      st.max_rel_deviation = std::max(st.max_rel_deviation, dev);
    }
  return st;
}

/// Moments of m . w and m . w_perp at beta_c, against the quartic-density law.
inline FluctuationStats critical_fluct_stats(const ModelSpec& spec, const std::vector<long>& Ns, int threads = 1) {
  if (spec.nu() != 2) throw ConfigError("critical_fluct_stats: nu must be 2");
  if (!spec.zero_field()) throw ConfigError("critical_fluct_stats: needs h = 0");
  const CriticalReport cr = critical_beta(spec);
  if (std::abs(spec.beta - cr.beta_c) > 1e-9 * cr.beta_c) throw std::domain_error("critical_fluct_stats: needs beta = beta_c");
  const Vector w = cr.kernel;
  Vector wp(2);
  wp << w[1], -w[0];
  const auto mom = exact_moments(spec, Ns,
                                 {{2, 0}, {1, 1}, {0, 2}, {4, 0}, {3, 1}, {2, 2}, {1, 3}, {0, 4}}, threads);
  auto quad = [&](const Vector& v) { return v[0] * v[0] * mom[0] + 2 * v[0] * v[1] * mom[1] + v[1] * v[1] * mom[2]; };
  auto quart = [&](const Vector& v) {
    const double a = v[0], b = v[1];
    return a * a * a * a * mom[3] + 4 * a * a * a * b * mom[4] + 6 * a * a * b * b * mom[5] + 4 * a * b * b * b * mom[6] +
           b * b * b * b * mom[7];
  };
  FluctuationStats st;
  st.Ns = Ns;
  const double N = static_cast<double>(Ns[0] + Ns[1]);
  const double z2 = quad(w), z4 = quart(w);
  st.kurtosis_ratio = z4 / (z2 * z2);
  st.var_w_quarter = std::sqrt(N) * z2;
  st.var_w_sqrt = N * z2;
  st.var_perp_quarter = std::sqrt(N) * quad(wp);
  const double a = spec.alpha[0];
  st.kurtosis_predicted =
      quartic_density_kurtosis(a * cumulant(spec.families[0], 4) + (1 - a) * cumulant(spec.families[1], 4));
  return st;
}

struct GfFluctStats {
  long N = 0;
  double beta = 0;
  bool critical = false;
  double variance = 0;  ///< Var(sqrt(N) m)
  double chi = 0;       ///< 1 / (1 - beta u''(0)), below beta_c
  double kurtosis_ratio = 0;
  double kurtosis_predicted = 0;  ///< from exp((P4 + P4^u) x^4 / 4!), at beta_c
};

/// One party with Z_N = E exp(N beta u(m)), enumerated exactly.
inline GfFluctStats gf_fluct_check(const EnergyFunction& u, const SpinFamily& family, double beta, long N) {
  const double bc = gf_critical_beta(u);
  if (beta > bc * (1 + 1e-9)) throw std::domain_error("gf_fluct_check: needs beta <= beta_c");
  const SectorTable t = sector_table(family, N);
  detail::LogAccumulator acc(2);
  for (std::size_t i = 0; i < t.m.size(); ++i) {
    const double m = t.m[i];
    const double f[2] = {m * m, m * m * m * m};
    acc.add(t.logp[i] + static_cast<double>(N) * beta * u.eval(m, 0).value, f);
  }
  const double m2 = acc.obs[0] / acc.sum, m4 = acc.obs[1] / acc.sum;
  GfFluctStats st;
  st.N = N;
  st.beta = beta;
  st.variance = static_cast<double>(N) * m2;
  st.kurtosis_ratio = m4 / (m2 * m2);
  st.critical = std::abs(beta - bc) <= 1e-9 * bc;
  if (st.critical) {
    st.kurtosis_predicted = quartic_density_kurtosis(cumulant(family, 4) + quartic_cumulant_u(u, beta));
  } else {
    st.chi = 1.0 / (1.0 - beta * u.curvature_at_zero());
  }
  return st;
}

}  // namespace mpferro
