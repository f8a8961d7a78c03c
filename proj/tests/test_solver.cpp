#include <cmath>
#include <functional>

#include <gtest/gtest.h>

#include "mpferro/solver.hpp"

using namespace mpferro;

namespace {

// Equal-size bipartite +-1 at beta = 4: M = tanh(2M), A = -M^2 + log cosh 2M.
double bipartite_b4_oracle() {
  double M = 1.0;
  for (int i = 0; i < 200; ++i) M = std::tanh(2 * M);
  return -M * M + std::log(std::cosh(2 * M));
}

double golden_argmax(const std::function<double(double)>& f, double lo, double hi) {
  const double g = (std::sqrt(5.0) - 1) / 2;
  double a = lo, b = hi, c = b - g * (b - a), d = a + g * (b - a);
  for (int i = 0; i < 120; ++i) {
    if (f(c) > f(d)) b = d;
    else a = c;
    c = b - g * (b - a);
    d = a + g * (b - a);
  }
  return 0.5 * (a + b);
}

// sup over the cube of the +-1 mean-field functional, by a coarse grid and
// coordinate-wise golden refinement. Written without the library's entropy.
double brute_force_pressure(const ModelSpec& s) {
  const int n = s.nu();
  auto S = [](double m) {
    const double p = 0.5 * (1 + m), q = 0.5 * (1 - m);
    return -(p * std::log(p) + q * std::log(q));
  };
  auto F = [&](const std::vector<double>& m) {
    double v = 0;
    for (int a = 0; a < n; ++a) {
      v += s.alpha[a] * (s.beta * s.h[a] * m[a] + S(m[a]) - std::log(2.0));
      for (int b = a + 1; b < n; ++b) v += s.beta * s.alpha[a] * s.alpha[b] * m[a] * m[b];
    }
    return v;
  };
  const int g = 41;
  std::vector<double> best(n), cur(n);
  double fbest = -INFINITY;
  std::vector<int> idx(n, 0);
  while (true) {
    for (int a = 0; a < n; ++a) cur[a] = -0.99 + 1.98 * idx[a] / (g - 1);
    const double f = F(cur);
    if (f > fbest) {
      fbest = f;
      best = cur;
    }
    int a = 0;
    while (a < n && ++idx[a] == g) idx[a++] = 0;
    if (a == n) break;
  }
  for (int sweep = 0; sweep < 200; ++sweep)
    for (int a = 0; a < n; ++a)
      best[a] = golden_argmax([&](double x) {
        auto m = best;
        m[a] = x;
        return F(m);
      }, -1 + 1e-14, 1 - 1e-14);
  return F(best);
}

}  // namespace

TEST(Variational, BipartiteBetaFourGolden) {
  const double oracle = bipartite_b4_oracle();
  EXPECT_NEAR(oracle, 0.32652388742692384, 1e-14);
  const VariationalResult r = pressure_variational(bipartite_rademacher(0.5, 4.0), 2.0);
  EXPECT_NEAR(r.pressure, oracle, 1e-10);
  EXPECT_NEAR(r.m[0], 0.9575040240772688, 1e-9);
  EXPECT_GT(r.m[0], 0);  // tie broken towards the positive state
  EXPECT_EQ(r.saddles, 3);
}

TEST(Variational, IndependentOfC) {
  for (const ModelSpec& s : {bipartite_rademacher(0.35, 3.0, 0.1, -0.05), equal_rademacher(3, 2.2)}) {
    const double base = pressure_variational(s, s.nu()).pressure;
    for (double c : {s.nu() - 1.0, s.nu() - 0.5, 2.0 * s.nu(), 10.0})
      EXPECT_NEAR(pressure_variational(s, c).pressure, base, 1e-9) << c;
  }
}

TEST(Variational, MatchesBruteForceTripartite) {
  ModelSpec s = equal_rademacher(3, 2.0);
  s.alpha = {0.2, 0.3, 0.5};
  s.h = {0.05, -0.1, 0.0};
  EXPECT_NEAR(pressure_variational(s, 3.0).pressure, brute_force_pressure(s), 1e-9);
  s.beta = 1.0;
  s.h = {0, 0, 0};
  EXPECT_NEAR(pressure_variational(s, 3.0).pressure, brute_force_pressure(s), 1e-9);
}

TEST(Variational, MatchesBruteForceBipartiteWithField) {
  const ModelSpec s = bipartite_rademacher(0.4, 3.0, 0.2, -0.1);
  EXPECT_NEAR(pressure_variational(s, 2.0).pressure, brute_force_pressure(s), 1e-9);
}

TEST(Variational, ZeroTemperatureLimitAndBetaZero) {
  EXPECT_DOUBLE_EQ(pressure_variational(equal_rademacher(3, 0.0), 3.0).pressure, 0.0);
  ModelSpec s = equal_rademacher(2, 0.0);
  s.families[0] = SpinFamily::uniform();
  EXPECT_DOUBLE_EQ(pressure_variational(s, 2.0).pressure, 0.0);
}

TEST(Variational, UpperBound) {
  // Rigorous above the pressure; equal once every beta c alpha_a <= 1.
  const ModelSpec hot = bipartite_rademacher(0.5, 1.0, 0.1, 0.0);
  const VariationalResult a = pressure_variational(hot, 1.5);
  EXPECT_NEAR(a.upper_bound, a.pressure, 1e-10);
  const VariationalResult b = pressure_variational(bipartite_rademacher(0.5, 4.0), 2.0);
  EXPECT_GT(b.upper_bound, b.pressure + 0.5);
  EXPECT_NEAR(b.upper_bound, 1.307189, 1e-6);
}

TEST(Variational, RejectsSmallC) {
  EXPECT_THROW(pressure_variational(equal_rademacher(3, 1.0), 1.9), ConfigError);
}

TEST(EnergyEntropy, EqualsEntropicAtStationaryPoints) {
  ModelSpec s = equal_rademacher(3, 3.0);
  s.h = {0.1, 0.0, -0.2};
  for (const auto& p : solve_self_consistency(s))
    EXPECT_NEAR(entropic_functional(s, p.m), p.pressure, 1e-10);
}

TEST(Entropy, MatchesNumericLegendreTransform) {
  for (const SpinFamily& f : {SpinFamily::rademacher(), SpinFamily::uniform(), SpinFamily::three_point(0.3)})
    for (double frac : {-0.9, -0.2, 0.0, 0.5, 0.97}) {
      const double M = frac * f.hull_max();
      const double t = golden_argmax([&](double t) { return t * M - cgf(f, t, 0).value; }, -60, 60);
      EXPECT_NEAR(entropy_rate(f, M), -(t * M - cgf(f, t, 0).value), 1e-9);
    }
}

TEST(Entropy, Endpoints) {
  EXPECT_NEAR(entropy_rate(SpinFamily::rademacher(), 1.0), std::log(0.5), 1e-15);
  EXPECT_EQ(entropy_rate(SpinFamily::uniform(), std::sqrt(3.0)), -INFINITY);
  EXPECT_THROW(entropy_rate(SpinFamily::rademacher(), 1.1), std::domain_error);
}

TEST(Solve, HighTemperatureHasOnlyTheTrivialPoint) {
  const auto pts = solve_self_consistency(equal_rademacher(3, 1.2));
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_EQ(pts[0].m.norm(), 0.0);
  EXPECT_EQ(pts[0].stability, Stability::stable);
}

TEST(Solve, LowTemperatureLabels) {
  const auto pts = solve_self_consistency(bipartite_rademacher(0.5, 4.0));
  ASSERT_EQ(pts.size(), 3u);
  EXPECT_EQ(pts[0].stability, Stability::stable);
  EXPECT_EQ(pts[1].stability, Stability::unstable);
  EXPECT_EQ(pts[2].stability, Stability::stable);
  for (const auto& p : pts) EXPECT_LT(p.residual, 1e-10);
}

TEST(Solve, MetastableStateInField) {
  ModelSpec s = equal_rademacher(3, 3.0);
  s.alpha = {0.3, 0.3, 0.4};
  s.h = {0.1, 0.0, 0.0};
  int stable = 0, metastable = 0;
  for (const auto& p : solve_self_consistency(s)) {
    stable += p.stability == Stability::stable;
    metastable += p.stability == Stability::metastable;
    if (p.stability == Stability::metastable) {
      EXPECT_LT(p.m[0], 0);
    }
  }
  EXPECT_EQ(stable, 1);
  EXPECT_EQ(metastable, 1);
}

TEST(Solve, FieldReversalMirrorsSolutions) {
  ModelSpec s = bipartite_rademacher(0.3, 3.5, 0.1, 0.2);
  const auto a = solve_self_consistency(s);
  s.h = {-0.1, -0.2};
  const auto b = solve_self_consistency(s);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_LT((a[i].m + b[a.size() - 1 - i].m).norm(), 1e-10);
    EXPECT_NEAR(a[i].pressure, b[a.size() - 1 - i].pressure, 1e-12);
  }
}

TEST(Solve, ThreadCountDoesNotChangeResult) {
  ModelSpec s = equal_rademacher(3, 2.7);
  s.h = {0.02, -0.01, 0.0};
  StartGrid one, four;
  four.threads = 4;
  const auto a = solve_self_consistency(s, one), b = solve_self_consistency(s, four);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].m, b[i].m);
  EXPECT_EQ(pressure_variational(s, 3.0, one).pressure, pressure_variational(s, 3.0, four).pressure);
}

TEST(Classify, RejectsNonStationaryInput) {
  Vector m(2);
  m << 0.5, 0.1;
  EXPECT_THROW(classify_stationary(bipartite_rademacher(0.5, 4.0), m), std::invalid_argument);
  EXPECT_EQ(classify_stationary(bipartite_rademacher(0.5, 4.0), Vector::Zero(2)), Stability::unstable);
}

TEST(Entropic, PressureEqualsVariational) {
  ModelSpec s = equal_rademacher(4, 2.0);
  s.alpha = {0.1, 0.2, 0.3, 0.4};
  s.h = {0.0, 0.1, 0.0, -0.05};
  EXPECT_NEAR(entropic_pressure(s, solve_self_consistency(s)), pressure_variational(s, 4.0).pressure, 1e-9);
}
