#include <cmath>
#include <functional>

#include <gtest/gtest.h>

#include "mpferro/bipartite.hpp"
#include "mpferro/solver.hpp"

using namespace mpferro;

namespace {

double bisect(const std::function<double(double)>& f, double lo, double hi) {
  double flo = f(lo);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi), fm = f(mid);
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double fd(const std::function<double(double)>& f, double x, double h = 1e-5) {
  return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h);
}

}  // namespace

TEST(Marginal, DerivativesMatchFiniteDifferences) {
  const Bipartite b = Bipartite::from(bipartite_rademacher(0.35, 3.2, -0.1, 0.2));
  for (double M : {-0.8, -0.3, 0.0, 0.4, 0.9}) {
    EXPECT_NEAR(b.dA1(M), fd([&](double x) { return b.A1(x); }, M), 1e-8);
    EXPECT_NEAR(b.dg(M), fd([&](double x) { return b.g(x); }, M), 1e-8);
    EXPECT_NEAR(b.d2A1(M), fd([&](double x) { return b.dA1(x); }, M), 1e-8);
  }
}

TEST(Marginal, StationaryPointsAreSelfConsistent) {
  const ModelSpec s = bipartite_rademacher(0.4, 4.0, 0.05, -0.02);
  const Bipartite b = Bipartite::from(s);
  for (double M : b.stationary_m1()) {
    Vector m(2);
    m << M, b.induced_m2(M);
    EXPECT_LT(self_consistency_residual(s, m).lpNorm<Eigen::Infinity>(), 1e-10);
    EXPECT_NEAR(b.A1(M), pressure_energy_entropy(s, m), 1e-12);
  }
}

TEST(Marginal, BothMarginalsAgreeAtOptimum) {
  for (double h1 : {0.0, 0.1})
    for (double h2 : {0.0, -0.15}) {
      const ModelSpec s = bipartite_rademacher(0.3, 3.0, h1, h2);
      const Bipartite b = Bipartite::from(s);
      const MarginalOptimum o = marginal_optimum(s);
      EXPECT_NEAR(b.A2(o.m2), o.pressure, 1e-10);
      double best2 = -INFINITY;
      for (int i = 0; i <= 20000; ++i) best2 = std::max(best2, b.A2(-1 + i / 10000.0));
      EXPECT_NEAR(best2, o.pressure, 1e-7);
    }
}

TEST(Marginal, OptimumEqualsSolverPressure) {
  const ModelSpec s = bipartite_rademacher(0.5, 4.0);
  EXPECT_NEAR(marginal_optimum(s).pressure, 0.32652388742692384, 1e-12);
  EXPECT_NEAR(marginal_pressure(s, 0.0), 0.0, 1e-15);
}

TEST(Marginal, WeakCouplingLimit) {
  // beta -> 0 with beta h fixed: independent parties, A = sum_a alpha_a log cosh(beta h_a).
  const ModelSpec s = bipartite_rademacher(0.3, 1e-4, 2000.0, -1000.0);
  const double want = 0.3 * std::log(std::cosh(0.2)) + 0.7 * std::log(std::cosh(-0.1));
  EXPECT_NEAR(marginal_optimum(s).pressure, want, 1e-6);
}

TEST(CriticalLines, LineOneZeroesTheResidual) {
  const ModelSpec s = bipartite_rademacher(0.4, 3.0);
  std::vector<double> grid;
  for (int i = -10; i <= 10; ++i) grid.push_back(0.07 * i);
  for (const auto& p : critical_lines(s, grid)) {
    EXPECT_LT(p.residual1, 1e-14);
    if (!std::isnan(p.line2_h1)) {
      EXPECT_LT(p.residual2, 1e-10);
    }
    EXPECT_NEAR(p.line1_h1, -0.6 * std::tanh(3.0 * p.h2), 1e-15);
  }
}

TEST(CriticalLines, OnlyOriginBelowCritical) {
  const auto hits = coupled_line_intersections(bipartite_rademacher(0.5, 1.0), 60);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_LT(std::hypot(hits[0].first, hits[0].second), 1e-10);
}

TEST(CriticalLines, ThreePointsAboveCritical) {
  const auto hits = coupled_line_intersections(bipartite_rademacher(0.5, 4.0), 60);
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_NEAR(hits[0].second, -hits[2].second, 1e-10);
}

TEST(CriticalFields, MatchIndependentOracles) {
  const ModelSpec s = bipartite_rademacher(0.5, 4.0);
  const auto cf = critical_fields(s);
  ASSERT_TRUE(cf);
  EXPECT_NEAR(cf->h_c1, std::acosh(2.0) / 4.0, 1e-10);
  // Line intersection: h2 = (1/2) tanh(2 tanh(4 h2)).
  const double t = bisect([](double x) { return 0.5 * std::tanh(2 * std::tanh(4 * x)) - x; }, 0.05, 0.5);
  EXPECT_NEAR(cf->h_c2, t, 1e-12);
  EXPECT_NEAR(cf->h_c2_crossing, cf->h_c2, 1e-6);
  EXPECT_LT(cf->h_c1, cf->h_c2);
  EXPECT_LT(cf->h_c2, cf->h_c3);
}

TEST(CriticalFields, SpinodalIsAFold) {
  // g(-1) > 0 always. While the M_- branch exists g dips below zero on the
  // negative side; past h_c3 it no longer does.
  const ModelSpec s = bipartite_rademacher(0.5, 4.0);
  const auto cf = critical_fields(s);
  ASSERT_TRUE(cf);
  const Bipartite base = Bipartite::from(s);
  auto min_g = [&](double h2) {
    const Bipartite b = base.with_fields(line1_h1(base, h2), h2);
    double lo = INFINITY;
    for (int i = 0; i <= 20000; ++i) lo = std::min(lo, b.g(-1 + i * 0.9 / 20000));
    return lo;
  };
  EXPECT_LT(min_g(cf->h_c3 - 1e-4), 0.0);
  EXPECT_GT(min_g(cf->h_c3 + 1e-4), 0.0);
}

TEST(CriticalFields, NoneBelowCritical) {
  EXPECT_FALSE(critical_fields(bipartite_rademacher(0.5, 1.9)));
}

TEST(Landscape, RegimeSequence) {
  const ModelSpec s = bipartite_rademacher(0.5, 4.0);
  const auto cf = critical_fields(s);
  ASSERT_TRUE(cf);
  EXPECT_EQ(landscape_scan(s, 0.5 * cf->h_c1).regime, Regime::R3);
  EXPECT_EQ(landscape_scan(s, 0.5 * (cf->h_c1 + cf->h_c2)).regime, Regime::R2);
  EXPECT_EQ(landscape_scan(s, 0.5 * (cf->h_c2 + cf->h_c3)).regime, Regime::R1);
  EXPECT_EQ(landscape_scan(s, 1.2 * cf->h_c3).regime, Regime::R0);
}

TEST(Landscape, MirrorSymmetry) {
  const ModelSpec s = bipartite_rademacher(0.5, 4.0);
  const LandscapeReport a = landscape_scan(s, 0.3), b = landscape_scan(s, -0.3);
  ASSERT_EQ(a.points.size(), b.points.size());
  EXPECT_EQ(a.regime, b.regime);
  EXPECT_DOUBLE_EQ(a.h1, -b.h1);
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    const auto& p = a.points[i];
    const auto& q = b.points[a.points.size() - 1 - i];
    EXPECT_DOUBLE_EQ(p.m1, -q.m1);
    EXPECT_NEAR(p.pressure, q.pressure, 1e-14);
    EXPECT_EQ(p.label, q.label);
  }
}

TEST(Landscape, HighTemperatureSingleMinimum) {
  const ModelSpec s = bipartite_rademacher(0.5, 1.0);
  for (double h2 : {-1.0, -0.3, 0.0, 0.45, 1.0}) {
    const LandscapeReport r = landscape_scan(s, h2);
    EXPECT_EQ(r.regime, Regime::R0);
    ASSERT_EQ(r.points.size(), 1u);
    EXPECT_EQ(r.points[0].m1, 0.0);
    EXPECT_EQ(r.points[0].label, PointLabel::global_min);
  }
}

TEST(Jump, MagnetisationTwoChangesSign) {
  const auto j = first_order_jump(bipartite_rademacher(0.5, 4.0));
  ASSERT_TRUE(j);
  EXPECT_LT(j->m1_before, -0.9);
  EXPECT_EQ(j->m1_after, 0.0);
  EXPECT_LT(j->m2_before, 0.0);
  EXPECT_GT(j->m2_after, 0.9);
}

TEST(Profile, EvenGrid) {
  const auto p = marginal_profile(bipartite_rademacher(0.5, 4.0), 5);
  ASSERT_EQ(p.size(), 5u);
  EXPECT_DOUBLE_EQ(p[0].first, -1.0);
  EXPECT_DOUBLE_EQ(p[2].first, 0.0);
  EXPECT_NEAR(p[0].second, p[4].second, 1e-15);
}
