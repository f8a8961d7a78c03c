#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mpferro/criticality.hpp"

using namespace mpferro;

namespace {

ModelSpec random_spec(std::mt19937_64& rng, int nu) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  ModelSpec s = equal_rademacher(nu, 1.0);
  double total = 0;
  for (auto& a : s.alpha) total += (a = u(rng));
  for (auto& a : s.alpha) a /= total;
  double rest = 1.0;
  for (int a = 0; a + 1 < nu; ++a) rest -= s.alpha[a];
  s.alpha.back() = rest;
  return s;
}

}  // namespace

TEST(Polynomial, ElementarySymmetric) {
  const auto e = elementary_symmetric({1, 2, 3});
  ASSERT_EQ(e.size(), 4u);
  EXPECT_EQ(e[0], 1);
  EXPECT_EQ(e[1], 6);
  EXPECT_EQ(e[2], 11);
  EXPECT_EQ(e[3], 6);
}

TEST(Polynomial, MatchesDirectDeterminant) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> b(0.0, 4.0);
  for (int nu = 2; nu <= 6; ++nu)
    for (int k = 0; k < 10; ++k) {
      const ModelSpec s = random_spec(rng, nu);
      const double beta = b(rng);
      EXPECT_NEAR(eval_polynomial(det_polynomial(s.alpha), beta), det_direct(s, beta), 1e-12);
    }
}

TEST(CriticalBeta, BipartiteClosedForm) {
  for (double a : {0.1, 0.3, 0.5, 0.77}) {
    const CriticalReport r = critical_beta(bipartite_rademacher(a, 1.0));
    EXPECT_NEAR(r.beta_c, 1.0 / std::sqrt(a * (1 - a)), 1e-12);
  }
  EXPECT_DOUBLE_EQ(critical_beta(equal_rademacher(2, 1.0)).beta_c, 2.0);
}

TEST(CriticalBeta, EqualPartiesClosedForm) {
  // Equal sizes: the all-ones direction carries eigenvalue beta (nu - 1) / nu.
  for (int nu = 3; nu <= 6; ++nu) {
    const CriticalReport r = critical_beta(equal_rademacher(nu, 1.0));
    EXPECT_NEAR(r.beta_c, nu / (nu - 1.0), 1e-12);
    EXPECT_LT(r.det_residual, 1e-12);
  }
  EXPECT_NEAR(critical_beta(equal_rademacher(3, 1.0)).beta_c, 1.5, 1e-12);
}

TEST(CriticalBeta, IndependentOfFieldAndDeterminantVanishes) {
  std::mt19937_64 rng(23);
  for (int nu = 2; nu <= 5; ++nu) {
    ModelSpec s = random_spec(rng, nu);
    const CriticalReport r = critical_beta(s);
    EXPECT_NEAR(det_direct(s, r.beta_c), 0.0, 1e-12);
    EXPECT_TRUE(r.minors_ok_below);
    for (auto& h : s.h) h = 0.3;
    EXPECT_EQ(critical_beta(s).beta_c, r.beta_c);
  }
}

TEST(Kernel, NullVectorOfLinearisation) {
  std::mt19937_64 rng(29);
  for (int nu = 2; nu <= 5; ++nu) {
    const ModelSpec s = random_spec(rng, nu);
    const CriticalReport r = critical_beta(s);
    const Matrix A = Matrix::Identity(nu, nu) - r.beta_c * coupling_matrix(s);
    EXPECT_LT((A * r.kernel).norm(), 1e-10);
    EXPECT_NEAR(r.kernel.norm(), 1.0, 1e-14);
    EXPECT_GT(r.kernel.minCoeff(), 0.0);  // Perron direction
  }
}

TEST(Kernel, BipartiteDirection) {
  // w proportional to (sqrt(alpha_2), sqrt(alpha_1)) at beta_c.
  const double a = 0.3;
  const Vector w = kernel_direction(bipartite_rademacher(a, 1.0));
  EXPECT_NEAR(w[0] / w[1], std::sqrt((1 - a) / a), 1e-10);
}

TEST(Minors, ThresholdIsMonotone) {
  std::mt19937_64 rng(31);
  for (int nu = 2; nu <= 5; ++nu) {
    const ModelSpec s = random_spec(rng, nu);
    const double bc = critical_beta(s).beta_c;
    EXPECT_TRUE(minors_check(s, 0.5 * bc).all_positive);
    EXPECT_TRUE(minors_check(s, bc * (1 - 1e-6)).all_positive);
    EXPECT_FALSE(minors_check(s, bc * (1 + 1e-6)).all_positive);
    EXPECT_FALSE(minors_check(s, 2 * bc).all_positive);
  }
}

TEST(Minors, EnumeratesEverySubset) {
  const MinorsReport r = minors_check(equal_rademacher(4, 1.0), 0.5);
  EXPECT_EQ(r.subsets.size(), 11u);  // C(4,2) + C(4,3) + C(4,4)
  EXPECT_EQ(r.values.size(), r.subsets.size());
}

TEST(Scaling, SquareRootExponentAndKappa) {
  const ScalingFit f = scaling_fit(bipartite_rademacher(0.5, 1.0), 1e-4, 1e-2, 9);
  EXPECT_NEAR(f.exponent, 0.5, 0.02);
  EXPECT_GT(f.r_squared, 0.999);
  EXPECT_LT(f.direction_error, 1e-3);
  EXPECT_NEAR(f.kappa * 24.0, 1.0, 0.02);
  EXPECT_EQ(f.eps.size(), 9u);
}

TEST(Scaling, TripartiteAndUnequal) {
  for (const ModelSpec& s : {bipartite_rademacher(0.3, 1.0), equal_rademacher(3, 1.0)}) {
    const ScalingFit f = scaling_fit(s, 1e-4, 1e-2, 7);
    EXPECT_NEAR(f.exponent, 0.5, 0.02);
    EXPECT_LT(f.direction_error, 1e-3);
  }
}

TEST(Scaling, RejectsBadRange) {
  EXPECT_THROW(scaling_fit(equal_rademacher(2, 1.0), 1e-2, 1e-4, 5), ConfigError);
}
