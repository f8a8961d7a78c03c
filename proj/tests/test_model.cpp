#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mpferro/model.hpp"

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

TEST(Hamiltonian, WorkedValues) {
  EXPECT_DOUBLE_EQ(hamiltonian(equal_rademacher(2, 1), Vector::Ones(2), 4), -1.0);
  EXPECT_NEAR(hamiltonian(equal_rademacher(3, 1), Vector::Ones(3), 3), -1.0, 1e-15);
  ModelSpec s = bipartite_rademacher(0.5, 1, 1.0, 0.0);
  Vector m(2);
  m << 1, -1;
  EXPECT_DOUBLE_EQ(hamiltonian(s, m, 2), -0.5);
}

TEST(Hamiltonian, FlipSymmetricAtZeroField) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int nu = 2; nu <= 5; ++nu) {
    const ModelSpec s = random_spec(rng, nu);
    Vector m(nu);
    for (int a = 0; a < nu; ++a) m[a] = u(rng);
    EXPECT_DOUBLE_EQ(hamiltonian(s, m, 100), hamiltonian(s, Vector(-m), 100));
  }
}

TEST(Hamiltonian, RejectsBadInput) {
  const ModelSpec s = equal_rademacher(2, 1);
  EXPECT_THROW(hamiltonian(s, Vector::Ones(3), 10), ConfigError);
  EXPECT_THROW(hamiltonian(s, Vector::Constant(2, 1.5), 10), ConfigError);
  EXPECT_THROW(hamiltonian(s, Vector::Ones(2), 1), ConfigError);
}

TEST(ModelSpec, Validation) {
  EXPECT_NO_THROW(equal_rademacher(3, 1).validate());
  ModelSpec s = equal_rademacher(2, 1);
  s.alpha = {0.5, 0.6};
  EXPECT_THROW(s.validate(), ConfigError);
  s = equal_rademacher(2, 1);
  s.alpha = {1.0};
  s.h = {0};
  s.families.pop_back();
  EXPECT_THROW(s.validate(), ConfigError);
  s = equal_rademacher(2, -1);
  EXPECT_THROW(s.validate(), ConfigError);
  s = equal_rademacher(2, 1);
  s.families[1] = SpinFamily::three_point(0.5, 1.0);
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Interaction, WorkedMatrices) {
  const auto d = interaction_matrices(equal_rademacher(2, 1), 2.0);
  Matrix expect(2, 2);
  expect << 0.5, -0.25, -0.25, 0.5;
  EXPECT_LT((d.Jc - expect).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(d.tc_eigenvalues[0], 1.0, 1e-12);
  EXPECT_NEAR(d.tc_eigenvalues[1], 3.0, 1e-12);
}

TEST(Interaction, DegenerateAtNuMinusOne) {
  const auto d = interaction_matrices(equal_rademacher(2, 1), 1.0);
  EXPECT_NEAR(d.tc_eigenvalues[0], 0.0, 1e-12);
  EXPECT_NEAR(d.tc_eigenvalues[1], 2.0, 1e-12);
  Eigen::FullPivLU<Matrix> lu(d.P);
  lu.setThreshold(1e-12);
  EXPECT_EQ(lu.rank(), 1);
}

TEST(Interaction, RefusesSmallC) {
  EXPECT_THROW(interaction_matrices(equal_rademacher(3, 1), 1.5), ConfigError);
}

TEST(Interaction, FactorAndSpectrumRandom) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> nu_d(2, 5);
  std::uniform_real_distribution<double> extra(0.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int nu = nu_d(rng);
    const ModelSpec s = random_spec(rng, nu);
    const double c = nu - 1.0 + (trial % 10 == 0 ? 0.0 : extra(rng));
    const auto d = interaction_matrices(s, c);
    EXPECT_LT((d.P.transpose() * d.P - d.Jc).cwiseAbs().rowwise().sum().maxCoeff(), 1e-12);
    // Jc entrywise from its definition.
    for (int a = 0; a < nu; ++a)
      for (int b = 0; b < nu; ++b) {
        const double want = a == b ? c * s.alpha[a] * s.alpha[a] : -s.alpha[a] * s.alpha[b];
        EXPECT_NEAR(d.Jc(a, b), want, 1e-14);
      }
    EXPECT_NEAR(d.tc_eigenvalues[0], c + 1 - nu, 1e-10);
    for (int k = 1; k < nu; ++k) EXPECT_NEAR(d.tc_eigenvalues[k], c + 1, 1e-10);
    // Jc is PSD exactly when c >= nu - 1.
    Eigen::SelfAdjointEigenSolver<Matrix> es(d.Jc);
    EXPECT_GT(es.eigenvalues().minCoeff(), -1e-12);
  }
}

TEST(Interaction, JcIndefiniteBelowThreshold) {
  // Below c = nu - 1 the completion still has a negative direction: alpha itself.
  const ModelSpec s = equal_rademacher(3, 1);
  const Vector a = s.alpha_vector();
  const Matrix J = a * a.transpose() - Matrix(a.array().square().matrix().asDiagonal());
  const Matrix Jc = 1.5 * Matrix(a.array().square().matrix().asDiagonal()) - J;
  Eigen::SelfAdjointEigenSolver<Matrix> es(Jc);
  EXPECT_LT(es.eigenvalues().minCoeff(), 0.0);
}

TEST(Interaction, JIsIndefinite) {
  std::mt19937_64 rng(5);
  for (int nu = 2; nu <= 6; ++nu) {
    const ModelSpec s = random_spec(rng, nu);
    const auto d = interaction_matrices(s, nu);
    Eigen::SelfAdjointEigenSolver<Matrix> es(d.J);
    EXPECT_LT(es.eigenvalues().minCoeff(), 0.0);
    EXPECT_GT(es.eigenvalues().maxCoeff(), 0.0);
  }
}

TEST(Model, CouplingAndLocalFields) {
  ModelSpec s = equal_rademacher(3, 2.0);
  s.h = {0.1, 0.0, -0.1};
  Vector m(3);
  m << 0.3, -0.2, 0.5;
  const Vector t = local_fields(s, m);
  const Vector direct = s.beta * s.field_vector() + s.beta * coupling_matrix(s) * m;
  EXPECT_LT((t - direct).cwiseAbs().maxCoeff(), 1e-15);
}
