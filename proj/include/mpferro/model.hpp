#pragma once

// The multipartite model: nu parties of relative sizes alpha_a, coupled only
// across parties, and the positive completion J^c = c diag(alpha^2) - J of
// the (indefinite) interaction form together with its square-root factor.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mpferro/errors.hpp"
#include "mpferro/spins.hpp"

namespace mpferro {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct ModelSpec {
  std::vector<double> alpha;
  std::vector<double> h;
  double beta = 0.0;
  std::vector<SpinFamily> families;

  int nu() const { return static_cast<int>(alpha.size()); }

  bool zero_field() const {
    for (double x : h)
      if (x != 0.0) return false;
    return true;
  }

  /// Throws ConfigError on the first violated invariant.
  void validate() const {
    const auto n = alpha.size();
    if (n < 2) throw ConfigError("model: nu must be >= 2");
    if (h.size() != n) throw ConfigError("model: h must have nu entries");
    if (families.size() != n) throw ConfigError("model: families must have nu entries");
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("model: beta must be >= 0");
    double total = 0;
    for (double a : alpha) {
      if (!(a > 0.0 && a < 1.0)) throw ConfigError("model: each alpha must lie in (0,1)");
      total += a;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError("model: alpha must sum to 1");
    for (double x : h)
      if (!std::isfinite(x)) throw ConfigError("model: fields must be finite");
    for (const auto& f : families) {
      const auto report = validate_family(f);
      if (!report.ok) throw ConfigError("model: inadmissible spin family: " + report.failures.front());
    }
  }

  Vector alpha_vector() const { return Eigen::Map<const Vector>(alpha.data(), nu()); }
  Vector field_vector() const { return Eigen::Map<const Vector>(h.data(), nu()); }
};

/// nu parties of +-1 spins with equal sizes and zero field.
inline ModelSpec equal_rademacher(int nu, double beta) {
  ModelSpec s;
  s.alpha.assign(nu, 1.0 / nu);
  s.h.assign(nu, 0.0);
  s.beta = beta;
  s.families.assign(nu, SpinFamily::rademacher());
  return s;
}

/// Two +-1 parties with sizes (alpha, 1 - alpha).
inline ModelSpec bipartite_rademacher(double alpha, double beta, double h1 = 0.0, double h2 = 0.0) {
  ModelSpec s;
  s.alpha = {alpha, 1.0 - alpha};
  s.h = {h1, h2};
  s.beta = beta;
  s.families.assign(2, SpinFamily::rademacher());
  return s;
}

/// Rows a, columns b: alpha_b off the diagonal, 0 on it. beta times this is
/// the zero-magnetisation linearisation of the self-consistency map.
inline Matrix coupling_matrix(const ModelSpec& spec) {
  const int n = spec.nu();
  Matrix k = Matrix::Zero(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (a != b) k(a, b) = spec.alpha[b];
  return k;
}

/// beta*h_a + beta*sum_{b != a} alpha_b m_b.
inline Vector local_fields(const ModelSpec& spec, const Vector& m) {
  const Vector a = spec.alpha_vector();
  const double total = a.dot(m);
  Vector out(spec.nu());
  for (int i = 0; i < spec.nu(); ++i)
    out[i] = spec.beta * spec.h[i] + spec.beta * (total - a[i] * m[i]);
  return out;
}

inline void check_magnetisation(const ModelSpec& spec, const Vector& m) {
  if (m.size() != spec.nu()) throw ConfigError("magnetisation: dimension mismatch");
  for (int a = 0; a < spec.nu(); ++a) {
    const auto& f = spec.families[a];
    const double slack = 1e-12 * std::max(1.0, f.hull_max());
    if (m[a] < f.hull_min() - slack || m[a] > f.hull_max() + slack)
      throw ConfigError("magnetisation: component " + std::to_string(a) + " outside spin hull");
  }
}

/// H_N(m) = -N sum_{a<b} alpha_a alpha_b m_a m_b - N sum_a h_a alpha_a m_a.
inline double hamiltonian(const ModelSpec& spec, const Vector& m, long n_spins) {
  check_magnetisation(spec, m);
  if (n_spins < spec.nu()) throw ConfigError("hamiltonian: need N >= nu");
  double pair = 0, field = 0;
  for (int a = 0; a < spec.nu(); ++a) {
    field += spec.h[a] * spec.alpha[a] * m[a];
    for (int b = a + 1; b < spec.nu(); ++b) pair += spec.alpha[a] * spec.alpha[b] * m[a] * m[b];
  }
  return -static_cast<double>(n_spins) * (pair + field);
}

struct InteractionDecomposition {
  double c = 0;
  Matrix J;
  Matrix Jc;
  Matrix Tc;
  Matrix P;  ///< rows v^1..v^nu, P^T P = Jc
  Vector tc_eigenvalues;  ///< ascending
};

/// J, J^c, T^c and the explicit factor P of J^c = P^T P. Needs c >= nu - 1.
inline InteractionDecomposition interaction_matrices(const ModelSpec& spec, double c) {
  const int n = spec.nu();
  if (!(c >= n - 1.0))
    throw ConfigError("interaction_matrices: J^c = c diag(alpha^2) - J is not positive semidefinite "
                      "for c < nu - 1, so no real factor P exists");
  InteractionDecomposition d;
  d.c = c;
  const Vector alpha = spec.alpha_vector();
  d.J = alpha * alpha.transpose();
  d.J.diagonal().setZero();
  d.Jc = c * Matrix(alpha.array().square().matrix().asDiagonal()) - d.J;
  d.Tc = Matrix::Constant(n, n, -1.0);
  d.Tc.diagonal().setConstant(c);

  // Rows of P' : w^1 = sqrt(c+1-nu)/sqrt(nu) (1..1), then the Helmert vectors
  // w^a = sqrt(c+1)/sqrt(a(a-1)) (1,..,1, 1-a, 0,..,0). P = P' diag(alpha).
  Matrix rows = Matrix::Zero(n, n);
  rows.row(0).setConstant(std::sqrt(c + 1.0 - n) / std::sqrt(double(n)));
  for (int a = 2; a <= n; ++a) {
    const double scale = std::sqrt(c + 1.0) / std::sqrt(double(a) * (a - 1));
    for (int j = 0; j < a - 1; ++j) rows(a - 1, j) = scale;
    rows(a - 1, a - 1) = scale * (1.0 - a);
  }
  d.P = rows * alpha.asDiagonal();

  Eigen::SelfAdjointEigenSolver<Matrix> eig(d.Tc, Eigen::EigenvaluesOnly);
  d.tc_eigenvalues = eig.eigenvalues();
  return d;
}

}  // namespace mpferro
