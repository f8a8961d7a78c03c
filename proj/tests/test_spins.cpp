#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "mpferro/spins.hpp"

using namespace mpferro;

namespace {

std::vector<SpinFamily> builtin_families() {
  return {SpinFamily::rademacher(), SpinFamily::uniform(), SpinFamily::three_point(0.5),
          SpinFamily::three_point(0.2), SpinFamily::discrete({-2, -1, 1, 2}, {1, 4, 4, 1})};
}

// Independent oracle for the uniform law: log of the midpoint-rule integral
// of exp(t x) / (2 sqrt 3) over [-sqrt 3, sqrt 3].
double uniform_cgf_by_quadrature(double t) {
  const double r3 = std::sqrt(3.0);
  const int n = 200000;
  double s = 0;
  for (int i = 0; i < n; ++i) {
    const double x = -r3 + (i + 0.5) * (2 * r3 / n);
    s += std::exp(t * x);
  }
  return std::log(s / n);
}

}  // namespace

TEST(Cgf, RademacherAtOrigin) {
  const CgfEval e = cgf(SpinFamily::rademacher(), 0.0, 2);
  EXPECT_EQ(e.value, 0.0);
  EXPECT_EQ(e.d1, 0.0);
  EXPECT_DOUBLE_EQ(e.d2, 1.0);
}

TEST(Cgf, RademacherIsLogCosh) {
  EXPECT_NEAR(cgf(SpinFamily::rademacher(), 1.0, 0).value, std::log(std::cosh(1.0)), 1e-15);
  EXPECT_NEAR(cgf(SpinFamily::rademacher(), 1.0, 0).value, 0.433781, 1e-6);
}

TEST(Cgf, UniformClosedFormAndQuadrature) {
  const double r3 = std::sqrt(3.0);
  const double closed = std::log(std::sinh(r3) / r3);
  EXPECT_NEAR(cgf(SpinFamily::uniform(), 1.0, 0).value, closed, 1e-14);
  for (double t : {-2.0, -0.3, 0.1, 0.25, 1.0, 3.0})
    EXPECT_NEAR(cgf(SpinFamily::uniform(), t, 0).value, uniform_cgf_by_quadrature(t), 1e-9) << t;
}

TEST(Cgf, UniformSeriesMatchesClosedFormAtSwitch) {
  // Just either side of |s| = 0.5, where the evaluation switches branch.
  const double r3 = std::sqrt(3.0);
  for (int k = 1; k <= 4; ++k) {
    const double lo = cgf(SpinFamily::uniform(), 0.5 / r3 - 1e-9, 4).derivative(k);
    const double hi = cgf(SpinFamily::uniform(), 0.5 / r3 + 1e-9, 4).derivative(k);
    EXPECT_NEAR(lo, hi, 1e-7) << k;
  }
}

TEST(Cgf, RejectsNonFinite) {
  EXPECT_THROW(cgf(SpinFamily::rademacher(), std::nan(""), 0), std::domain_error);
  EXPECT_THROW(cgf(SpinFamily::uniform(), INFINITY, 0), std::domain_error);
}

TEST(Cgf, LargeArgumentsStayFinite) {
  for (const auto& f : builtin_families()) {
    const CgfEval e = cgf(f, 800.0, 4);
    EXPECT_TRUE(std::isfinite(e.value));
    EXPECT_NEAR(e.d1, f.hull_max(), 1e-2);
  }
}

TEST(CgfProperties, EvenAndConvex) {
  for (const auto& f : builtin_families())
    for (double t = -5; t <= 5; t += 0.125) {
      EXPECT_NEAR(cgf(f, t, 0).value, cgf(f, -t, 0).value, 1e-12);
      EXPECT_GT(cgf(f, t, 2).d2, 0.0);
    }
}

TEST(CgfProperties, DerivativesMatchRichardsonDifferences) {
  const double h = 1e-4;
  for (const auto& f : builtin_families())
    for (double t : {-3.0, -1.1, -0.2, 0.05, 0.7, 2.4}) {
      for (int k = 1; k <= 4; ++k) {
        auto g = [&](double x) { return cgf(f, x, 4).derivative(k - 1); };
        const double d1 = (g(t + h) - g(t - h)) / (2 * h);
        const double d2 = (g(t + 2 * h) - g(t - 2 * h)) / (4 * h);
        const double rich = (4 * d1 - d2) / 3;
        const double exact = cgf(f, t, 4).derivative(k);
        EXPECT_NEAR(exact, rich, 1e-6 * std::max(1.0, std::abs(exact))) << to_string(f.kind()) << " t=" << t << " k=" << k;
      }
    }
}

TEST(Cumulant, KnownValues) {
  EXPECT_DOUBLE_EQ(cumulant(SpinFamily::rademacher(), 2), 1.0);
  EXPECT_NEAR(cumulant(SpinFamily::rademacher(), 4), -2.0, 1e-15);
  EXPECT_NEAR(cumulant(SpinFamily::uniform(), 4), -1.2, 1e-12);
  // Three-point q = 1/2: E s^4 = a^4 (1 - q) = 2.
  EXPECT_NEAR(cumulant(SpinFamily::three_point(0.5), 4), -1.0, 1e-12);
}

TEST(Cumulant, RejectsOddOrder) {
  EXPECT_THROW(cumulant(SpinFamily::rademacher(), 3), std::invalid_argument);
}

TEST(Cumulant, MatchesMomentFormula) {
  for (const auto& f : builtin_families()) {
    EXPECT_NEAR(cumulant(f, 2), f.moment(2), 1e-9);
    EXPECT_NEAR(cumulant(f, 4), f.moment(4) - 3 * f.moment(2) * f.moment(2), 1e-9);
  }
}

TEST(Validate, AcceptsAdmissibleFamilies) {
  EXPECT_TRUE(validate_family(SpinFamily::rademacher()).ok);
  EXPECT_TRUE(validate_family(SpinFamily::uniform()).ok);
  const auto r = validate_family(SpinFamily::three_point(0.5, std::sqrt(2.0)));
  EXPECT_TRUE(r.ok);
  EXPECT_NEAR(r.fourth_moment, 2.0, 1e-12);
}

TEST(Validate, RejectsGaussianKurtosis) {
  // Three-point law with kurtosis exactly 3: q = 2/3, a = sqrt 3.
  const auto r = validate_family(SpinFamily::three_point(2.0 / 3.0, std::sqrt(3.0)));
  EXPECT_FALSE(r.ok);
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_NE(r.failures[0].find("kurtosis"), std::string::npos);
}

TEST(Validate, ReportsEveryFailure) {
  const auto r = validate_family(SpinFamily::discrete({-1, 2}, {0.5, 0.5}));
  EXPECT_FALSE(r.ok);
  EXPECT_GE(r.failures.size(), 2u);  // asymmetric and wrong variance
}

TEST(Validate, RejectsUnitVarianceViolation) {
  EXPECT_FALSE(validate_family(SpinFamily::three_point(0.5, 1.0)).ok);
}

TEST(Inverse, InvertsDerivative) {
  for (const auto& f : builtin_families())
    for (double frac : {-0.95, -0.4, 0.0, 0.3, 0.999}) {
      const double m = frac * f.hull_max();
      const double t = cgf_derivative_inverse(f, m);
      EXPECT_NEAR(cgf(f, t, 1).d1, m, 1e-12);
    }
  EXPECT_THROW(cgf_derivative_inverse(SpinFamily::rademacher(), 1.0), std::domain_error);
}
