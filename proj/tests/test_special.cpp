#include "gampkit/special.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "gampkit/quadrature.hpp"

namespace {

using namespace gampkit;

constexpr double kInf = std::numeric_limits<double>::infinity();

double rel_err(double got, double want) {
  if (want == 0.0) return std::fabs(got);
  return std::fabs(got - want) / std::fabs(want);
}

// Reference moments of N(mean, var) restricted to one side of zero, by
// direct integration of the density; independent of the closed forms.
struct RefTrunc {
  double mass, mean, second;
};

RefTrunc quad_trunc(double mean, double var, TruncSide side) {
  const double sd = std::sqrt(var);
  double lo, hi;
  if (side == TruncSide::positive) {
    lo = 0.0;
    hi = std::max(0.0, mean) + 14.0 * sd;
  } else {
    lo = std::min(0.0, mean) - 14.0 * sd;
    hi = 0.0;
  }
  auto dens = [&](double x) {
    return std::exp(log_normal_pdf(x, mean, var));
  };
  const double z0 = integrate([&](double x) { return dens(x); }, lo, hi, 1e-13);
  const double z1 = integrate([&](double x) { return x * dens(x); }, lo, hi, 1e-13);
  const double z2 = integrate([&](double x) { return x * x * dens(x); }, lo, hi, 1e-13);
  return {z0, z1 / z0, z2 / z0};
}

TEST(Special, PinnedValues) {
  EXPECT_LT(rel_err(mills_h(0.0), 0.7978845608028653559), 1e-14);
  EXPECT_LT(rel_err(mills_g(0.0), 0.3633802276324186569), 1e-13);
  EXPECT_LT(rel_err(mills_h(30.0), 30.033259667433677037), 1e-12);
  EXPECT_LT(rel_err(mills_h(-30.0), 1.4736461348785475190e-196), 1e-10);
  EXPECT_LT(rel_err(mills_h(-30.0), normal_pdf(-30.0)), 1e-10);
  EXPECT_GT(mills_g(12.0), 0.0);
  EXPECT_LT(mills_g(12.0), 0.01);
  EXPECT_LT(rel_err(mills_g(12.0), 0.0066707263358458643), 1e-11);
}

TEST(Special, MillsIdentity) {
  for (double a = -25.0; a <= 25.0; a += 0.03125) {
    const double lhs = mills_h(a) * normal_ccdf(a);
    const double rhs = normal_pdf(a);
    EXPECT_LT(rel_err(lhs, rhs), 1e-12) << "a=" << a;
  }
}

TEST(Special, GMonotoneDecreasing) {
  // In the far left tail g is 1 up to ulp, so strictness only applies where
  // consecutive values are resolvable in double.
  double prev = mills_g(-10.0);
  for (double a = -9.9375; a <= 10.0; a += 0.0625) {
    const double g = mills_g(a);
    if (a >= -6.0)
      EXPECT_LT(g, prev) << "a=" << a;
    else
      EXPECT_LE(g, prev + 4e-16) << "a=" << a;
    EXPECT_GT(g, 0.0);
    EXPECT_LE(g, 1.0);
    prev = g;
  }
}

// Both sides of every internal branch switch, pinned against 40-digit
// reference values.
TEST(Special, BranchSwitchAccuracy) {
  EXPECT_LT(rel_err(erfcx(25.5), 0.022108108052519826561), 1e-13);
  EXPECT_LT(rel_err(erfcx(26.5), 0.021275046685371105955), 1e-13);
  EXPECT_LT(rel_err(mills_h_minus(11.5), 0.085688609767972448623), 1e-12);
  EXPECT_LT(rel_err(mills_h_minus(12.5), 0.079007304406976089118), 1e-12);
  EXPECT_LT(rel_err(mills_h_minus(12.0), 0.082214175254284330), 1e-12);
}

TEST(Special, TruncMomentsExample) {
  const auto m = trunc_gauss_moments(0.0, 1.0, TruncSide::positive);
  EXPECT_LT(rel_err(m.mean, 0.7978845608028653559), 1e-13);
  EXPECT_LT(rel_err(m.second_moment, 1.0), 1e-13);
  EXPECT_LT(rel_err(std::exp(m.log_mass), 0.5), 1e-13);
}

TEST(Special, TruncMomentsAgainstQuadrature) {
  const std::vector<double> vars = {0.25, 1.0, 7.0};
  for (double var : vars) {
    const double sd = std::sqrt(var);
    for (double kappa = -8.0; kappa <= 8.0; kappa += 0.5) {
      const double mean = kappa * sd;
      for (TruncSide side : {TruncSide::positive, TruncSide::negative}) {
        const auto got = trunc_gauss_moments(mean, var, side);
        const auto want = quad_trunc(mean, var, side);
        EXPECT_LT(rel_err(got.mean, want.mean), 1e-9)
            << "kappa=" << kappa << " var=" << var;
        EXPECT_LT(rel_err(got.second_moment, want.second), 1e-9)
            << "kappa=" << kappa << " var=" << var;
        EXPECT_LT(rel_err(std::exp(got.log_mass), want.mass), 1e-9)
            << "kappa=" << kappa << " var=" << var;
      }
    }
  }
}

TEST(Special, TruncMomentsDeepTail) {
  const auto m = trunc_gauss_moments(-12.0, 1.0, TruncSide::positive);
  EXPECT_GT(m.mean, 0.0);
  EXPECT_TRUE(std::isfinite(m.mean));
  EXPECT_LT(rel_err(m.mean, 0.082214175254284330), 1e-12);
  EXPECT_GE(m.second_moment, m.mean * m.mean);

  const auto w = quad_trunc(-12.0, 1.0, TruncSide::positive);
  EXPECT_LT(rel_err(m.mean, w.mean), 1e-9);
  EXPECT_LT(rel_err(std::exp(m.log_mass), w.mass), 1e-9);
}

TEST(Special, TruncMomentsRejectsBadVariance) {
  EXPECT_THROW(trunc_gauss_moments(0.0, 0.0, TruncSide::positive),
               std::invalid_argument);
  EXPECT_THROW(trunc_gauss_moments(0.0, -1.0, TruncSide::negative),
               std::invalid_argument);
}

TEST(Special, GaussProductExample) {
  const auto p = gauss_product(1.0, 2.0, -1.0, 0.5);
  EXPECT_LT(rel_err(p.mean, -0.6), 1e-13);
  EXPECT_LT(rel_err(p.var, 0.4), 1e-13);
  EXPECT_LT(rel_err(p.log_scale, -2.1770838991417502744), 1e-13);
}

TEST(Special, GaussProductSymmetric) {
  const auto p = gauss_product(0.3, 1.7, -2.2, 0.9);
  const auto q = gauss_product(-2.2, 0.9, 0.3, 1.7);
  EXPECT_EQ(p.mean, q.mean);
  EXPECT_EQ(p.var, q.var);
  EXPECT_EQ(p.log_scale, q.log_scale);
}

TEST(Special, GaussProductAgainstQuadrature) {
  const double ma = 1.0, va = 2.0, mb = -1.0, vb = 0.5;
  const auto p = gauss_product(ma, va, mb, vb);
  auto prod = [&](double x) {
    return std::exp(log_normal_pdf(x, ma, va) + log_normal_pdf(x, mb, vb));
  };
  const double z0 = integrate(prod, -12.0, 12.0, 1e-13);
  const double z1 = integrate([&](double x) { return x * prod(x); }, -12.0, 12.0, 1e-13);
  const double z2 = integrate([&](double x) { return x * x * prod(x); }, -12.0, 12.0, 1e-13);
  EXPECT_LT(rel_err(std::exp(p.log_scale), z0), 1e-10);
  EXPECT_LT(rel_err(p.mean, z1 / z0), 1e-10);
  EXPECT_LT(rel_err(p.var, z2 / z0 - (z1 / z0) * (z1 / z0)), 1e-9);
}

TEST(Special, LogNormalCcdf) {
  EXPECT_LT(rel_err(log_normal_ccdf(8.0), -35.013437159914549896), 1e-12);
  EXPECT_LT(rel_err(log_normal_ccdf(40.0), -804.60844201375378817), 1e-12);
  EXPECT_LT(rel_err(log_normal_ccdf(7.75), -33.013888722743087178), 1e-13);
  EXPECT_LT(rel_err(log_normal_ccdf(8.25), -37.074589931901532919), 1e-13);
  EXPECT_LT(rel_err(log_normal_ccdf(-8.0), -normal_ccdf(8.0)), 1e-6);
  EXPECT_LT(rel_err(std::exp(log_normal_ccdf(1.3)), normal_ccdf(1.3)), 1e-13);
}

TEST(Special, LogSumExp) {
  const std::vector<double> a = {-1000.0, -1001.0};
  EXPECT_LT(rel_err(log_sum_exp(a), -999.68673831248177717), 1e-13);

  const std::vector<double> b = {-kInf, -5.0};
  EXPECT_EQ(log_sum_exp(b), -5.0);

  const std::vector<double> c = {1000.0, 1000.0};
  EXPECT_LT(rel_err(log_sum_exp(c), 1000.0 + std::log(2.0)), 1e-14);

  const std::vector<double> d;
  EXPECT_EQ(log_sum_exp(d), -kInf);

  EXPECT_EQ(log_add_exp(-kInf, -kInf), -kInf);
  EXPECT_LT(rel_err(log_add_exp(-1000.0, -1001.0), -999.68673831248177717), 1e-13);
}

}  // namespace
