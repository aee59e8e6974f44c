#pragma once

// Scalar Gaussian-tail kernels: pdf/ccdf, scaled erfc, Mills-ratio factors,
// one-sided truncated-Gaussian moments, Gaussian products, log-sum-exp.
// Everything here is branch-stable in the far tails; callers rely on that.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>

namespace gampkit {

inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;
inline constexpr double kSqrt2OverPi = 0.79788456080286535588;
inline constexpr double kSqrt1_2 = 0.70710678118654752440;

inline double normal_pdf(double x) {
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

inline double log_normal_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * d * d / var - 0.5 * std::log(var) - kLogSqrt2Pi;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * kSqrt1_2); }

inline double normal_ccdf(double x) { return 0.5 * std::erfc(x * kSqrt1_2); }

// exp(z^2) erfc(z); for z > 26 the product form degrades (erfc goes denormal),
// so switch to the asymptotic series in 1/z^2.
inline double erfcx(double z) {
  if (z > 26.0) {
    const double u = 1.0 / (z * z);
    // (2k-1)!!/2^k, alternating
    const double poly =
        1.0 + u * (-0.5 +
             u * (0.75 +
             u * (-1.875 +
             u * (6.5625 +
             u * (-29.53125 +
             u * (162.421875 + u * (-1055.7421875)))))));
    return poly / (z * 1.77245385090551602730);
  }
  return std::exp(z * z) * std::erfc(z);
}

inline double log_normal_ccdf(double x) {
  if (x <= -8.0) return std::log1p(-normal_ccdf(-x));
  if (x < 8.0) return std::log(normal_ccdf(x));
  return -0.5 * x * x + std::log(0.5 * erfcx(x * kSqrt1_2));
}

// h(a) = phi(a)/Phi_c(a)
inline double mills_h(double a) {
  if (a <= 25.0) return normal_pdf(a) / normal_ccdf(a);
  return kSqrt2OverPi / erfcx(a * kSqrt1_2);
}

// h(a) - a without cancellation; continued fraction for large a.
inline double mills_h_minus(double a) {
  if (a < 12.0) return mills_h(a) - a;
  double tail = a;
  for (int k = 40; k >= 2; --k) tail = a + k / tail;
  return 1.0 / tail;
}

// g(a) = 1 - h(a)(h(a) - a), the variance factor of a one-sided truncation
inline double mills_g(double a) {
  const double d = mills_h_minus(a);
  const double g = 1.0 - (a + d) * d;
  if (g < 0.0) return 0.0;
  if (g > 1.0) return 1.0;
  return g;
}

enum class TruncSide { positive, negative };

struct TruncGaussMoments {
  double mean;
  double second_moment;
  double log_mass;
};

// Moments of u ~ N(mean, var) conditioned on one side of zero.
// The conditional variance is assembled non-negatively, so
// second_moment >= mean^2 always holds.
inline TruncGaussMoments trunc_gauss_moments(double mean, double var,
                                             TruncSide side) {
  if (!(var > 0.0) || !std::isfinite(var) || !std::isfinite(mean))
    throw std::invalid_argument("trunc_gauss_moments: need finite mean, var > 0");
  const double b = std::sqrt(var);
  const double kappa = mean / b;
  double m, v, log_mass;
  if (side == TruncSide::positive) {
    m = b * mills_h_minus(-kappa);
    v = var * mills_g(-kappa);
    log_mass = log_normal_ccdf(-kappa);
  } else {
    m = -b * mills_h_minus(kappa);
    v = var * mills_g(kappa);
    log_mass = log_normal_ccdf(kappa);
  }
  return {m, m * m + v, log_mass};
}

// E|u| for u ~ N(mean, var), the folded-normal first moment.
inline double folded_normal_mean(double mean, double var) {
  if (!(var >= 0.0) || !std::isfinite(var) || !std::isfinite(mean))
    throw std::invalid_argument("folded_normal_mean: need finite mean, var >= 0");
  if (var == 0.0) return std::fabs(mean);
  const double s = std::sqrt(var);
  const double t = mean / s;
  return mean * std::erf(t * kSqrt1_2) + s * kSqrt2OverPi * std::exp(-0.5 * t * t);
}

struct GaussProduct {
  double mean;
  double var;
  double log_scale;
};

// N(x; ma, va) N(x; mb, vb) = scale * N(x; mean, var)
inline GaussProduct gauss_product(double ma, double va, double mb, double vb) {
  if (!(va > 0.0) || !(vb > 0.0))
    throw std::invalid_argument("gauss_product: variances must be positive");
  const double vsum = va + vb;
  const double var = va * vb / vsum;
  const double mean = (ma * vb + mb * va) / vsum;
  const double d = ma - mb;
  const double log_scale = -0.5 * d * d / vsum - 0.5 * std::log(vsum) - kLogSqrt2Pi;
  return {mean, var, log_scale};
}

inline double log_add_exp(double a, double b) {
  const double hi = a > b ? a : b;
  if (hi == -std::numeric_limits<double>::infinity()) return hi;
  const double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

inline double log_sum_exp(std::span<const double> xs) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : xs)
    if (x > hi) hi = x;
  if (hi == -std::numeric_limits<double>::infinity()) return hi;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

}  // namespace gampkit
