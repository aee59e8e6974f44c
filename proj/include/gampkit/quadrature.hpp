#pragma once

// Adaptive Gauss-Kronrod integration and bracketed 1-D search.
// Used by the verification suites and tests as machinery independent of the
// closed-form channel code; nothing here calls into the channels.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>

namespace gampkit {

namespace detail {

// 15-point Kronrod nodes/weights with the embedded 7-point Gauss rule.
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

template <class F>
inline void gauss_kronrod(F& f, double a, double b, double& kres, double& err) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double fk[8];
  double resg = 0.0, resk = 0.0;
  for (int i = 0; i < 7; ++i) {
    const double f1 = f(c - h * kXgk[i]);
    const double f2 = f(c + h * kXgk[i]);
    fk[i] = f1 + f2;
    resk += kWgk[i] * fk[i];
  }
  fk[7] = f(c);
  resk += kWgk[7] * fk[7];
  for (int i = 0; i < 3; ++i) resg += kWg[i] * fk[2 * i + 1];
  resg += kWg[3] * fk[7];
  kres = resk * h;
  err = std::fabs((resk - resg) * h);
}

template <class F>
inline double adapt(F& f, double a, double b, double tol, int depth,
                    int distrust) {
  double kres, err;
  gauss_kronrod(f, a, b, kres, err);
  // a bit-exact agreement between the two rules on a panel with nonzero
  // value usually means a feature hides between the nodes (for instance a
  // kink a sliver inside one edge), so early levels split such panels
  // instead of trusting the estimate
  const bool blind = err == 0.0 && kres != 0.0 && distrust > 0;
  // the second acceptance is the rounding floor of the error estimate;
  // without it the bisection tree can grow exponentially chasing noise
  if (!blind && (err <= tol || err <= 1e-15 * std::fabs(kres))) return kres;
  if (depth <= 0) return kres;
  const double c = 0.5 * (a + b);
  return adapt(f, a, c, 0.5 * tol, depth - 1, distrust - 1) +
         adapt(f, c, b, 0.5 * tol, depth - 1, distrust - 1);
}

}  // namespace detail

// Integrate f over [a, b] to roughly rel_tol (relative to a first whole-range
// estimate, with abs_tol as a floor for near-zero integrals).
template <class F>
inline double integrate(F&& f, double a, double b, double rel_tol = 1e-12,
                        double abs_tol = 1e-300, int max_depth = 55) {
  if (!(a < b)) throw std::invalid_argument("integrate: need a < b");
  double kres, err;
  detail::gauss_kronrod(f, a, b, kres, err);
  double tol = rel_tol * std::fabs(kres);
  if (tol < abs_tol) tol = abs_tol;
  if (err <= tol && err > 0.0) return kres;
  return detail::adapt(f, a, b, tol, max_depth, 12);
}

// Piecewise integration with explicit interior breakpoints; list the kinks
// of a non-smooth integrand so every piece is smooth inside.
template <class F>
inline double integrate_pieces(F&& f, std::initializer_list<double> pts,
                               double rel_tol = 1e-12,
                               double abs_tol = 1e-300, int max_depth = 55) {
  if (pts.size() < 2)
    throw std::invalid_argument("integrate_pieces: need at least 2 points");
  double total = 0.0;
  auto it = pts.begin();
  double prev = *it++;
  for (; it != pts.end(); ++it) {
    if (*it > prev) total += integrate(f, prev, *it, rel_tol, abs_tol, max_depth);
    prev = *it;
  }
  return total;
}

// Golden-section minimization on [lo, hi]; f must be unimodal there.
// Returns the minimizer located to within x_tol.
template <class F>
inline double golden_section_minimize(F&& f, double lo, double hi,
                                      double x_tol = 1e-10) {
  constexpr double invphi = 0.61803398874989484820;
  double a = lo, b = hi;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  // value type follows the objective, so callers can evaluate in extended
  // precision when the comparison noise floor matters
  auto f1 = f(x1), f2 = f(x2);
  while (b - a > x_tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

// Coarse scan followed by golden-section refinement around the best bracket.
// Robust against mild non-unimodality; maximizes f.
template <class F>
inline double scan_then_golden_maximize(F&& f, double lo, double hi,
                                        int scan_points = 256,
                                        double x_tol = 1e-10) {
  if (scan_points < 3) scan_points = 3;
  double best_x = lo, best_f = f(lo);
  const double step = (hi - lo) / (scan_points - 1);
  for (int i = 1; i < scan_points; ++i) {
    const double x = lo + i * step;
    const double fx = f(x);
    if (fx > best_f) {
      best_f = fx;
      best_x = x;
    }
  }
  const double a = std::max(lo, best_x - step);
  const double b = std::min(hi, best_x + step);
  auto neg = [&](double x) { return -f(x); };
  return golden_section_minimize(neg, a, b, x_tol);
}

}  // namespace gampkit
