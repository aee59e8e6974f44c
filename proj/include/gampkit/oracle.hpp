#pragma once

// Reference solvers for linearly constrained non-negative least squares and
// non-negative LASSO, built from projections and plain gradient steps. They
// share no code with the message-passing path so cross-checks between the two
// stay meaningful.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gampkit/linear_operator.hpp"

namespace gampkit {

// Euclidean projection onto {x >= 0, sum x = total} by the sort-and-threshold
// rule.
inline Vec project_simplex(const Vec& v, double total) {
  if (total < 0.0)
    throw std::invalid_argument("project_simplex: total must be >= 0");
  if (total == 0.0) return Vec::Zero(v.size());
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cum += u[j];
    const double cand = (cum - total) / static_cast<double>(j + 1);
    if (u[j] - cand > 0.0) theta = cand;
  }
  return (v.array() - theta).max(0.0).matrix();
}

// Euclidean projection onto {x >= 0} intersected with {Bx = c}. A single row
// with equal coefficients reduces to the simplex rule; anything else runs
// Dykstra's alternating projections.
class FeasibleSet {
 public:
  FeasibleSet(std::size_t n, std::optional<EqualityConstraint> con)
      : n_(n), con_(std::move(con)) {
    if (!con_) return;
    if (con_->b.cols() != static_cast<Eigen::Index>(n_))
      throw std::invalid_argument("FeasibleSet: constraint width mismatch");
    const Mat& b = con_->b;
    if (b.rows() == 1 && b.row(0).minCoeff() == b.row(0).maxCoeff() &&
        b(0, 0) != 0.0) {
      simplex_total_ = con_->c[0] / b(0, 0);
      if (simplex_total_ < 0.0)
        throw std::invalid_argument("FeasibleSet: empty constraint set");
      return;
    }
    gram_ = Eigen::LDLT<Mat>(b * b.transpose());
    if (gram_->info() != Eigen::Success)
      throw std::invalid_argument("FeasibleSet: constraint rows must be independent");
  }

  std::size_t dim() const { return n_; }

  Vec project(const Vec& v) const {
    if (!con_) return v.cwiseMax(0.0);
    if (simplex_total_) return project_simplex(v, *simplex_total_);
    return dykstra(v);
  }

  double violation(const Vec& x) const {
    double worst = std::max(0.0, -x.minCoeff());
    if (con_) {
      const Vec r = con_->b * x - con_->c;
      worst = std::max(worst, r.cwiseAbs().maxCoeff());
    }
    return worst;
  }

 private:
  Vec project_affine(const Vec& v) const {
    const Vec r = con_->b * v - con_->c;
    return v - con_->b.transpose() * gram_->solve(r);
  }

  Vec dykstra(const Vec& v) const {
    Vec x = v, p = Vec::Zero(n_), q = Vec::Zero(n_);
    const double scale = 1.0 + v.cwiseAbs().maxCoeff();
    for (int it = 0; it < 20000; ++it) {
      const Vec w = (x + p).cwiseMax(0.0);
      p = x + p - w;
      const Vec x_next = project_affine(w + q);
      q = w + q - x_next;
      const double step = (x_next - x).cwiseAbs().maxCoeff();
      x = x_next;
      if (step <= 1e-14 * scale && violation(x) <= 1e-10 * scale) return x;
    }
    if (violation(x) > 1e-6 * scale)
      throw std::runtime_error("FeasibleSet: constraint set appears infeasible");
    return x;
  }

  std::size_t n_;
  std::optional<EqualityConstraint> con_;
  std::optional<double> simplex_total_;
  std::optional<Eigen::LDLT<Mat>> gram_;
};

inline double nnls_objective(const Problem& p, const Vec& x) {
  return 0.5 * (p.y - p.op.apply(x)).squaredNorm();
}

inline double nnlasso_objective(const Problem& p, double lambda, const Vec& x) {
  return nnls_objective(p, x) + lambda * x.sum();
}

namespace detail {

inline double operator_norm_sq(const DenseOperator& op) {
  Vec v = Vec::Ones(op.cols());
  for (Eigen::Index n = 0; n < v.size(); ++n) v[n] += 1e-3 * (n % 7);
  v /= v.norm();
  double lam = 0.0;
  for (int it = 0; it < 80; ++it) {
    Vec w = op.apply_adjoint(op.apply(v));
    lam = w.norm();
    if (lam == 0.0) return 0.0;
    v = w / lam;
  }
  return lam;
}

}  // namespace detail

// Accelerated projected gradient on 1/2 ||y - Ax||^2 + lambda 1^T x over the
// feasible set, with momentum restarts. Stops when the prox-gradient step
// moves x by no more than tol in the max norm.
inline Vec oracle_nnlasso(const Problem& p, double lambda, double tol = 1e-10,
                          int max_iters = 50000) {
  if (lambda < 0.0)
    throw std::invalid_argument("oracle_nnlasso: lambda must be >= 0");
  if (tol <= 0.0) throw std::invalid_argument("oracle_nnlasso: tol must be > 0");
  const FeasibleSet set(p.op.cols(), p.constraint);
  const double lip = std::max(detail::operator_norm_sq(p.op) * 1.02, 1e-300);
  const double shift = lambda / lip;

  auto step = [&](const Vec& v) {
    const Vec grad = p.op.apply_adjoint(p.op.apply(v) - p.y);
    return set.project((v - grad / lip).array() - shift);
  };

  Vec x = set.project(Vec::Zero(p.op.cols()));
  Vec z = x, x_prev = x;
  double t = 1.0;
  for (int it = 0; it < max_iters; ++it) {
    const Vec x_next = step(z);
    const double move = (x_next - x).cwiseAbs().maxCoeff();
    if ((z - x_next).dot(x_next - x) > 0.0) {
      t = 1.0;
      z = x_next;
    } else {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      z = x_next + ((t - 1.0) / t_next) * (x_next - x);
      t = t_next;
    }
    x_prev = x;
    x = x_next;
    if (move <= tol || it % 50 == 49) {
      const double kkt = (x - step(x)).cwiseAbs().maxCoeff();
      if (kkt <= tol) return x;
    }
  }
  throw std::runtime_error("oracle_nnlasso: no convergence within iteration cap");
}

inline Vec oracle_nnls(const Problem& p, double tol = 1e-10,
                       int max_iters = 50000) {
  return oracle_nnlasso(p, 0.0, tol, max_iters);
}

}  // namespace gampkit
