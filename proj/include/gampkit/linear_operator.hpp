#pragma once

// Dense sensing operators, linear equality constraints, and the
// pseudo-measurement augmentation that folds Bx = c into the observation
// model as noiseless rows.

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace gampkit {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class ApplyDirection { forward, adjoint };

class DenseOperator {
 public:
  explicit DenseOperator(Mat a) : a_(std::move(a)) {
    if (a_.rows() < 1 || a_.cols() < 1)
      throw std::invalid_argument("DenseOperator: need at least 1x1");
    if (!a_.allFinite())
      throw std::invalid_argument("DenseOperator: entries must be finite");
    row_sq_ = a_.array().square().matrix().rowwise().sum();
    col_sq_ = a_.array().square().matrix().colwise().sum().transpose();
  }

  std::size_t rows() const { return static_cast<std::size_t>(a_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(a_.cols()); }
  const Mat& matrix() const { return a_; }
  double fro_norm_sq() const { return row_sq_.sum(); }

  Vec apply(const Vec& x) const {
    check_len(x, a_.cols(), "apply");
    return a_ * x;
  }

  Vec apply_adjoint(const Vec& s) const {
    check_len(s, a_.rows(), "apply_adjoint");
    return a_.transpose() * s;
  }

  // (A.^2) v or (A.^2)^T v, elementwise squares taken on the fly.
  // With uniform_input the vector is treated as constant v[0] and the
  // precomputed squared norms are used instead of a full pass.
  Vec apply_squared(const Vec& v, ApplyDirection dir,
                    bool uniform_input = false) const {
    if (dir == ApplyDirection::forward) {
      check_len(v, a_.cols(), "apply_squared");
      if (uniform_input) return row_sq_ * v[0];
      Vec out = Vec::Zero(a_.rows());
      for (Eigen::Index n = 0; n < a_.cols(); ++n)
        out.array() += a_.col(n).array().square() * v[n];
      return out;
    }
    check_len(v, a_.rows(), "apply_squared");
    if (uniform_input) return col_sq_ * v[0];
    Vec out(a_.cols());
    for (Eigen::Index n = 0; n < a_.cols(); ++n)
      out[n] = (a_.col(n).array().square() * v.array()).sum();
    return out;
  }

 private:
  static void check_len(const Vec& v, Eigen::Index want, const char* who) {
    if (v.size() != want)
      throw std::invalid_argument(std::string(who) + ": length mismatch");
  }

  Mat a_;
  Vec row_sq_, col_sq_;
};

struct EqualityConstraint {
  Mat b;
  Vec c;

  EqualityConstraint(Mat b_in, Vec c_in) : b(std::move(b_in)), c(std::move(c_in)) {
    if (b.rows() < 1) throw std::invalid_argument("EqualityConstraint: empty B");
    if (c.size() != b.rows())
      throw std::invalid_argument("EqualityConstraint: c length must match B rows");
    if (!b.allFinite() || !c.allFinite())
      throw std::invalid_argument("EqualityConstraint: entries must be finite");
  }
};

// 1^T x = total
inline EqualityConstraint simplex_constraint(std::size_t n, double total = 1.0) {
  if (n < 1) throw std::invalid_argument("simplex_constraint: n must be >= 1");
  return EqualityConstraint(Mat::Ones(1, static_cast<Eigen::Index>(n)),
                            Vec::Constant(1, total));
}

// mu^T x = rho and 1^T x = 1
inline EqualityConstraint portfolio_constraint(const Vec& mu, double rho) {
  if (mu.size() < 1) throw std::invalid_argument("portfolio_constraint: empty mu");
  Mat b(2, mu.size());
  b.row(0) = mu.transpose();
  b.row(1).setOnes();
  Vec c(2);
  c << rho, 1.0;
  return EqualityConstraint(std::move(b), std::move(c));
}

struct Problem {
  DenseOperator op;
  Vec y;
  std::optional<EqualityConstraint> constraint;

  Problem(DenseOperator op_in, Vec y_in,
          std::optional<EqualityConstraint> con = std::nullopt)
      : op(std::move(op_in)), y(std::move(y_in)), constraint(std::move(con)) {
    if (y.size() != static_cast<Eigen::Index>(op.rows()))
      throw std::invalid_argument("Problem: y length must match operator rows");
    if (!y.allFinite()) throw std::invalid_argument("Problem: y must be finite");
    if (constraint && constraint->b.cols() != static_cast<Eigen::Index>(op.cols()))
      throw std::invalid_argument("Problem: constraint width must match operator cols");
  }
};

// Stacked [A; B] with observations [y; c]; rows at and past `boundary` are
// the noiseless pseudo-measurements. The first block is copied unchanged.
struct AugmentedProblem {
  DenseOperator op;
  Vec obs;
  std::size_t boundary;
};

inline AugmentedProblem augment(const Problem& p) {
  if (!p.constraint) {
    return {p.op, p.y, p.op.rows()};
  }
  const Mat& a = p.op.matrix();
  const Mat& b = p.constraint->b;
  Mat stacked(a.rows() + b.rows(), a.cols());
  stacked.topRows(a.rows()) = a;
  stacked.bottomRows(b.rows()) = b;
  Vec obs(p.y.size() + p.constraint->c.size());
  obs.head(p.y.size()) = p.y;
  obs.tail(p.constraint->c.size()) = p.constraint->c;
  return {DenseOperator(std::move(stacked)), std::move(obs),
          static_cast<std::size_t>(a.rows())};
}

}  // namespace gampkit
