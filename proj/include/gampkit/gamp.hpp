#pragma once

// The GAMP iteration: one linear sweep per iteration through the output and
// input channels, with Onsager correction, optional damping, variance
// flooring, and a relative-change stopping rule.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "gampkit/channels.hpp"
#include "gampkit/linear_operator.hpp"

namespace gampkit {

struct GampConfig {
  int max_iters = 500;
  double tol = 1e-8;
  double damping = 1.0;
  // 0 selects 1e-12 times the initial variance scale when run() starts;
  // iterate_once() requires a resolved positive value
  double variance_floor = 0.0;
  GampMode mode = GampMode::max_sum;

  void validate() const {
    detail::require(max_iters >= 1, "GampConfig: max_iters must be >= 1");
    detail::require(tol > 0.0, "GampConfig: tol must be > 0");
    detail::require(damping > 0.0 && damping <= 1.0,
                    "GampConfig: damping must be in (0, 1]");
    detail::require(variance_floor >= 0.0,
                    "GampConfig: variance_floor must be >= 0");
  }
};

struct GampState {
  Vec xhat, mux;  // length N
  Vec rhat, mur;  // length N
  Vec shat, mus;  // length M
  Vec phat, mup;  // length M
  Vec zhat, muz;  // length M
  int iter = 0;
};

struct GampResult {
  GampState state;
  int iterations_used = 0;
  bool converged = false;
  std::vector<double> per_iter_residual;
};

struct GampDivergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline GampState initialize(const InputChannel& input, std::size_t n_cols,
                            std::size_t m_rows) {
  const auto prior = input.prior_moments();
  GampState s;
  s.xhat = Vec::Constant(n_cols, prior.mean);
  s.mux = Vec::Constant(n_cols, prior.var);
  s.rhat = Vec::Zero(n_cols);
  s.mur = Vec::Zero(n_cols);
  s.shat = Vec::Zero(m_rows);
  s.mus = Vec::Zero(m_rows);
  s.phat = Vec::Zero(m_rows);
  s.mup = Vec::Zero(m_rows);
  s.zhat = Vec::Zero(m_rows);
  s.muz = Vec::Zero(m_rows);
  s.iter = 0;
  return s;
}

inline GampState iterate_once(const GampState& state,
                              const AugmentedProblem& problem,
                              const InputChannel& input,
                              const OutputChannel& output,
                              const GampConfig& config) {
  config.validate();
  detail::require(config.variance_floor > 0.0,
                  "iterate_once: variance_floor must be resolved to > 0");
  const auto& op = problem.op;
  const double beta = config.damping;
  const double floor = config.variance_floor;
  // keeps the dual variance invertible when a channel drives it to the
  // floor everywhere; 1e26 * floor equals 1e14 times the variance scale
  // the default floor was derived from
  const double mur_cap = 1e26 * floor;

  GampState next = state;

  // output linear step with Onsager correction
  next.mup = op.apply_squared(state.mux, ApplyDirection::forward)
                 .cwiseMax(floor);
  next.phat = op.apply(state.xhat) - next.mup.cwiseProduct(state.shat);

  // output channel
  for (Eigen::Index m = 0; m < next.phat.size(); ++m) {
    const OutputChannelRequest req{problem.obs[m], next.phat[m], next.mup[m],
                                   config.mode};
    try {
      const auto mom =
          output.moments(static_cast<std::size_t>(m), req);
      next.zhat[m] = mom.mean;
      next.muz[m] = mom.var;
    } catch (const std::exception& e) {
      throw std::runtime_error("output channel failed at row " +
                               std::to_string(m) + ": " + e.what());
    }
  }

  // dual update, damped
  for (Eigen::Index m = 0; m < next.mup.size(); ++m) {
    const double mus_raw =
        (1.0 - next.muz[m] / next.mup[m]) / next.mup[m];
    const double mus_new = mus_raw > 0.0 ? mus_raw : 0.0;
    const double shat_new = (next.zhat[m] - next.phat[m]) / next.mup[m];
    next.mus[m] = (1.0 - beta) * state.mus[m] + beta * mus_new;
    next.shat[m] = (1.0 - beta) * state.shat[m] + beta * shat_new;
  }

  // input linear step
  const Vec denom = op.apply_squared(next.mus, ApplyDirection::adjoint);
  for (Eigen::Index n = 0; n < denom.size(); ++n) {
    const double d = denom[n] > 1e-18 ? denom[n] : 1e-18;
    double mur = 1.0 / d;
    if (mur > mur_cap) mur = mur_cap;
    next.mur[n] = mur > floor ? mur : floor;
  }
  next.rhat = state.xhat + next.mur.cwiseProduct(op.apply_adjoint(next.shat));

  // input channel, mean damped
  for (Eigen::Index n = 0; n < next.rhat.size(); ++n) {
    const InputChannelRequest req{next.rhat[n], next.mur[n], config.mode};
    try {
      const auto mom = input.moments(req);
      next.xhat[n] = (1.0 - beta) * state.xhat[n] + beta * mom.mean;
      next.mux[n] = mom.var > 0.0 ? mom.var : 0.0;
    } catch (const std::exception& e) {
      throw std::runtime_error("input channel failed at index " +
                               std::to_string(n) + ": " + e.what());
    }
  }

  next.iter = state.iter + 1;
  return next;
}

// Iterates from the given state, which allows warm starts across parameter
// re-estimation passes. A zero variance_floor resolves against the current
// mux scale.
inline GampResult run_from(GampState state, const AugmentedProblem& problem,
                           const InputChannel& input,
                           const OutputChannel& output,
                           const GampConfig& config) {
  config.validate();
  detail::require(output.boundary == problem.boundary,
                  "run: output channel boundary must match the problem");
  GampConfig resolved = config;
  if (resolved.variance_floor == 0.0) {
    const double scale = state.mux.mean();
    resolved.variance_floor = 1e-12 * (scale > 0.0 ? scale : 1.0);
  }

  GampResult result;
  double norm_ref = -1.0;
  int violent_steps = 0;
  for (int t = 0; t < resolved.max_iters; ++t) {
    const Vec x_old = state.xhat;
    state = iterate_once(state, problem, input, output, resolved);
    const double change = (state.xhat - x_old).squaredNorm();
    const double base = x_old.squaredNorm();
    const double residual = change / (base > 1e-300 ? base : 1e-300);
    result.per_iter_residual.push_back(residual);
    result.iterations_used = t + 1;
    if (!std::isfinite(residual))
      throw GampDivergence(
          "gamp diverged (non-finite update); retry with stronger damping, "
          "for instance 0.25");
    // a single violent step is a legitimate transient (warm starts after a
    // parameter change collapse or rebound the estimate through near-zero),
    // so divergence requires either norm explosion or persistent thrashing
    if (norm_ref < 0.0) norm_ref = std::max(1.0, state.xhat.squaredNorm());
    if (state.xhat.squaredNorm() > 1e24 * norm_ref)
      throw GampDivergence(
          "gamp diverged (estimate norm exploded); retry with stronger "
          "damping, for instance 0.25");
    if (residual > 10.0 && ++violent_steps > 25)
      throw GampDivergence(
          "gamp diverged (estimate keeps jumping by multiples of its own "
          "norm); retry with stronger damping, for instance 0.25");
    if (residual < resolved.tol) {
      result.converged = true;
      break;
    }
  }
  result.state = std::move(state);
  return result;
}

inline GampResult run(const AugmentedProblem& problem,
                      const InputChannel& input, const OutputChannel& output,
                      const GampConfig& config) {
  GampState state = initialize(input, static_cast<std::size_t>(problem.op.cols()),
                               static_cast<std::size_t>(problem.op.rows()));
  return run_from(std::move(state), problem, input, output, config);
}

}  // namespace gampkit
