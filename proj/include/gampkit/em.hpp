#pragma once

// Parameter re-estimation wrapped around converged message-passing runs:
// closed-form noise and prior updates evaluated on frozen posteriors, data
// driven initialization, the noiseless non-negative l1 phase-transition
// curve, and penalized-likelihood selection of the mixture order.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gampkit/channels.hpp"
#include "gampkit/gamp.hpp"
#include "gampkit/linear_operator.hpp"
#include "gampkit/quadrature.hpp"
#include "gampkit/special.hpp"

namespace gampkit {

struct EmConfig {
  int max_em_iters = 20;
  double em_tol = 1e-4;
  bool learn_awgn_psi = false;
  bool learn_laplace_psi = false;
  bool learn_exp_chi = false;
  bool learn_nngm = false;
  // components used when search_max_order is 0; otherwise orders
  // 1..search_max_order are compared by penalized likelihood
  int mixture_order = 3;
  int search_max_order = 0;

  void validate() const {
    detail::require(max_em_iters >= 1, "EmConfig: max_em_iters must be >= 1");
    detail::require(em_tol > 0.0, "EmConfig: em_tol must be > 0");
    detail::require(mixture_order >= 1, "EmConfig: mixture_order must be >= 1");
    detail::require(search_max_order >= 0,
                    "EmConfig: search_max_order must be >= 0");
  }

  bool learns_anything() const {
    return learn_awgn_psi || learn_laplace_psi || learn_exp_chi || learn_nngm;
  }
};

// Noiseless phase-transition curve for l1 recovery of sparse non-negative
// signals: the largest recoverable sparsity ratio K/M at sampling ratio
// delta = M/N.
inline double theoretical_ptc(double delta) {
  detail::require(delta > 0.0 && delta <= 1.0,
                  "theoretical_ptc: delta must be in (0, 1]");
  auto ratio = [delta](double c) {
    const double t = (1.0 + c * c) * normal_cdf(-c) - c * normal_pdf(c);
    return (1.0 - t / delta) / (1.0 + c * c - t);
  };
  const double c_star = scan_then_golden_maximize(ratio, 0.0, 20.0, 2001, 1e-10);
  return ratio(c_star);
}

// Noise-variance update: residual power plus the propagated posterior spread,
// averaged over the measurement rows.
inline double em_update_awgn_psi(const GampState& state, const Problem& problem,
                                 double psi_old) {
  detail::require(psi_old > 0.0, "em_update_awgn_psi: psi_old must be > 0");
  const double m = static_cast<double>(problem.op.rows());
  const double resid = (problem.y - problem.op.apply(state.xhat)).squaredNorm();
  const double spread =
      problem.op.apply_squared(state.mux, ApplyDirection::forward).sum();
  return std::max((resid + spread) / m, 1e-300);
}

// Noise-variance update from the output-side posterior: average of squared
// centering error plus posterior variance of each transform output. Only
// sum-product runs produce genuine posterior moments (zhat, muz); max-sum
// prox outputs understate the residual and would collapse the variance, so
// those runs use the coefficient-side update above.
inline double em_update_awgn_psi_outputs(const GampState& state,
                                         const Problem& problem,
                                         double psi_old) {
  detail::require(psi_old > 0.0,
                  "em_update_awgn_psi_outputs: psi_old must be > 0");
  const Eigen::Index m = problem.y.size();
  detail::require(state.zhat.size() >= m,
                  "em_update_awgn_psi_outputs: state size mismatch");
  double acc = 0.0;
  for (Eigen::Index r = 0; r < m; ++r) {
    const double d = problem.y[r] - state.zhat[r];
    acc += d * d + state.muz[r];
  }
  return std::max(acc / static_cast<double>(m), 1e-300);
}

// Laplacian-rate update: the rate is the inverse of the average posterior
// absolute residual, each row's expectation taken under the Gaussian belief
// on a_m^T x with the exact folded-normal first moment.
inline double em_update_laplace_psi(const GampState& state,
                                    const Problem& problem, double psi_old) {
  detail::require(psi_old > 0.0, "em_update_laplace_psi: psi_old must be > 0");
  const Vec ztilde = problem.op.apply(state.xhat) - problem.y;
  const Vec spread =
      problem.op.apply_squared(state.mux, ApplyDirection::forward);
  double sum = 0.0;
  for (Eigen::Index m = 0; m < ztilde.size(); ++m)
    sum += folded_normal_mean(ztilde[m], spread[m]);
  if (!(sum > 0.0) || !std::isfinite(sum))
    throw std::runtime_error("em_update_laplace_psi: degenerate denominator");
  return static_cast<double>(ztilde.size()) / sum;
}

// Exponential-rate update: inverse of the average posterior mean, where the
// posterior of each coefficient is the positive-truncated Gaussian implied by
// rhat, mur, and the current rate.
inline double em_update_exp_chi(const GampState& state, double chi_old) {
  detail::require(chi_old > 0.0, "em_update_exp_chi: chi_old must be > 0");
  double sum = 0.0;
  for (Eigen::Index n = 0; n < state.rhat.size(); ++n) {
    const double rtilde = state.rhat[n] - chi_old * state.mur[n];
    sum += trunc_gauss_moments(rtilde, state.mur[n], TruncSide::positive).mean;
  }
  if (!(sum > 0.0) || !std::isfinite(sum))
    throw std::runtime_error("em_update_exp_chi: degenerate denominator");
  return static_cast<double>(state.rhat.size()) / sum;
}

// Mixture update from the per-coefficient component statistics produced by
// nngm_components at the converged state. Locations move to the
// responsibility-weighted truncated posterior means, scales to the matching
// spreads around the old locations, weights and activity to the
// responsibility masses. Components left without responsibility are dropped.
inline NngmParams em_update_nngm(const std::vector<NngmEval>& evals,
                                 const NngmParams& old, double phi_floor,
                                 int* dropped = nullptr) {
  old.validate();
  detail::require(phi_floor > 0.0, "em_update_nngm: phi_floor must be > 0");
  detail::require(!evals.empty(), "em_update_nngm: no posterior evaluations");
  const std::size_t L = old.size();
  const double n_count = static_cast<double>(evals.size());
  if (dropped) *dropped = 0;

  std::vector<double> mass(L, 0.0), s_mean(L, 0.0), s_spread(L, 0.0);
  std::vector<double> log_betas(L);
  double pi_sum = 0.0;
  for (const auto& ev : evals) {
    detail::require(ev.per_comp.size() == L,
                    "em_update_nngm: component count mismatch");
    for (std::size_t k = 0; k < L; ++k) log_betas[k] = ev.per_comp[k].log_beta;
    const double log_total = log_sum_exp(log_betas);
    pi_sum += ev.pi;
    for (std::size_t k = 0; k < L; ++k) {
      const auto& c = ev.per_comp[k];
      const double w = ev.pi * std::exp(c.log_beta - log_total);
      if (!(w > 0.0)) continue;
      const auto tm = trunc_gauss_moments(c.gamma, c.nu, TruncSide::positive);
      const double d = tm.mean - old.theta[k];
      mass[k] += w;
      s_mean[k] += w * tm.mean;
      s_spread[k] += w * (d * d + (tm.second_moment - tm.mean * tm.mean));
    }
  }

  NngmParams next;
  next.tau = std::clamp(pi_sum / n_count, 1e-6, 1.0 - 1e-6);
  if (!(pi_sum > 0.0)) {
    next.omega = old.omega;
    next.theta = old.theta;
    next.phi = old.phi;
    return next;
  }
  double omega_sum = 0.0;
  for (std::size_t k = 0; k < L; ++k) {
    if (!(mass[k] > 0.0) || !std::isfinite(mass[k])) {
      if (dropped) ++*dropped;
      continue;
    }
    next.omega.push_back(mass[k]);
    next.theta.push_back(s_mean[k] / mass[k]);
    next.phi.push_back(std::max(s_spread[k] / mass[k], phi_floor));
    omega_sum += mass[k];
  }
  if (next.omega.empty())
    throw std::runtime_error("em_update_nngm: every component lost its mass");
  for (double& w : next.omega) w /= omega_sum;
  next.validate();
  return next;
}

// Three-component fit to the uniform density on [0, 1], generated by
// tools/fit_uniform_nngm.
inline constexpr double kUniformFitOmega3[3] = {
    0.20475916160011509, 0.59048167679976427, 0.20475916160012014};
inline constexpr double kUniformFitTheta3[3] = {
    0.12393778614403704, 0.50000000000000178, 0.87606221385595517};
inline constexpr double kUniformFitPhi3[3] = {
    0.0061642606293572065, 0.038771274471448014, 0.0061642606293601521};

// Mixture shaped like the uniform density on [0, width]: the frozen
// three-component table when order is 3, an equal-width partition otherwise.
inline NngmParams uniform_fit_params(int order, double width, double tau) {
  detail::require(order >= 1, "uniform_fit_params: order must be >= 1");
  detail::require(width > 0.0, "uniform_fit_params: width must be > 0");
  NngmParams p;
  p.tau = tau;
  if (order == 3) {
    for (int k = 0; k < 3; ++k) {
      p.omega.push_back(kUniformFitOmega3[k]);
      p.theta.push_back(width * kUniformFitTheta3[k]);
      p.phi.push_back(width * width * kUniformFitPhi3[k]);
    }
    return p;
  }
  const double slice = 1.0 / order;
  for (int k = 0; k < order; ++k) {
    p.omega.push_back(slice);
    p.theta.push_back(width * (k + 0.5) * slice);
    p.phi.push_back(width * width * slice * slice / 12.0);
  }
  return p;
}

struct NnlInit {
  double chi;
  double psi;
};

// Exponential rate and noise parameter for the shrinkage solver.
inline NnlInit init_nnl(const Problem& p, NoiseModel noise,
                        double snr_hint = 100.0) {
  detail::require(snr_hint > 0.0, "init_nnl: snr_hint must be > 0");
  const double m = static_cast<double>(p.op.rows());
  const double psi = noise == NoiseModel::awgn
                         ? p.y.squaredNorm() / ((snr_hint + 1.0) * m)
                         : 1.0;
  return {1e-2, std::max(psi, 1e-300)};
}

struct NngmInit {
  double psi;
  double phi0;
  NngmParams params;
};

// Activity from the phase-transition curve at the sampling ratio, noise and
// signal power split by the assumed SNR, and the mixture shaped like the
// uniform density whose second moment matches the signal power.
inline NngmInit init_nngm(const Problem& p, int order = 3,
                          double snr_hint = 100.0,
                          NoiseModel noise = NoiseModel::awgn) {
  detail::require(snr_hint > 0.0, "init_nngm: snr_hint must be > 0");
  const double m = static_cast<double>(p.op.rows());
  const double n = static_cast<double>(p.op.cols());
  const double y2 = p.y.squaredNorm();
  detail::require(y2 > 0.0, "init_nngm: observations are all zero");
  const double delta = std::min(m / n, 1.0);
  const double tau0 =
      std::min(delta * theoretical_ptc(delta), 1.0 - 1e-6);
  const double var0 = y2 / ((snr_hint + 1.0) * m);
  const double phi0 = (y2 - m * var0) / (p.op.fro_norm_sq() * tau0);
  NngmInit init;
  init.psi = noise == NoiseModel::awgn ? var0 : 1.0;
  init.phi0 = phi0;
  init.params = uniform_fit_params(order, std::sqrt(3.0 * phi0), tau0);
  return init;
}

struct EmResult {
  InputChannel input;
  OutputChannel output;
  GampResult gamp;
  int em_iters = 0;
  double last_change = 0.0;
};

namespace detail {

inline double rel_change(double next, double old) {
  return std::fabs(next - old) / std::max(std::fabs(old), 1e-300);
}

}  // namespace detail

// Alternates converged runs with one full parameter pass, warm-starting each
// run from the previous state, until the largest relative parameter change
// drops below em_tol. nngm_phi_floor of 0 selects 1e-8 times the entry-time
// mean mixture scale.
inline EmResult em_outer_loop(const Problem& problem, InputChannel input,
                              OutputChannel output, const EmConfig& em,
                              const GampConfig& gamp_cfg,
                              double nngm_phi_floor = 0.0) {
  em.validate();
  detail::require(!em.learn_awgn_psi || output.model == NoiseModel::awgn,
                  "em_outer_loop: awgn learning needs the awgn channel");
  detail::require(!em.learn_laplace_psi || output.model == NoiseModel::laplacian,
                  "em_outer_loop: laplacian learning needs that channel");
  detail::require(!em.learn_exp_chi || input.prior == PriorModel::exponential,
                  "em_outer_loop: rate learning needs the exponential prior");
  detail::require(!em.learn_nngm || input.prior == PriorModel::nngm,
                  "em_outer_loop: mixture learning needs the mixture prior");

  const AugmentedProblem aug = augment(problem);
  output.boundary = aug.boundary;
  double phi_floor = nngm_phi_floor;
  if (em.learn_nngm && phi_floor <= 0.0) {
    double scale = 0.0;
    for (double v : input.nngm.phi) scale += v;
    phi_floor = 1e-8 * scale / static_cast<double>(input.nngm.size());
  }

  GampState state = initialize(input, aug.op.cols(), aug.op.rows());
  GampConfig g = gamp_cfg;
  g.validate();
  if (g.variance_floor == 0.0) {
    const double scale = state.mux.mean();
    g.variance_floor = 1e-12 * (scale > 0.0 ? scale : 1.0);
  }

  EmResult res;
  res.input = std::move(input);
  res.output = std::move(output);
  for (int i = 0; i < em.max_em_iters; ++i) {
    res.gamp = run_from(std::move(state), aug, res.input, res.output, g);
    state = res.gamp.state;
    res.em_iters = i + 1;
    if (!em.learns_anything()) return res;

    // noise updates move at most one decade per pass: their spread terms are
    // meaningless until the variance state has equilibrated, and an
    // uncontrolled first pass can throw the trajectory into a basin of
    // gross over-regularization that the iteration never leaves. The gaussian
    // update switches sides with the run mode: the coefficient-side form for
    // max-sum (prox outputs are not posterior moments), the output-side form
    // for sum-product (the coefficient-side residual counts prior misfit as
    // noise, which blocks the variance from annealing on clean data).
    double change = 0.0;
    if (em.learn_awgn_psi) {
      const double raw =
          g.mode == GampMode::sum_product
              ? em_update_awgn_psi_outputs(state, problem, res.output.psi)
              : em_update_awgn_psi(state, problem, res.output.psi);
      const double next =
          std::clamp(raw, 0.1 * res.output.psi, 10.0 * res.output.psi);
      change = std::max(change, detail::rel_change(next, res.output.psi));
      res.output.psi = next;
    }
    if (em.learn_laplace_psi) {
      const double raw = em_update_laplace_psi(state, problem, res.output.psi);
      const double next =
          std::clamp(raw, 0.1 * res.output.psi, 10.0 * res.output.psi);
      change = std::max(change, detail::rel_change(next, res.output.psi));
      res.output.psi = next;
    }
    if (em.learn_exp_chi) {
      const double next = em_update_exp_chi(state, res.input.chi);
      change = std::max(change, detail::rel_change(next, res.input.chi));
      res.input.chi = next;
    }
    if (em.learn_nngm) {
      std::vector<NngmEval> evals(state.rhat.size());
      for (Eigen::Index n = 0; n < state.rhat.size(); ++n) {
        const InputChannelRequest req{state.rhat[n], state.mur[n],
                                      GampMode::sum_product};
        evals[n] = nngm_components(req, res.input.nngm);
      }
      const NngmParams next =
          em_update_nngm(evals, res.input.nngm, phi_floor);
      change = std::max(change, detail::rel_change(next.tau, res.input.nngm.tau));
      if (next.size() == res.input.nngm.size()) {
        for (std::size_t k = 0; k < next.size(); ++k) {
          change = std::max(change,
                            detail::rel_change(next.omega[k],
                                               res.input.nngm.omega[k]));
          change = std::max(change, detail::rel_change(next.theta[k],
                                                       res.input.nngm.theta[k]));
          change = std::max(change,
                            detail::rel_change(next.phi[k],
                                               res.input.nngm.phi[k]));
        }
      }
      res.input.nngm = next;
    }
    res.last_change = change;
    if (change < em.em_tol) break;
  }
  return res;
}

struct OrderSelection {
  int order = 0;
  NngmParams params;
  std::vector<double> scores;
};

namespace detail {

inline double data_log_likelihood(const GampState& state,
                                  const Problem& problem,
                                  const OutputChannel& output) {
  double ll = 0.0;
  for (Eigen::Index m = 0; m < problem.y.size(); ++m) {
    const OutputChannelRequest req{problem.y[m], state.phat[m], state.mup[m],
                                   GampMode::sum_product};
    ll += output.log_norm(req);
  }
  return ll;
}

}  // namespace detail

// Mixture-order choice. Without a search the configured fixed order is
// returned with its data-driven initialization. With search_max_order set,
// each candidate order is fit by the outer loop and scored by the approximate
// data log-likelihood minus the information penalty (3L + 1 free parameters,
// half log of the measurement count each).
inline OrderSelection select_model_order(const Problem& problem,
                                         NoiseModel noise, const EmConfig& em,
                                         const GampConfig& gamp_cfg,
                                         double snr_hint = 100.0) {
  em.validate();
  if (em.search_max_order == 0) {
    OrderSelection sel;
    sel.order = em.mixture_order;
    sel.params = init_nngm(problem, sel.order, snr_hint, noise).params;
    return sel;
  }
  const double m = static_cast<double>(problem.y.size());
  OrderSelection sel;
  double best = -std::numeric_limits<double>::infinity();
  for (int order = 1; order <= em.search_max_order; ++order) {
    const NngmInit init = init_nngm(problem, order, snr_hint, noise);
    InputChannel in;
    in.prior = PriorModel::nngm;
    in.nngm = init.params;
    OutputChannel out;
    out.model = noise;
    out.psi = init.psi;
    EmConfig per_order = em;
    per_order.learn_nngm = true;
    EmResult fit = em_outer_loop(problem, in, out, per_order, gamp_cfg,
                                 1e-8 * init.phi0);
    const double ll =
        detail::data_log_likelihood(fit.gamp.state, problem, fit.output);
    const double score = ll - 0.5 * (3.0 * order + 1.0) * std::log(m);
    sel.scores.push_back(score);
    if (score > best) {
      best = score;
      sel.order = order;
      sel.params = fit.input.nngm;
    }
  }
  return sel;
}

}  // namespace gampkit
