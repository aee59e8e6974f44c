#pragma once

// Scalar input (prior) and output (likelihood) estimators. Max-sum channels
// return the prox location and mu * prox-slope; sum-product channels return
// posterior mean and variance. All are pure functions of (request, params).

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "gampkit/special.hpp"

namespace gampkit {

enum class GampMode { max_sum, sum_product };

struct ChannelMoments {
  double mean;
  double var;
};

struct OutputChannelRequest {
  double y;
  double phat;
  double mup;
  GampMode mode;
};

struct InputChannelRequest {
  double rhat;
  double mur;
  GampMode mode;
};

namespace detail {
inline void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}
}  // namespace detail

// Quadratic loss: MAP and MMSE coincide, so both modes share this form.
inline ChannelMoments awgn_output(const OutputChannelRequest& req, double psi) {
  detail::require(psi > 0.0, "awgn_output: psi must be > 0");
  detail::require(req.mup > 0.0, "awgn_output: mup must be > 0");
  const double gain = req.mup / (req.mup + psi);
  return {req.phat + gain * (req.y - req.phat), gain * psi};
}

// log of Integral f(y|z) N(z; phat, mup) dz for the AWGN likelihood
inline double awgn_output_log_norm(const OutputChannelRequest& req, double psi) {
  return log_normal_pdf(req.y, req.phat, req.mup + psi);
}

// Noiseless constraint row: the posterior is the point mass at c.
inline ChannelMoments pseudo_output(const OutputChannelRequest&, double c) {
  return {c, 0.0};
}

// Shifted soft threshold; boundaries belong to the interior branch.
inline ChannelMoments laplace_output_maxsum(const OutputChannelRequest& req,
                                            double psi) {
  detail::require(psi > 0.0, "laplace_output_maxsum: psi must be > 0");
  detail::require(req.mup > 0.0, "laplace_output_maxsum: mup must be > 0");
  const double pt = req.phat - req.y;
  const double t = psi * req.mup;
  if (pt > t) return {req.phat - t, req.mup};
  if (pt < -t) return {req.phat + t, req.mup};
  return {req.y, 0.0};
}

namespace detail {
struct LaplaceSplit {
  double log_cl, log_cu, log_c, wl, wu, pl, pu, kl, ku;
};

// Split of the Laplacian-likelihood posterior into the z<y and z>y parts.
inline LaplaceSplit laplace_split(const OutputChannelRequest& req, double psi) {
  LaplaceSplit s;
  const double pt = req.phat - req.y;
  const double sd = std::sqrt(req.mup);
  s.pl = pt + psi * req.mup;
  s.pu = pt - psi * req.mup;
  s.kl = s.pl / sd;
  s.ku = -s.pu / sd;
  const double common = std::log(0.5 * psi) + 0.5 * psi * psi * req.mup;
  s.log_cl = common + psi * pt + log_normal_ccdf(s.kl);
  s.log_cu = common - psi * pt + log_normal_ccdf(s.ku);
  s.log_c = log_add_exp(s.log_cl, s.log_cu);
  s.wl = std::exp(s.log_cl - s.log_c);
  s.wu = std::exp(s.log_cu - s.log_c);
  return s;
}
}  // namespace detail

inline ChannelMoments laplace_output_sumprod(const OutputChannelRequest& req,
                                             double psi) {
  detail::require(psi > 0.0, "laplace_output_sumprod: psi must be > 0");
  detail::require(req.mup > 0.0, "laplace_output_sumprod: mup must be > 0");
  const auto s = detail::laplace_split(req, psi);
  const auto lo = trunc_gauss_moments(s.pl, req.mup, TruncSide::negative);
  const auto hi = trunc_gauss_moments(s.pu, req.mup, TruncSide::positive);
  const double shift = s.wl * lo.mean + s.wu * hi.mean;
  const double second = s.wl * lo.second_moment + s.wu * hi.second_moment;
  double var = second - shift * shift;
  if (var < 0.0) var = 0.0;
  return {req.y + shift, var};
}

inline double laplace_output_log_norm(const OutputChannelRequest& req,
                                      double psi) {
  detail::require(psi > 0.0, "laplace_output_log_norm: psi must be > 0");
  return detail::laplace_split(req, psi).log_c;
}

// Improper flat-positive prior; boundary goes to the zero branch.
inline ChannelMoments nnuniform_input_maxsum(const InputChannelRequest& req) {
  detail::require(req.mur > 0.0, "nnuniform_input_maxsum: mur must be > 0");
  if (req.rhat > 0.0) return {req.rhat, req.mur};
  return {0.0, 0.0};
}

// Exponential(chi) prior: positive-side soft threshold at chi*mur.
inline ChannelMoments exponential_input_maxsum(const InputChannelRequest& req,
                                               double chi) {
  detail::require(chi > 0.0, "exponential_input_maxsum: chi must be > 0");
  detail::require(req.mur > 0.0, "exponential_input_maxsum: mur must be > 0");
  const double t = chi * req.mur;
  if (req.rhat > t) return {req.rhat - t, req.mur};
  return {0.0, 0.0};
}

struct NngmParams {
  double tau = 1.0;
  std::vector<double> omega, theta, phi;

  std::size_t size() const { return omega.size(); }

  void validate() const {
    detail::require(tau > 0.0 && tau <= 1.0, "NngmParams: tau must be in (0,1]");
    detail::require(!omega.empty() && omega.size() == theta.size() &&
                        omega.size() == phi.size(),
                    "NngmParams: omega/theta/phi sizes must match and be >= 1");
    double sum = 0.0;
    for (std::size_t l = 0; l < omega.size(); ++l) {
      detail::require(omega[l] > 0.0, "NngmParams: weights must be positive");
      detail::require(phi[l] >= 1e-14, "NngmParams: phi must be >= 1e-14");
      detail::require(std::isfinite(theta[l]), "NngmParams: theta must be finite");
      sum += omega[l];
    }
    detail::require(std::fabs(sum - 1.0) <= 1e-8,
                    "NngmParams: weights must sum to 1");
  }
};

struct NngmPerComponent {
  double alpha;
  double gamma;
  double nu;
  double log_beta;
};

struct NngmEval {
  std::vector<NngmPerComponent> per_comp;
  double log_zeta;
  double pi;
};

// Per-component Gaussian products, truncation normalizers, and the activity
// probability, all combined in the log domain.
inline NngmEval nngm_components(const InputChannelRequest& req,
                                const NngmParams& p) {
  p.validate();
  detail::require(req.mur > 0.0, "nngm_components: mur must be > 0");
  const std::size_t L = p.size();
  NngmEval ev;
  ev.per_comp.resize(L);
  std::vector<double> log_betas(L);
  for (std::size_t l = 0; l < L; ++l) {
    const auto gp = gauss_product(req.rhat, req.mur, p.theta[l], p.phi[l]);
    const double alpha = -gp.mean / std::sqrt(gp.var);
    const double log_beta = std::log(p.omega[l]) + gp.log_scale +
                            log_normal_ccdf(alpha) -
                            log_normal_ccdf(-p.theta[l] / std::sqrt(p.phi[l]));
    ev.per_comp[l] = {alpha, gp.mean, gp.var, log_beta};
    log_betas[l] = log_beta;
  }
  const double log_mix = std::log(p.tau) + log_sum_exp(log_betas);
  const double log_spike =
      p.tau < 1.0 ? std::log1p(-p.tau) + log_normal_pdf(0.0, req.rhat, req.mur)
                  : -std::numeric_limits<double>::infinity();
  ev.log_zeta = log_add_exp(log_spike, log_mix);
  ev.pi = std::exp(log_mix - ev.log_zeta);
  if (ev.pi > 1.0) ev.pi = 1.0;
  return ev;
}

inline ChannelMoments nngm_input_sumprod(const InputChannelRequest& req,
                                         const NngmParams& p) {
  const NngmEval ev = nngm_components(req, p);
  const double log_tau = std::log(p.tau);
  double mean = 0.0, second = 0.0;
  for (const auto& c : ev.per_comp) {
    const double w = std::exp(log_tau + c.log_beta - ev.log_zeta);
    const auto tm = trunc_gauss_moments(c.gamma, c.nu, TruncSide::positive);
    mean += w * tm.mean;
    second += w * tm.second_moment;
  }
  double var = second - mean * mean;
  if (var < 0.0) var = 0.0;
  return {mean, var};
}

// Mean and variance of the Bernoulli-NNGM prior itself (for initialization).
inline ChannelMoments nngm_prior_moments(const NngmParams& p) {
  p.validate();
  double mean = 0.0, second = 0.0;
  for (std::size_t l = 0; l < p.size(); ++l) {
    const auto tm = trunc_gauss_moments(p.theta[l], p.phi[l], TruncSide::positive);
    mean += p.tau * p.omega[l] * tm.mean;
    second += p.tau * p.omega[l] * tm.second_moment;
  }
  double var = second - mean * mean;
  if (var < 0.0) var = 0.0;
  return {mean, var};
}

enum class NoiseModel { awgn, laplacian };

// Row-dispatching output channel over an augmented problem: rows past the
// boundary are noiseless pseudo-measurements.
struct OutputChannel {
  NoiseModel model = NoiseModel::awgn;
  double psi = 1.0;
  std::size_t boundary = 0;

  ChannelMoments moments(std::size_t m, const OutputChannelRequest& req) const {
    if (m >= boundary) return pseudo_output(req, req.y);
    if (model == NoiseModel::awgn) return awgn_output(req, psi);
    return req.mode == GampMode::max_sum ? laplace_output_maxsum(req, psi)
                                         : laplace_output_sumprod(req, psi);
  }

  double log_norm(const OutputChannelRequest& req) const {
    return model == NoiseModel::awgn ? awgn_output_log_norm(req, psi)
                                     : laplace_output_log_norm(req, psi);
  }
};

enum class PriorModel { nn_uniform, exponential, nngm };

struct InputChannel {
  PriorModel prior = PriorModel::nn_uniform;
  double chi = 1e-2;
  NngmParams nngm;

  ChannelMoments moments(const InputChannelRequest& req) const {
    switch (prior) {
      case PriorModel::nn_uniform:
        detail::require(req.mode == GampMode::max_sum,
                        "nn_uniform prior is a max-sum channel");
        return nnuniform_input_maxsum(req);
      case PriorModel::exponential:
        detail::require(req.mode == GampMode::max_sum,
                        "exponential prior is a max-sum channel");
        return exponential_input_maxsum(req, chi);
      case PriorModel::nngm:
      default:
        detail::require(req.mode == GampMode::sum_product,
                        "nngm prior is a sum-product channel");
        return nngm_input_sumprod(req, nngm);
    }
  }

  // x(1) and mux(1); the improper flat prior has no moments and falls back
  // to (1, 1).
  ChannelMoments prior_moments() const {
    switch (prior) {
      case PriorModel::nn_uniform:
        return {1.0, 1.0};
      case PriorModel::exponential:
        return {1.0 / chi, 1.0 / (chi * chi)};
      case PriorModel::nngm:
      default:
        return nngm_prior_moments(nngm);
    }
  }
};

}  // namespace gampkit
