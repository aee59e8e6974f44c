#pragma once

// One entry point for the four named algorithms. A spec picks the algorithm,
// noise model, optional equality constraint, and any fixed parameters; solve
// wires the matching channels, runs a single converged pass for the
// fixed-parameter solvers or the self-tuning outer loop for the EM ones, and
// reports the estimate with its posterior spread and diagnostics.

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "gampkit/channels.hpp"
#include "gampkit/em.hpp"
#include "gampkit/gamp.hpp"
#include "gampkit/linear_operator.hpp"

namespace gampkit {

enum class Algorithm { nnls_gamp, nnl_gamp, em_nnl_gamp, em_nngm_gamp };

struct SolveSpec {
  Algorithm algorithm = Algorithm::nnls_gamp;
  NoiseModel noise_model = NoiseModel::awgn;
  std::optional<EqualityConstraint> constraint;
  std::map<std::string, double> fixed_params;
  GampConfig gamp;
  EmConfig em;
};

struct Solution {
  Vec xhat;
  Vec posterior_var;
  std::optional<Vec> activity;
  std::map<std::string, double> learned_params;
  GampResult diagnostics;
};

namespace detail {

inline double fixed_param(const std::map<std::string, double>& params,
                          const char* key, double fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

inline void check_keys(const std::map<std::string, double>& params,
                       std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : params) {
    bool known = false;
    for (const char* name : allowed) known = known || key == name;
    if (!known)
      throw std::invalid_argument("solve: unknown fixed parameter '" + key +
                                  "'");
  }
}

}  // namespace detail

inline Solution solve(const Problem& problem, const SolveSpec& spec) {
  spec.gamp.validate();
  spec.em.validate();
  if (spec.constraint && problem.constraint)
    throw std::invalid_argument(
        "solve: constraint given on both the problem and the spec");
  std::optional<Problem> rebound;
  if (spec.constraint) rebound.emplace(problem.op, problem.y, spec.constraint);
  const Problem& eff = rebound ? *rebound : problem;

  GampConfig g = spec.gamp;
  g.mode = spec.algorithm == Algorithm::em_nngm_gamp ? GampMode::sum_product
                                                     : GampMode::max_sum;

  InputChannel in;
  OutputChannel out;
  out.model = spec.noise_model;
  EmConfig em = spec.em;
  em.learn_awgn_psi = false;
  em.learn_laplace_psi = false;
  em.learn_exp_chi = false;
  em.learn_nngm = false;
  double nngm_floor = 0.0;

  const auto& fp = spec.fixed_params;
  const bool pinned_psi = fp.count("psi") > 0;
  switch (spec.algorithm) {
    case Algorithm::nnls_gamp: {
      detail::check_keys(fp, {"psi"});
      in.prior = PriorModel::nn_uniform;
      out.psi = detail::fixed_param(fp, "psi", 1.0);
      break;
    }
    case Algorithm::nnl_gamp: {
      detail::check_keys(fp, {"lambda", "chi", "psi"});
      in.prior = PriorModel::exponential;
      const bool has_lambda = fp.count("lambda") > 0;
      if (has_lambda && fp.count("chi") > 0)
        throw std::invalid_argument(
            "solve: give lambda or (chi, psi), not both");
      if (has_lambda) {
        if (spec.noise_model != NoiseModel::awgn)
          throw std::invalid_argument(
              "solve: lambda maps to a rate only under gaussian noise; give "
              "(chi, psi) directly");
        if (!(fp.at("lambda") > 0.0))
          throw std::invalid_argument(
              "solve: lambda must be > 0; use nnls_gamp for lambda = 0");
        out.psi = detail::fixed_param(fp, "psi", 1.0);
        in.chi = fp.at("lambda") / out.psi;
      } else if (fp.count("chi") > 0 && pinned_psi) {
        in.chi = fp.at("chi");
        out.psi = fp.at("psi");
      } else {
        throw std::invalid_argument(
            "solve: the shrinkage solver needs lambda or (chi, psi)");
      }
      break;
    }
    case Algorithm::em_nnl_gamp: {
      detail::check_keys(fp, {"psi", "snr_hint"});
      in.prior = PriorModel::exponential;
      const NnlInit init = init_nnl(eff, spec.noise_model,
                                    detail::fixed_param(fp, "snr_hint", 100.0));
      in.chi = init.chi;
      out.psi = pinned_psi ? fp.at("psi") : init.psi;
      em.learn_exp_chi = true;
      if (!pinned_psi) {
        em.learn_awgn_psi = spec.noise_model == NoiseModel::awgn;
        em.learn_laplace_psi = spec.noise_model == NoiseModel::laplacian;
      }
      break;
    }
    case Algorithm::em_nngm_gamp:
    default: {
      detail::check_keys(fp, {"psi", "snr_hint"});
      in.prior = PriorModel::nngm;
      const double snr = detail::fixed_param(fp, "snr_hint", 100.0);
      em.learn_nngm = true;
      if (!pinned_psi) {
        em.learn_awgn_psi = spec.noise_model == NoiseModel::awgn;
        em.learn_laplace_psi = spec.noise_model == NoiseModel::laplacian;
      }
      int order = em.mixture_order;
      std::optional<NngmParams> searched;
      if (em.search_max_order > 0) {
        const OrderSelection sel =
            select_model_order(eff, spec.noise_model, em, g, snr);
        order = sel.order;
        searched = sel.params;
      }
      const NngmInit init = init_nngm(eff, order, snr, spec.noise_model);
      in.nngm = searched ? *searched : init.params;
      out.psi = pinned_psi ? fp.at("psi") : init.psi;
      nngm_floor = 1e-8 * init.phi0;
      break;
    }
  }
  if (in.prior == PriorModel::exponential && !(in.chi > 0.0))
    throw std::invalid_argument("solve: the shrinkage rate must be > 0");
  if (!(out.psi > 0.0))
    throw std::invalid_argument("solve: the noise parameter must be > 0");

  const EmResult res =
      em_outer_loop(eff, std::move(in), std::move(out), em, g, nngm_floor);

  Solution sol;
  sol.xhat = res.gamp.state.xhat;
  sol.posterior_var = res.gamp.state.mux;
  sol.diagnostics = res.gamp;
  if (!sol.xhat.allFinite())
    throw GampDivergence("solve: estimate is not finite");
  if (spec.algorithm == Algorithm::em_nngm_gamp) {
    Vec pi(sol.xhat.size());
    for (Eigen::Index n = 0; n < pi.size(); ++n) {
      const InputChannelRequest req{res.gamp.state.rhat[n],
                                    res.gamp.state.mur[n],
                                    GampMode::sum_product};
      pi[n] = nngm_components(req, res.input.nngm).pi;
    }
    sol.activity = std::move(pi);
    sol.learned_params["psi"] = res.output.psi;
    sol.learned_params["tau"] = res.input.nngm.tau;
    sol.learned_params["order"] = double(res.input.nngm.size());
    for (std::size_t l = 0; l < res.input.nngm.size(); ++l) {
      const std::string suffix = std::to_string(l);
      sol.learned_params["omega" + suffix] = res.input.nngm.omega[l];
      sol.learned_params["theta" + suffix] = res.input.nngm.theta[l];
      sol.learned_params["phi" + suffix] = res.input.nngm.phi[l];
    }
  } else if (spec.algorithm == Algorithm::em_nnl_gamp) {
    sol.learned_params["chi"] = res.input.chi;
    sol.learned_params["psi"] = res.output.psi;
    if (spec.noise_model == NoiseModel::awgn)
      sol.learned_params["lambda"] = res.input.chi * res.output.psi;
  }
  return sol;
}

}  // namespace gampkit
