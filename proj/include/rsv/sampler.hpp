#pragma once

// MCMC for the RSV model: HMC for the latent path, Metropolis-within-Gibbs
// for theta. One sweep runs, in this order:
//
//   hmc_update_volatility, update_mu, update_phi, update_sigma_eta_sq,
//   update_xi, update_sigma_u_sq

#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rsv/integrator.hpp"
#include "rsv/model.hpp"
#include "rsv/parallel.hpp"
#include "rsv/rng.hpp"

namespace rsv {

/// |ΔH| above this marks a trajectory as divergent.
inline constexpr double kEnergyDivergenceBound = 1000.0;

struct NumericFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PriorSpec {
  double mu_mean = 0.0;
  double mu_var = 100.0;
  double xi_mean = 0.0;
  double xi_var = 100.0;
  double var_shape = 2.5;  // inverse-gamma, shared by sigma_eta^2 and sigma_u^2
  double var_scale = 0.025;
  double phi_a = 20.0;  // Beta on (phi + 1) / 2
  double phi_b = 1.5;

  void validate() const {
    if (!(mu_var > 0 && xi_var > 0 && var_shape > 0 && var_scale > 0 && phi_a > 0 && phi_b > 0))
      throw std::domain_error("prior variances, shapes and scales must be positive");
  }
};

struct SamplerConfig {
  std::uint64_t seed = 0;
  MDConfig<double> md{0.02, 50};
  int n_burnin = 0;
  int n_samples = 1000;
  int thin = 1;
  bool store_latent = false;
  int workers = 1;
  /// HMC-only sweeps with theta frozen at its initial value, run before the
  /// first full sweep. The path starts at ln RV, where the RV residuals are
  /// exactly zero; drawing sigma_u^2 there collapses it to the prior scale.
  int latent_warmup = 20;

  void validate() const {
    md.validate();
    if (latent_warmup < 0) throw std::invalid_argument("latent warm-up must be non-negative");
    if (n_burnin < 0) throw std::invalid_argument("burn-in must be non-negative");
    if (n_samples < 1) throw std::invalid_argument("need at least one stored sample");
    if (thin < 1) throw std::invalid_argument("thin must be at least 1");
  }
};

struct ChainSample {
  std::int64_t iter = 0;
  Params params;
  bool accept = false;
  /// +infinity when the trajectory diverged.
  double delta_h = 0.0;
  std::optional<std::vector<double>> latent;

  bool divergent() const { return std::isinf(delta_h) && delta_h > 0; }
  friend bool operator==(const ChainSample&, const ChainSample&) = default;
};

struct Chain {
  std::vector<ChainSample> samples;
  std::int64_t sweeps = 0;
  std::int64_t divergent_proposals = 0;
  std::int64_t phi_accepts = 0;
};

struct ChainInit {
  Params params;
  std::vector<double> latent;
};

/// h_t = ln RV_t (xi = 0), mu = mean(h), phi = 0.9, both variances 0.1.
inline ChainInit default_initialization(const Dataset& data) {
  ChainInit init;
  init.latent = data.log_rv();
  init.params.xi = 0.0;
  init.params.phi = 0.9;
  init.params.mu = std::accumulate(init.latent.begin(), init.latent.end(), 0.0) / static_cast<double>(data.size());
  init.params.sigma_eta_sq = 0.1;
  init.params.sigma_u_sq = 0.1;
  return init;
}

inline std::vector<double> refresh_momenta(Rng& rng, std::size_t n) {
  if (n < 2) throw std::invalid_argument("momentum vector needs length at least 2");
  std::vector<double> p(n);
  for (auto& x : p) x = standard_normal(rng);
  return p;
}

struct HmcOutcome {
  bool accept = false;
  double delta_h = 0.0;
  bool divergent() const { return std::isinf(delta_h); }
};

/// One HMC proposal for the latent path; `h` is replaced on accept.
inline HmcOutcome hmc_update_volatility(std::vector<double>& h, const Params& params, const Observations<double>& obs,
                                        const MDConfig<double>& md, Rng& rng, const Executor& exec = Executor{}) {
  PhaseState<double> start{h, refresh_momenta(rng, h.size())};
  const double h_old = hamiltonian<double>(start, params, obs);
  const RsvPotential<double> potential(params, obs);
  const auto traj = integrate_trajectory(start, md, potential, exec);
  constexpr double kSentinel = std::numeric_limits<double>::infinity();
  if (traj.divergent || !std::isfinite(h_old)) return {false, kSentinel};
  const double delta = hamiltonian<double>(traj.state, params, obs) - h_old;
  if (!std::isfinite(delta) || std::abs(delta) > kEnergyDivergenceBound) return {false, kSentinel};
  const bool accept = delta <= 0.0 || uniform01(rng) < std::exp(-delta);
  if (accept) h = traj.state.h;
  return {accept, delta};
}

struct NormalConditional {
  double mean;
  double var;
};

/// Full conditional of mu: normal prior times the AR(1) block including the
/// stationary initial term.
inline NormalConditional mu_conditional(std::span<const double> h, const Params& params, const PriorSpec& prior) {
  if (!(std::abs(params.phi) < 1.0)) throw std::domain_error("phi must lie in (-1, 1)");
  const double phi = params.phi;
  const double w0 = 1.0 - phi * phi;
  const double w = (1.0 - phi) * (1.0 - phi);
  double lin = w0 * h[0];
  for (std::size_t t = 0; t + 1 < h.size(); ++t) lin += (1.0 - phi) * (h[t + 1] - phi * h[t]);
  const double precision = (w0 + static_cast<double>(h.size() - 1) * w) / params.sigma_eta_sq + 1.0 / prior.mu_var;
  if (!(precision > 0.0) || !std::isfinite(precision)) throw std::domain_error("degenerate conditional variance for mu");
  const double var = 1.0 / precision;
  return {var * (lin / params.sigma_eta_sq + prior.mu_mean / prior.mu_var), var};
}

inline double update_mu(std::span<const double> h, const Params& params, const PriorSpec& prior, Rng& rng) {
  const auto c = mu_conditional(h, params, prior);
  return c.mean + std::sqrt(c.var) * standard_normal(rng);
}

inline NormalConditional xi_conditional(std::span<const double> h, const Observations<double>& obs, const Params& params,
                                        const PriorSpec& prior) {
  double resid = 0.0;
  for (std::size_t t = 0; t < h.size(); ++t) resid += obs.log_rv[t] - h[t];
  const double precision = static_cast<double>(h.size()) / params.sigma_u_sq + 1.0 / prior.xi_var;
  if (!(precision > 0.0) || !std::isfinite(precision)) throw std::domain_error("degenerate conditional variance for xi");
  const double var = 1.0 / precision;
  return {var * (resid / params.sigma_u_sq + prior.xi_mean / prior.xi_var), var};
}

inline double update_xi(std::span<const double> h, const Observations<double>& obs, const Params& params,
                        const PriorSpec& prior, Rng& rng) {
  const auto c = xi_conditional(h, obs, params, prior);
  return c.mean + std::sqrt(c.var) * standard_normal(rng);
}

struct InverseGammaConditional {
  double shape;
  double scale;
};

inline InverseGammaConditional sigma_u_sq_conditional(std::span<const double> h, const Observations<double>& obs,
                                                      double xi, const PriorSpec& prior) {
  if (h.size() < 2) throw std::invalid_argument("series length must be at least 2");
  double ss = 0.0;
  for (std::size_t t = 0; t < h.size(); ++t) {
    const double r = obs.log_rv[t] - xi - h[t];
    ss += r * r;
  }
  return {prior.var_shape + 0.5 * static_cast<double>(h.size()), prior.var_scale + 0.5 * ss};
}

inline double update_sigma_u_sq(std::span<const double> h, const Observations<double>& obs, double xi,
                                const PriorSpec& prior, Rng& rng) {
  const auto c = sigma_u_sq_conditional(h, obs, xi, prior);
  return inverse_gamma(rng, c.shape, c.scale);
}

inline InverseGammaConditional sigma_eta_sq_conditional(std::span<const double> h, const Params& params,
                                                        const PriorSpec& prior) {
  if (!(std::abs(params.phi) < 1.0)) throw std::domain_error("phi must lie in (-1, 1)");
  const double phi = params.phi;
  const double mu = params.mu;
  double ss = (1.0 - phi * phi) * (h[0] - mu) * (h[0] - mu);
  for (std::size_t t = 0; t + 1 < h.size(); ++t) {
    const double e = h[t + 1] - mu - phi * (h[t] - mu);
    ss += e * e;
  }
  return {prior.var_shape + 0.5 * static_cast<double>(h.size()), prior.var_scale + 0.5 * ss};
}

inline double update_sigma_eta_sq(std::span<const double> h, const Params& params, const PriorSpec& prior, Rng& rng) {
  const auto c = sigma_eta_sq_conditional(h, params, prior);
  return inverse_gamma(rng, c.shape, c.scale);
}

/// Unnormalized log full conditional of phi; -infinity outside (-1, 1).
inline double phi_log_conditional(double phi, std::span<const double> h, const Params& params, const PriorSpec& prior) {
  if (!(std::abs(phi) < 1.0)) return -std::numeric_limits<double>::infinity();
  const double mu = params.mu;
  const double s2 = params.sigma_eta_sq;
  const double w0 = 1.0 - phi * phi;
  double ss = w0 * (h[0] - mu) * (h[0] - mu);
  for (std::size_t t = 0; t + 1 < h.size(); ++t) {
    const double e = h[t + 1] - mu - phi * (h[t] - mu);
    ss += e * e;
  }
  return 0.5 * std::log(w0) - 0.5 * ss / s2 + (prior.phi_a - 1.0) * std::log1p(phi) +
         (prior.phi_b - 1.0) * std::log1p(-phi);
}

/// Independence proposal: normal at the conditional least-squares estimate
/// with its conditional standard deviation.
struct PhiProposal {
  double center;
  double sd;

  double log_density(double phi) const {
    const double z = (phi - center) / sd;
    return -0.5 * z * z;
  }
};

inline PhiProposal phi_proposal(std::span<const double> h, const Params& params) {
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t t = 0; t + 1 < h.size(); ++t) {
    const double x = h[t] - params.mu;
    sxx += x * x;
    sxy += x * (h[t + 1] - params.mu);
  }
  if (!(sxx > 0.0)) return {0.0, 1.0};
  return {sxy / sxx, std::sqrt(params.sigma_eta_sq / sxx)};
}

/// Log Metropolis-Hastings ratio for moving phi_from -> phi_to.
inline double phi_log_acceptance(double phi_from, double phi_to, std::span<const double> h, const Params& params,
                                 const PriorSpec& prior) {
  const auto q = phi_proposal(h, params);
  const double to = phi_log_conditional(phi_to, h, params, prior);
  if (!std::isfinite(to)) return -std::numeric_limits<double>::infinity();
  const double from = phi_log_conditional(phi_from, h, params, prior);
  return (to - q.log_density(phi_to)) - (from - q.log_density(phi_from));
}

struct PhiUpdate {
  double phi;
  bool accepted;
};

inline PhiUpdate update_phi(std::span<const double> h, const Params& params, const PriorSpec& prior, Rng& rng) {
  if (!(std::abs(params.phi) < 1.0)) throw std::domain_error("phi must lie in (-1, 1)");
  const auto q = phi_proposal(h, params);
  const double proposal = q.center + q.sd * standard_normal(rng);
  const double u = uniform01(rng);
  if (!(std::abs(proposal) < 1.0)) return {params.phi, false};
  const double log_ratio = phi_log_acceptance(params.phi, proposal, h, params, prior);
  if (log_ratio >= 0.0 || std::log(u) < log_ratio) return {proposal, true};
  return {params.phi, false};
}

/// Runs the full sampler. Deterministic given (data, init, prior, config).
/// Throws NumericFailure if more than half of any 100 consecutive HMC
/// proposals diverge.
inline Chain run_chain(const Dataset& data, const ChainInit& init, const PriorSpec& prior, const SamplerConfig& config) {
  config.validate();
  prior.validate();
  init.params.validate();
  if (init.latent.size() != data.size()) throw std::invalid_argument("initial latent path length does not match data");

  constexpr int kStormWindow = 100;
  const Observations<double>& obs = data.obs();
  const Executor exec(config.workers);
  Rng rng(config.seed, 0);
  Params theta = init.params;
  std::vector<double> h = init.latent;

  Chain chain;
  chain.samples.reserve(static_cast<std::size_t>(config.n_samples));
  std::deque<bool> window;
  int window_divergent = 0;
  for (int i = 0; i < config.latent_warmup; ++i) hmc_update_volatility(h, theta, obs, config.md, rng, exec);

  const std::int64_t total =
      static_cast<std::int64_t>(config.n_burnin) + static_cast<std::int64_t>(config.n_samples) * config.thin;

  for (std::int64_t sweep = 0; sweep < total; ++sweep) {
    const HmcOutcome hmc = hmc_update_volatility(h, theta, obs, config.md, rng, exec);
    theta.mu = update_mu(h, theta, prior, rng);
    const PhiUpdate phi = update_phi(h, theta, prior, rng);
    theta.phi = phi.phi;
    theta.sigma_eta_sq = update_sigma_eta_sq(h, theta, prior, rng);
    theta.xi = update_xi(h, obs, theta, prior, rng);
    theta.sigma_u_sq = update_sigma_u_sq(h, obs, theta.xi, prior, rng);

    chain.sweeps = sweep + 1;
    chain.phi_accepts += phi.accepted ? 1 : 0;
    chain.divergent_proposals += hmc.divergent() ? 1 : 0;
    window.push_back(hmc.divergent());
    window_divergent += hmc.divergent() ? 1 : 0;
    if (static_cast<int>(window.size()) > kStormWindow) {
      window_divergent -= window.front() ? 1 : 0;
      window.pop_front();
    }
    if (static_cast<int>(window.size()) == kStormWindow && 2 * window_divergent > kStormWindow) {
      throw NumericFailure("divergence storm: " + std::to_string(window_divergent) + " of the last " +
                           std::to_string(kStormWindow) + " HMC trajectories diverged at sweep " +
                           std::to_string(sweep + 1) + "; reduce the step size");
    }

    const std::int64_t after = sweep + 1 - config.n_burnin;
    if (after > 0 && after % config.thin == 0) {
      ChainSample s;
      s.iter = sweep + 1;
      s.params = theta;
      s.accept = hmc.accept;
      s.delta_h = hmc.delta_h;
      if (config.store_latent) s.latent = h;
      chain.samples.push_back(std::move(s));
    }
  }
  return chain;
}

}  // namespace rsv
