#pragma once

// Realized stochastic volatility model:
//
//   y_t      = exp(h_t / 2) eps_t,               eps_t ~ N(0, 1)
//   ln RV_t  = xi + h_t + u_t,                   u_t   ~ N(0, sigma_u^2)
//   h_{t+1}  = mu + phi (h_t - mu) + eta_t,      eta_t ~ N(0, sigma_eta^2)
//
// with h_1 drawn from the stationary law N(mu, sigma_eta^2 / (1 - phi^2)).
// Every -ln(2 pi)/2 constant is dropped; theta-dependent normalizations are kept.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rsv {

/// Magnitude of h beyond which a trajectory is treated as diverged.
inline constexpr double kLatentDivergenceBound = 50.0;

struct Params {
  double phi = 0.9;
  double mu = 0.0;
  double xi = 0.0;
  double sigma_eta_sq = 0.1;
  double sigma_u_sq = 0.1;

  bool valid() const {
    return std::isfinite(phi) && std::isfinite(mu) && std::isfinite(xi) && std::abs(phi) < 1.0 &&
           sigma_eta_sq > 0.0 && std::isfinite(sigma_eta_sq) && sigma_u_sq > 0.0 && std::isfinite(sigma_u_sq);
  }

  void validate() const {
    if (!valid()) throw std::domain_error("invalid parameters: need |phi| < 1 and positive finite variances");
  }

  friend bool operator==(const Params&, const Params&) = default;
};

/// Observation vectors in a working precision.
template <std::floating_point Real>
struct Observations {
  std::vector<Real> returns;
  std::vector<Real> log_rv;

  std::size_t size() const { return returns.size(); }
  friend bool operator==(const Observations&, const Observations&) = default;
};

/// Daily returns and realized variances, validated on construction.
/// log_rv is always computed as log(rv), so a dataset rebuilt from its own
/// rv column is bitwise identical.
class Dataset {
 public:
  static Dataset from_rv(std::vector<double> returns, std::vector<double> rv, std::vector<std::string> dates = {}) {
    Dataset d;
    if (returns.size() != rv.size()) throw std::invalid_argument("returns and rv lengths differ");
    if (returns.size() < 2) throw std::invalid_argument("dataset needs at least 2 observations");
    if (!dates.empty() && dates.size() != returns.size()) throw std::invalid_argument("dates and returns lengths differ");
    d.obs_.log_rv.resize(rv.size());
    for (std::size_t t = 0; t < rv.size(); ++t) {
      if (!std::isfinite(returns[t])) throw std::invalid_argument("non-finite return at index " + std::to_string(t));
      if (!(rv[t] > 0.0) || !std::isfinite(rv[t]))
        throw std::invalid_argument("realized variance must be positive and finite at index " + std::to_string(t));
      d.obs_.log_rv[t] = std::log(rv[t]);
    }
    d.obs_.returns = std::move(returns);
    d.rv_ = std::move(rv);
    d.dates_ = std::move(dates);
    return d;
  }

  /// Builds from ln RV; values pass through exp/log so they match what a
  /// save/load cycle would produce.
  static Dataset from_log_rv(std::vector<double> returns, const std::vector<double>& log_rv,
                             std::vector<std::string> dates = {}) {
    std::vector<double> rv(log_rv.size());
    for (std::size_t t = 0; t < rv.size(); ++t) rv[t] = std::exp(log_rv[t]);
    return from_rv(std::move(returns), std::move(rv), std::move(dates));
  }

  std::size_t size() const { return obs_.size(); }
  const std::vector<double>& returns() const { return obs_.returns; }
  const std::vector<double>& log_rv() const { return obs_.log_rv; }
  const std::vector<double>& rv() const { return rv_; }
  const std::vector<std::string>& dates() const { return dates_; }
  const Observations<double>& obs() const { return obs_; }

  template <std::floating_point Real>
  Observations<Real> observations() const {
    Observations<Real> out;
    out.returns.assign(obs_.returns.begin(), obs_.returns.end());
    out.log_rv.assign(obs_.log_rv.begin(), obs_.log_rv.end());
    return out;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  Dataset() = default;

  Observations<double> obs_;
  std::vector<double> rv_;
  std::vector<std::string> dates_;
};

/// Latent path h and conjugate momenta p.
template <std::floating_point Real>
struct PhaseState {
  std::vector<Real> h;
  std::vector<Real> p;

  std::size_t size() const { return h.size(); }
  friend bool operator==(const PhaseState&, const PhaseState&) = default;
};

/// Parameter-derived constants in the working precision.
template <std::floating_point Real>
struct Coefficients {
  Real phi, mu, xi;
  Real inv_sigma_eta_sq, inv_sigma_u_sq;
  Real one_minus_phi_sq;

  explicit Coefficients(const Params& params)
      : phi(static_cast<Real>(params.phi)),
        mu(static_cast<Real>(params.mu)),
        xi(static_cast<Real>(params.xi)),
        inv_sigma_eta_sq(static_cast<Real>(1.0 / params.sigma_eta_sq)),
        inv_sigma_u_sq(static_cast<Real>(1.0 / params.sigma_u_sq)),
        one_minus_phi_sq(static_cast<Real>(1.0 - params.phi * params.phi)) {}
};

namespace detail {

template <class Real>
void check_lengths(std::size_t h_size, const Observations<Real>& obs) {
  if (obs.returns.size() != obs.log_rv.size()) throw std::invalid_argument("observation lengths differ");
  if (h_size != obs.size()) throw std::invalid_argument("latent path length does not match the data");
  if (h_size < 2) throw std::invalid_argument("series length must be at least 2");
}

}  // namespace detail

/// d(-ln f)/dh_t for a single site. Reads h_{t-1}, h_t, h_{t+1}.
template <std::floating_point Real>
inline Real grad_component(std::size_t t, std::span<const Real> h, const Coefficients<Real>& c,
                           const Observations<Real>& obs) {
  const std::size_t last = h.size() - 1;
  const Real y = obs.returns[t];
  const Real ht = h[t];
  Real g = Real(0.5) - Real(0.5) * y * y * std::exp(-ht) + (c.xi + ht - obs.log_rv[t]) * c.inv_sigma_u_sq;
  const Real dev = ht - c.mu;
  if (t == 0) {
    g += c.one_minus_phi_sq * dev * c.inv_sigma_eta_sq;
  } else {
    g += (dev - c.phi * (h[t - 1] - c.mu)) * c.inv_sigma_eta_sq;
  }
  if (t < last) g -= c.phi * (h[t + 1] - c.mu - c.phi * dev) * c.inv_sigma_eta_sq;
  return g;
}

/// ln f(h, theta) accumulated in a single left-to-right pass. A non-finite
/// result means the path overflowed and the caller must reject it.
template <std::floating_point Real>
Real log_posterior(std::span<const Real> h, const Params& params, const Observations<Real>& obs) {
  detail::check_lengths(h.size(), obs);
  params.validate();
  const Coefficients<Real> c(params);
  const Real log_s_u = static_cast<Real>(std::log(params.sigma_u_sq));
  const Real log_s_eta = static_cast<Real>(std::log(params.sigma_eta_sq));
  const Real log_stationary = static_cast<Real>(std::log(params.sigma_eta_sq / (1.0 - params.phi * params.phi)));

  const Real d1 = h[0] - c.mu;
  Real sum = Real(-0.5) * log_stationary - Real(0.5) * c.one_minus_phi_sq * d1 * d1 * c.inv_sigma_eta_sq;
  for (std::size_t t = 0; t < h.size(); ++t) {
    const Real y = obs.returns[t];
    const Real r = obs.log_rv[t] - c.xi - h[t];
    sum += Real(-0.5) * h[t] - Real(0.5) * y * y * std::exp(-h[t]);
    sum += Real(-0.5) * log_s_u - Real(0.5) * r * r * c.inv_sigma_u_sq;
    if (t + 1 < h.size()) {
      const Real e = h[t + 1] - c.mu - c.phi * (h[t] - c.mu);
      sum += Real(-0.5) * log_s_eta - Real(0.5) * e * e * c.inv_sigma_eta_sq;
    }
  }
  return sum;
}

template <std::floating_point Real>
std::vector<Real> grad_neg_log_posterior(std::span<const Real> h, const Params& params, const Observations<Real>& obs) {
  detail::check_lengths(h.size(), obs);
  params.validate();
  const Coefficients<Real> c(params);
  std::vector<Real> g(h.size());
  for (std::size_t t = 0; t < h.size(); ++t) g[t] = grad_component(t, h, c, obs);
  return g;
}

/// H(p, h) = 1/2 sum p^2 - ln f(h, theta).
template <std::floating_point Real>
Real hamiltonian(const PhaseState<Real>& state, const Params& params, const Observations<Real>& obs) {
  if (state.p.size() != state.h.size()) throw std::invalid_argument("momentum and latent lengths differ");
  Real kinetic = 0;
  for (const Real pi : state.p) kinetic += pi * pi;
  return Real(0.5) * kinetic - log_posterior<Real>(state.h, params, obs);
}

// Double-precision conveniences taking the validated Dataset.
inline double log_posterior(std::span<const double> h, const Params& params, const Dataset& data) {
  return log_posterior<double>(h, params, data.obs());
}
inline std::vector<double> grad_neg_log_posterior(std::span<const double> h, const Params& params, const Dataset& data) {
  return grad_neg_log_posterior<double>(h, params, data.obs());
}
inline double hamiltonian(const PhaseState<double>& state, const Params& params, const Dataset& data) {
  return hamiltonian<double>(state, params, data.obs());
}

/// Gradient source for the integrator: the RSV posterior with fixed theta.
template <std::floating_point Real>
class RsvPotential {
 public:
  RsvPotential(const Params& params, const Observations<Real>& obs) : coeffs_(params), obs_(&obs) {
    params.validate();
  }

  std::size_t size() const { return obs_->size(); }
  Real gradient(std::size_t t, std::span<const Real> h) const { return grad_component(t, h, coeffs_, *obs_); }

 private:
  Coefficients<Real> coeffs_;
  const Observations<Real>* obs_;
};

}  // namespace rsv
