#pragma once

// Second-order leapfrog split into three data-parallel kernels:
//
//   kernel 1:  h_i <- h_i + (dt/2) p_i
//   kernel 2:  p_i <- p_i - dt dH/dh_i      (gradient at the current h)
//   kernel 3:  h_i <- h_i + (dt/2) p_i      (with the updated p)
//
// One elementary step is kernel 3 . kernel 2 . kernel 1. Consecutive half
// steps are never fused; the benchmark times exactly this three-kernel unit.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <stdexcept>

#include "rsv/model.hpp"
#include "rsv/parallel.hpp"

namespace rsv {

/// Anything supplying dH/dh_i for one site given the whole path.
template <class P, class Real>
concept Potential = requires(const P& pot, std::size_t i, std::span<const Real> h) {
  { pot.size() } -> std::convertible_to<std::size_t>;
  { pot.gradient(i, h) } -> std::convertible_to<Real>;
};

template <std::floating_point Real>
struct MDConfig {
  Real step_size = Real(0.02);
  int n_steps = 50;

  Real trajectory_length() const { return static_cast<Real>(n_steps) * step_size; }

  void validate() const {
    if (!(step_size > 0) || !std::isfinite(step_size)) throw std::invalid_argument("step size must be positive");
    if (n_steps < 1) throw std::invalid_argument("number of leapfrog steps must be at least 1");
  }
};

template <std::floating_point Real>
void kernel1_half_position(PhaseState<Real>& state, Real dt, const Executor& exec) {
  const Real half = dt / Real(2);
  Real* h = state.h.data();
  const Real* p = state.p.data();
  exec.for_each_chunk(state.size(), [=](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) h[i] += half * p[i];
  });
}

/// Returns false if any updated momentum is non-finite or any |h_i| exceeds
/// the divergence bound.
template <std::floating_point Real, Potential<Real> Pot>
bool kernel2_momentum(PhaseState<Real>& state, Real dt, const Pot& potential, const Executor& exec) {
  if (potential.size() != state.size()) throw std::invalid_argument("potential and state lengths differ");
  const std::span<const Real> h(state.h);
  Real* p = state.p.data();
  const Real bound = static_cast<Real>(kLatentDivergenceBound);
  return exec.all_chunks(state.size(), [&, p](std::size_t begin, std::size_t end) {
    bool ok = true;
    for (std::size_t i = begin; i < end; ++i) {
      p[i] -= dt * potential.gradient(i, h);
      ok = ok && std::isfinite(p[i]) && std::abs(h[i]) <= bound;
    }
    return ok;
  });
}

template <std::floating_point Real>
void kernel3_half_position(PhaseState<Real>& state, Real dt, const Executor& exec) {
  kernel1_half_position(state, dt, exec);
}

template <std::floating_point Real, Potential<Real> Pot>
bool elementary_step(PhaseState<Real>& state, Real dt, const Pot& potential, const Executor& exec) {
  kernel1_half_position(state, dt, exec);
  const bool ok = kernel2_momentum(state, dt, potential, exec);
  kernel3_half_position(state, dt, exec);
  return ok;
}

template <std::floating_point Real>
struct Trajectory {
  PhaseState<Real> state;
  bool divergent = false;
};

/// Applies k elementary steps to a copy of `start`. On divergence the
/// partial state is discarded and `start` is returned with the flag set.
template <std::floating_point Real, Potential<Real> Pot>
Trajectory<Real> integrate_trajectory(const PhaseState<Real>& start, const MDConfig<Real>& config, const Pot& potential,
                                      const Executor& exec) {
  config.validate();
  Trajectory<Real> out{start, false};
  for (int step = 0; step < config.n_steps; ++step) {
    if (!elementary_step(out.state, config.step_size, potential, exec)) {
      out.state = start;
      out.divergent = true;
      return out;
    }
  }
  return out;
}

}  // namespace rsv
