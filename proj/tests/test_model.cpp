#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "rsv/model.hpp"

namespace {

using rsv::Observations;
using rsv::Params;
using rsv::PhaseState;

Params unit_params() { return Params{0.0, 0.0, 0.0, 1.0, 1.0}; }

Observations<double> zero_obs(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)}; }

struct Instance {
  Params params;
  Observations<double> obs;
  std::vector<double> h;
};

Instance random_instance(std::uint64_t seed, std::size_t n) {
  rsv::Rng rng(seed);
  Instance inst;
  inst.params = rsv::testing::random_params(rng);
  inst.h = rsv::testing::random_vector(rng, n, inst.params.mu, 0.7);
  inst.obs.returns.resize(n);
  inst.obs.log_rv.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    inst.obs.returns[t] = std::exp(0.5 * inst.h[t]) * rsv::standard_normal(rng);
    inst.obs.log_rv[t] = inst.params.xi + inst.h[t] + 0.4 * rsv::standard_normal(rng);
  }
  return inst;
}

TEST(Dataset, RejectsSingleObservation) {
  EXPECT_THROW(rsv::Dataset::from_rv({0.1}, {0.01}), std::invalid_argument);
  const std::vector<double> h{0.0};
  EXPECT_THROW(rsv::log_posterior<double>(h, unit_params(), zero_obs(1)), std::invalid_argument);
}

TEST(Dataset, RejectsNonPositiveRvAndLengthMismatch) {
  EXPECT_THROW(rsv::Dataset::from_rv({0.1, 0.2}, {0.01, 0.0}), std::invalid_argument);
  EXPECT_THROW(rsv::Dataset::from_rv({0.1, 0.2}, {0.01}), std::invalid_argument);
  EXPECT_THROW(rsv::Dataset::from_rv({0.1, NAN}, {0.01, 0.02}), std::invalid_argument);
}

TEST(Params, Invariants) {
  EXPECT_TRUE(unit_params().valid());
  EXPECT_FALSE((Params{1.0, 0, 0, 1, 1}.valid()));
  EXPECT_FALSE((Params{0.5, 0, 0, 0, 1}.valid()));
  EXPECT_FALSE((Params{0.5, 0, 0, 1, -1}.valid()));
}

TEST(LogPosterior, AllResidualsZeroGivesZero) {
  const std::vector<double> h(6, 0.0);
  EXPECT_EQ(rsv::log_posterior<double>(h, unit_params(), zero_obs(6)), 0.0);
}

TEST(LogPosterior, MatchesExtendedPrecisionOracle) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto inst = random_instance(seed, 8);
    const double got = rsv::log_posterior<double>(inst.h, inst.params, inst.obs);
    const long double want = rsv::testing::log_posterior_oracle(inst.h, inst.params, inst.obs.returns, inst.obs.log_rv);
    EXPECT_LE(std::abs((got - want) / want), 1e-12) << "seed " << seed;
  }
}

TEST(LogPosterior, LengthMismatchIsContractViolation) {
  const std::vector<double> h(5, 0.0);
  EXPECT_THROW(rsv::log_posterior<double>(h, unit_params(), zero_obs(6)), std::invalid_argument);
  EXPECT_THROW(rsv::grad_neg_log_posterior<double>(h, unit_params(), zero_obs(6)), std::invalid_argument);
}

TEST(LogPosterior, OverflowIsNonFinite) {
  std::vector<double> h(4, 0.0);
  h[2] = -800.0;
  auto obs = zero_obs(4);
  obs.returns[2] = 1.0;
  EXPECT_FALSE(std::isfinite(rsv::log_posterior<double>(h, unit_params(), obs)));
}

TEST(LogPosterior, TranslationCovarianceExactOnDyadicData) {
  // Dyadic values keep every subtraction exact, so the shift cancels bitwise.
  Params p{0.5, 0.25, 0.125, 0.5, 0.25};
  Observations<double> obs{{0.5, -0.25, 0.75, 0.125}, {0.5, 0.25, -0.75, 1.0}};
  const std::vector<double> h{0.25, -0.5, 0.375, 0.0};
  const double base = rsv::log_posterior<double>(h, p, obs);
  for (double c : {2.0, -4.0, 0.5}) {
    Params q = p;
    q.xi += c;
    auto shifted = obs;
    for (auto& v : shifted.log_rv) v += c;
    EXPECT_EQ(rsv::log_posterior<double>(h, q, shifted), base);
  }
}

TEST(LogPosterior, TranslationCovarianceRandom) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto inst = random_instance(seed, 32);
    const double base = rsv::log_posterior<double>(inst.h, inst.params, inst.obs);
    inst.params.xi += 1.7;
    for (auto& v : inst.obs.log_rv) v += 1.7;
    EXPECT_NEAR(rsv::log_posterior<double>(inst.h, inst.params, inst.obs), base, 1e-12 * std::abs(base));
  }
}

TEST(Gradient, AllResidualsZeroGivesOneHalf) {
  const std::vector<double> h(7, 0.0);
  for (double g : rsv::grad_neg_log_posterior<double>(h, unit_params(), zero_obs(7))) EXPECT_EQ(g, 0.5);
}

TEST(Gradient, ConstantPathAtMuWithNonzeroPhi) {
  Params p{0.8, 0.3, -0.2, 0.4, 0.6};
  std::vector<double> h(5, 0.3);
  Observations<double> obs{std::vector<double>(5, 0.0), std::vector<double>(5, 0.1)};
  for (double g : rsv::grad_neg_log_posterior<double>(h, p, obs)) EXPECT_DOUBLE_EQ(g, 0.5);
}

TEST(Gradient, MatchesFiniteDifferences) {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    const auto inst = random_instance(seed, 64);
    const auto g = rsv::grad_neg_log_posterior<double>(inst.h, inst.params, inst.obs);
    const auto fd = rsv::testing::fd_gradient(
        [&](const std::vector<double>& x) { return rsv::log_posterior<double>(x, inst.params, inst.obs); }, inst.h, 1e-5);
    EXPECT_LE(rsv::testing::max_rel_error(g, fd), 1e-6) << "seed " << seed;
  }
}

TEST(Gradient, TimeReversalSymmetricAtPhiZero) {
  Params p{0.0, -0.4, 0.2, 0.3, 0.5};
  const std::vector<double> h{0.1, -0.3, 0.7, 0.2, 0.7, -0.3, 0.1};
  const std::vector<double> y{0.5, 1.0, -0.2, 0.3, -0.2, 1.0, 0.5};
  const std::vector<double> lrv{0.0, 0.4, -0.1, 0.9, -0.1, 0.4, 0.0};
  const Observations<double> obs{y, lrv};
  const auto g = rsv::grad_neg_log_posterior<double>(h, p, obs);
  for (std::size_t t = 0; t < g.size(); ++t) EXPECT_DOUBLE_EQ(g[t], g[g.size() - 1 - t]);
}

TEST(Hamiltonian, ZeroMomentumIsNegativeLogPosterior) {
  const auto inst = random_instance(5, 16);
  PhaseState<double> s{inst.h, std::vector<double>(16, 0.0)};
  EXPECT_EQ(rsv::hamiltonian<double>(s, inst.params, inst.obs),
            -rsv::log_posterior<double>(inst.h, inst.params, inst.obs));
}

TEST(Hamiltonian, UnitMomentaOnZeroConfiguration) {
  PhaseState<double> s{std::vector<double>(4, 0.0), std::vector<double>(4, 1.0)};
  EXPECT_EQ(rsv::hamiltonian<double>(s, unit_params(), zero_obs(4)), 2.0);
}

TEST(Hamiltonian, EvenInMomentum) {
  rsv::Rng rng(77);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto inst = random_instance(seed, 32);
    PhaseState<double> s{inst.h, rsv::testing::random_vector(rng, 32, 0.0, 1.0)};
    PhaseState<double> flipped = s;
    for (auto& x : flipped.p) x = -x;
    EXPECT_EQ(rsv::hamiltonian<double>(s, inst.params, inst.obs), rsv::hamiltonian<double>(flipped, inst.params, inst.obs));
  }
}

TEST(Precision, SingleTracksDouble) {
  const auto inst = random_instance(11, 64);
  Observations<float> obs_f{{inst.obs.returns.begin(), inst.obs.returns.end()},
                            {inst.obs.log_rv.begin(), inst.obs.log_rv.end()}};
  const std::vector<float> hf(inst.h.begin(), inst.h.end());
  const auto gd = rsv::grad_neg_log_posterior<double>(inst.h, inst.params, inst.obs);
  const auto gf = rsv::grad_neg_log_posterior<float>(hf, inst.params, obs_f);
  for (std::size_t t = 0; t < gd.size(); ++t) EXPECT_NEAR(gf[t], gd[t], 1e-4 * (1.0 + std::abs(gd[t])));
}

}  // namespace
