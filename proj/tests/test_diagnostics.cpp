#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

#include "rsv/diagnostics.hpp"

namespace {

rsv::Chain chain_from(const std::vector<bool>& accepts, const std::vector<double>& dh) {
  rsv::Chain c;
  for (std::size_t i = 0; i < accepts.size(); ++i) {
    rsv::ChainSample s;
    s.iter = static_cast<std::int64_t>(i + 1);
    s.accept = accepts[i];
    s.delta_h = dh.empty() ? 0.0 : dh[i];
    c.samples.push_back(s);
  }
  return c;
}

std::vector<double> ar1_series(double phi, std::size_t n, std::uint64_t seed) {
  rsv::Rng rng(seed);
  std::vector<double> x(n);
  x[0] = rsv::standard_normal(rng) / std::sqrt(1 - phi * phi);
  for (std::size_t i = 1; i < n; ++i) x[i] = phi * x[i - 1] + rsv::standard_normal(rng);
  return x;
}

TEST(Acceptance, AllNoneAndCounted) {
  EXPECT_EQ(rsv::acceptance_rate(chain_from(std::vector<bool>(10, true), {})), 1.0);
  EXPECT_EQ(rsv::acceptance_rate(chain_from(std::vector<bool>(10, false), {})), 0.0);
  rsv::Rng rng(1);
  std::vector<bool> flags(1001);
  int count = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    flags[i] = rsv::uniform01(rng) < 0.37;
    count += flags[i] ? 1 : 0;
  }
  EXPECT_DOUBLE_EQ(rsv::acceptance_rate(chain_from(flags, {})), count / 1001.0);
  EXPECT_THROW(rsv::acceptance_rate(rsv::Chain{}), std::invalid_argument);
}

TEST(ExpNegDh, ZeroEnergyChange) {
  const auto r = rsv::mean_exp_neg_dh(chain_from(std::vector<bool>(200, true), std::vector<double>(200, 0.0)));
  EXPECT_EQ(r.mean, 1.0);
  EXPECT_EQ(r.standard_error, 0.0);
}

TEST(ExpNegDh, DivergentEntriesContributeZero) {
  std::vector<double> dh(100, 0.0);
  dh[0] = INFINITY;
  const auto r = rsv::mean_exp_neg_dh(chain_from(std::vector<bool>(100, true), dh));
  EXPECT_DOUBLE_EQ(r.mean, 0.99);
}

TEST(ExpNegDh, TooFewSamples) {
  EXPECT_THROW(rsv::mean_exp_neg_dh(chain_from({true}, {0.0})), std::invalid_argument);
}

TEST(Autocorrelation, IidSeriesHasFullEss) {
  const auto x = ar1_series(0.0, 100000, 2);
  const double e = rsv::ess(x);
  EXPECT_GE(e, 0.9 * x.size());
  EXPECT_LE(e, 1.1 * x.size());
}

TEST(Autocorrelation, Ar1MatchesAnalyticTau) {
  const auto x = ar1_series(0.9, 1000000, 3);
  EXPECT_NEAR(rsv::integrated_autocorrelation(x), 9.5, 0.2 * 9.5);
}

TEST(Autocorrelation, ConstantSeriesConvention) {
  const std::vector<double> x(500, 2.5);
  EXPECT_EQ(rsv::integrated_autocorrelation(x), 0.5);
  EXPECT_EQ(rsv::ess(x), 500.0);
  EXPECT_THROW(rsv::ess(std::vector<double>(50, 1.0)), std::invalid_argument);
}

TEST(Autocorrelation, EssNeverExceedsLength) {
  // Alternating series: strongly negative lag-1 correlation.
  std::vector<double> x(1000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = i % 2 ? 1.0 : -1.0;
  EXPECT_LE(rsv::ess(x), 1000.0);
}

TEST(Quantile, OrderedAndInterpolated) {
  std::vector<double> v{5, 1, 4, 2, 3};
  EXPECT_EQ(rsv::quantile(v, 0.0), 1.0);
  EXPECT_EQ(rsv::quantile(v, 1.0), 5.0);
  EXPECT_EQ(rsv::quantile(v, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(rsv::quantile(v, 0.1), 1.4);
  double prev = -INFINITY;
  for (double q = 0; q <= 1.0; q += 0.05) {
    const double x = rsv::quantile(v, q);
    EXPECT_GE(x, prev);
    prev = x;
  }
}

rsv::Chain random_chain(std::size_t n, std::uint64_t seed) {
  rsv::Rng rng(seed);
  rsv::Chain c;
  const auto phi = ar1_series(0.8, n, seed + 1);
  for (std::size_t i = 0; i < n; ++i) {
    rsv::ChainSample s;
    s.iter = static_cast<std::int64_t>(i + 1);
    s.params = {0.9 + 0.01 * phi[i], rsv::standard_normal(rng), 0.1 * rsv::standard_normal(rng), 0.05 + 0.001 * i / n,
                0.1 + 0.01 * rsv::uniform01(rng)};
    s.accept = rsv::uniform01(rng) < 0.8;
    s.delta_h = 0.1 * rsv::standard_normal(rng);
    c.samples.push_back(s);
  }
  return c;
}

TEST(Summarize, IdenticalSamples) {
  rsv::Chain c = chain_from(std::vector<bool>(150, true), {});
  for (auto& s : c.samples) s.params = rsv::Params{0.9, -0.5, 0.1, 0.05, 0.1};
  const auto sum = rsv::summarize(c);
  for (const auto& p : sum.parameters) {
    EXPECT_EQ(p.sd, 0.0);
    EXPECT_EQ(p.q05, p.q95);
    EXPECT_EQ(p.ess, 150.0);
  }
}

TEST(Summarize, MeansMatchDirectAveraging) {
  const auto c = random_chain(500, 4);
  const auto sum = rsv::summarize(c);
  ASSERT_EQ(sum.parameters.size(), 5u);
  long double m = 0.0L;
  for (const auto& s : c.samples) m += s.params.mu;
  EXPECT_NEAR(sum.parameters[1].mean, static_cast<double>(m / 500), 1e-14);
  for (const auto& p : sum.parameters) {
    EXPECT_LE(p.q05, p.q95);
    EXPECT_LE(p.ess, 500.0);
  }
}

TEST(Summarize, PermutationKeepsMomentsButNotAutocorrelation) {
  const auto c = random_chain(1000, 5);
  auto permuted = c;
  std::reverse(permuted.samples.begin() + 100, permuted.samples.end());
  std::rotate(permuted.samples.begin(), permuted.samples.begin() + 333, permuted.samples.end());
  rsv::Rng rng(6);
  for (std::size_t i = permuted.samples.size() - 1; i > 0; --i)
    std::swap(permuted.samples[i], permuted.samples[static_cast<std::size_t>(rsv::uniform01(rng) * (i + 1))]);
  const auto a = rsv::summarize(c), b = rsv::summarize(permuted);
  EXPECT_NEAR(a.parameters[0].mean, b.parameters[0].mean, 1e-14);
  EXPECT_NEAR(a.parameters[0].sd, b.parameters[0].sd, 1e-12);
  EXPECT_GT(a.parameters[0].tau_int, 2.0 * b.parameters[0].tau_int);
}

TEST(Summarize, CsvRoundTrip) {
  const auto sum = rsv::summarize(random_chain(300, 7));
  const auto path = (std::filesystem::temp_directory_path() / "rsv_summary_roundtrip.csv").string();
  rsv::save_summary_csv(sum, path);
  const auto back = rsv::load_summary_csv(path);
  std::filesystem::remove(path);
  ASSERT_EQ(back.parameters.size(), sum.parameters.size());
  EXPECT_EQ(back.acceptance_rate, sum.acceptance_rate);
  EXPECT_EQ(back.mean_exp_neg_dh, sum.mean_exp_neg_dh);
  for (std::size_t i = 0; i < sum.parameters.size(); ++i) {
    EXPECT_EQ(back.parameters[i].name, sum.parameters[i].name);
    EXPECT_EQ(back.parameters[i].mean, sum.parameters[i].mean);
    EXPECT_EQ(back.parameters[i].ess, sum.parameters[i].ess);
  }
  EXPECT_NE(rsv::render_table(sum).find("sigma_eta_sq"), std::string::npos);
}

}  // namespace
