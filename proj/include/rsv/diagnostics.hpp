#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rsv/csv.hpp"
#include "rsv/sampler.hpp"

namespace rsv {

inline constexpr std::size_t kMinDiagnosticSamples = 100;

inline bool is_constant(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
}

inline double acceptance_rate(const Chain& chain) {
  if (chain.samples.empty()) throw std::invalid_argument("acceptance rate of an empty chain");
  std::size_t accepted = 0;
  for (const auto& s : chain.samples) accepted += s.accept ? 1 : 0;
  return static_cast<double>(accepted) / static_cast<double>(chain.samples.size());
}

struct MeanWithError {
  double mean;
  double standard_error;
};

/// Mean and standard error of exp(-ΔH); divergent proposals contribute 0.
inline MeanWithError mean_exp_neg_dh(const Chain& chain) {
  const std::size_t n = chain.samples.size();
  if (n < kMinDiagnosticSamples)
    throw std::invalid_argument("exp(-dH) statistics need at least " + std::to_string(kMinDiagnosticSamples) + " samples");
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = std::exp(-chain.samples[i].delta_h);
  double mean = 0.0;
  for (double x : w) mean += x;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : w) ss += (x - mean) * (x - mean);
  const double var = ss / static_cast<double>(n - 1);
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

/// tau_int = 1/2 + sum_{t=1..M} rho(t), with M the first lag satisfying
/// M >= 5 tau_int(M). Clamped below at 1/2; a constant series gives 1/2.
inline double integrated_autocorrelation(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < kMinDiagnosticSamples)
    throw std::invalid_argument("autocorrelation needs at least " + std::to_string(kMinDiagnosticSamples) + " points");
  if (is_constant(x)) return 0.5;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> d(n);
  double c0 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = x[i] - mean;
    c0 += d[i] * d[i];
  }
  if (!(c0 > 0.0)) return 0.5;
  double tau = 0.5;
  for (std::size_t lag = 1; lag < n; ++lag) {
    double c = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) c += d[i] * d[i + lag];
    tau += c / c0;
    if (static_cast<double>(lag) >= 5.0 * tau) break;
  }
  return std::max(tau, 0.5);
}

inline double ess(std::span<const double> x) {
  return static_cast<double>(x.size()) / (2.0 * integrated_autocorrelation(x));
}

/// Linear-interpolation quantile (Hyndman-Fan type 7) of unsorted data.
inline double quantile(std::vector<double> values, double level) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(level >= 0.0 && level <= 1.0)) throw std::domain_error("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = level * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q05 = 0.0;
  double q95 = 0.0;
  double tau_int = std::numeric_limits<double>::quiet_NaN();
  double ess = std::numeric_limits<double>::quiet_NaN();
};

struct ChainSummary {
  std::size_t n_samples = 0;
  std::size_t n_divergent = 0;
  double acceptance_rate = 0.0;
  double mean_exp_neg_dh = std::numeric_limits<double>::quiet_NaN();
  double exp_neg_dh_se = std::numeric_limits<double>::quiet_NaN();
  std::vector<ParameterSummary> parameters;
};

inline const std::array<const char*, 5>& parameter_names() {
  static const std::array<const char*, 5> names{"phi", "mu", "xi", "sigma_eta_sq", "sigma_u_sq"};
  return names;
}

inline std::vector<double> parameter_trace(const Chain& chain, std::size_t which) {
  std::vector<double> out;
  out.reserve(chain.samples.size());
  for (const auto& s : chain.samples) {
    const Params& p = s.params;
    const std::array<double, 5> v{p.phi, p.mu, p.xi, p.sigma_eta_sq, p.sigma_u_sq};
    out.push_back(v.at(which));
  }
  return out;
}

/// Autocorrelation and exp(-ΔH) statistics are NaN below 100 samples.
inline ChainSummary summarize(const Chain& chain) {
  ChainSummary sum;
  sum.n_samples = chain.samples.size();
  sum.acceptance_rate = acceptance_rate(chain);
  for (const auto& s : chain.samples) sum.n_divergent += s.divergent() ? 1 : 0;
  const bool enough = sum.n_samples >= kMinDiagnosticSamples;
  if (enough) {
    const auto e = mean_exp_neg_dh(chain);
    sum.mean_exp_neg_dh = e.mean;
    sum.exp_neg_dh_se = e.standard_error;
  }
  for (std::size_t k = 0; k < parameter_names().size(); ++k) {
    const auto trace = parameter_trace(chain, k);
    ParameterSummary ps;
    ps.name = parameter_names()[k];
    double m = 0.0;
    for (double v : trace) m += v;
    m /= static_cast<double>(trace.size());
    double ss = 0.0;
    for (double v : trace) ss += (v - m) * (v - m);
    if (is_constant(trace)) {
      m = trace.front();
      ss = 0.0;
    }
    ps.mean = m;
    ps.sd = trace.size() > 1 ? std::sqrt(ss / static_cast<double>(trace.size() - 1)) : 0.0;
    ps.q05 = quantile(trace, 0.05);
    ps.q95 = quantile(trace, 0.95);
    if (enough) {
      ps.tau_int = integrated_autocorrelation(trace);
      ps.ess = static_cast<double>(trace.size()) / (2.0 * ps.tau_int);
    }
    sum.parameters.push_back(ps);
  }
  return sum;
}

inline std::string render_table(const ChainSummary& s) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-14s %12s %12s %12s %12s %10s %10s\n", "parameter", "mean", "sd", "q05", "q95",
                "tau_int", "ess");
  out += line;
  for (const auto& p : s.parameters) {
    std::snprintf(line, sizeof line, "%-14s %12.6g %12.6g %12.6g %12.6g %10.4g %10.5g\n", p.name.c_str(), p.mean, p.sd,
                  p.q05, p.q95, p.tau_int, p.ess);
    out += line;
  }
  std::snprintf(line, sizeof line, "samples %zu  divergent %zu  acceptance %.4f  <exp(-dH)> %.5f +/- %.5f\n",
                s.n_samples, s.n_divergent, s.acceptance_rate, s.mean_exp_neg_dh, s.exp_neg_dh_se);
  out += line;
  return out;
}

/// Long format `parameter,statistic,value`; chain-level values use
/// parameter `chain`.
inline void save_summary_csv(const ChainSummary& s, const std::string& path) {
  auto out = csv::open_for_write(path);
  out << "parameter,statistic,value\n";
  out << "chain,n_samples," << s.n_samples << '\n';
  out << "chain,n_divergent," << s.n_divergent << '\n';
  out << "chain,acceptance_rate," << csv::format(s.acceptance_rate) << '\n';
  out << "chain,mean_exp_neg_dh," << csv::format(s.mean_exp_neg_dh) << '\n';
  out << "chain,exp_neg_dh_se," << csv::format(s.exp_neg_dh_se) << '\n';
  for (const auto& p : s.parameters) {
    out << p.name << ",mean," << csv::format(p.mean) << '\n';
    out << p.name << ",sd," << csv::format(p.sd) << '\n';
    out << p.name << ",q05," << csv::format(p.q05) << '\n';
    out << p.name << ",q95," << csv::format(p.q95) << '\n';
    out << p.name << ",tau_int," << csv::format(p.tau_int) << '\n';
    out << p.name << ",ess," << csv::format(p.ess) << '\n';
  }
  csv::finish(out, path);
}

inline ChainSummary load_summary_csv(const std::string& path) {
  csv::Reader reader(path);
  const auto col = reader.header({"parameter", "statistic", "value"});
  ChainSummary s;
  std::string line;
  auto number = [&](std::string_view field) {
    if (field == "nan" || field == "-nan") return std::numeric_limits<double>::quiet_NaN();
    return reader.parse_double(field, "value");
  };
  while (reader.next(line)) {
    const auto f = reader.row(line);
    const std::string param(f[col[0]]);
    const std::string stat(f[col[1]]);
    const double v = number(f[col[2]]);
    if (param == "chain") {
      if (stat == "n_samples") s.n_samples = static_cast<std::size_t>(v);
      else if (stat == "n_divergent") s.n_divergent = static_cast<std::size_t>(v);
      else if (stat == "acceptance_rate") s.acceptance_rate = v;
      else if (stat == "mean_exp_neg_dh") s.mean_exp_neg_dh = v;
      else if (stat == "exp_neg_dh_se") s.exp_neg_dh_se = v;
      else reader.fail("unknown chain statistic '" + stat + "'");
      continue;
    }
    if (s.parameters.empty() || s.parameters.back().name != param) {
      s.parameters.emplace_back();
      s.parameters.back().name = param;
    }
    auto& p = s.parameters.back();
    if (stat == "mean") p.mean = v;
    else if (stat == "sd") p.sd = v;
    else if (stat == "q05") p.q05 = v;
    else if (stat == "q95") p.q95 = v;
    else if (stat == "tau_int") p.tau_int = v;
    else if (stat == "ess") p.ess = v;
    else reader.fail("unknown statistic '" + stat + "'");
  }
  return s;
}

}  // namespace rsv
