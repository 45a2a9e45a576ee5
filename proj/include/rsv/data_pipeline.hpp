#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "rsv/csv.hpp"
#include "rsv/model.hpp"
#include "rsv/rng.hpp"
#include "rsv/sampler.hpp"

namespace rsv {

/// Floor applied to days whose intraday returns are all zero.
inline constexpr double kRvFloor = 1e-12;

struct SyntheticTruth {
  Params params;
  std::vector<double> latent;
  Dataset dataset;
};

/// ISO-8601 calendar date `offset` days after 2000-01-01.
inline std::string synthetic_date(std::size_t offset) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{year{2000} / January / 1} + days{static_cast<long>(offset)}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

/// Draws (h, y, ln RV) from the model. Per day the draw order is
/// eta (or the stationary h_1 draw), eps, u.
inline SyntheticTruth simulate_rsv(const Params& params, std::size_t length, std::uint64_t seed) {
  params.validate();
  if (length < 2) throw std::invalid_argument("series length must be at least 2");
  Rng rng(seed, 0);
  const double sd_eta = std::sqrt(params.sigma_eta_sq);
  const double sd_u = std::sqrt(params.sigma_u_sq);
  std::vector<double> h(length), y(length), log_rv(length);
  std::vector<std::string> dates(length);
  for (std::size_t t = 0; t < length; ++t) {
    if (t == 0) {
      h[0] = params.mu + std::sqrt(params.sigma_eta_sq / (1.0 - params.phi * params.phi)) * standard_normal(rng);
    } else {
      h[t] = params.mu + params.phi * (h[t - 1] - params.mu) + sd_eta * standard_normal(rng);
    }
    y[t] = std::exp(0.5 * h[t]) * standard_normal(rng);
    log_rv[t] = params.xi + h[t] + sd_u * standard_normal(rng);
    dates[t] = synthetic_date(t);
  }
  return {params, std::move(h), Dataset::from_log_rv(std::move(y), log_rv, std::move(dates))};
}

struct IntradayPanel {
  std::vector<std::string> dates;
  std::vector<std::vector<double>> returns_per_day;

  std::size_t days() const { return returns_per_day.size(); }

  void validate() const {
    if (returns_per_day.empty()) throw std::invalid_argument("intraday panel has no days");
    if (!dates.empty() && dates.size() != returns_per_day.size())
      throw std::invalid_argument("intraday panel dates and days differ in length");
    for (std::size_t d = 0; d < returns_per_day.size(); ++d) {
      if (returns_per_day[d].empty()) throw std::invalid_argument("day " + std::to_string(d) + " has no intraday returns");
      for (double r : returns_per_day[d])
        if (!std::isfinite(r)) throw std::invalid_argument("non-finite intraday return on day " + std::to_string(d));
    }
  }
};

struct RealizedVariance {
  std::vector<double> values;
  /// Days whose squared-return sum was zero and got floored.
  std::vector<std::size_t> floored_days;
};

/// RV_t = sum_j r_{t,j}^2. All-zero days are floored at kRvFloor and reported.
inline RealizedVariance compute_rv(const IntradayPanel& panel) {
  panel.validate();
  RealizedVariance out;
  out.values.reserve(panel.days());
  for (std::size_t d = 0; d < panel.days(); ++d) {
    double rv = 0.0;
    for (double r : panel.returns_per_day[d]) rv += r * r;
    if (rv <= 0.0) {
      rv = kRvFloor;
      out.floored_days.push_back(d);
      std::clog << "warning: day " << (panel.dates.empty() ? std::to_string(d) : panel.dates[d])
                << " has zero realized variance; floored at " << kRvFloor << "\n";
    }
    out.values.push_back(rv);
  }
  return out;
}

/// Daily return is the sum of that day's intraday log-returns.
inline Dataset dataset_from_intraday(const IntradayPanel& panel) {
  auto rv = compute_rv(panel);
  std::vector<double> daily(panel.days(), 0.0);
  for (std::size_t d = 0; d < panel.days(); ++d)
    for (double r : panel.returns_per_day[d]) daily[d] += r;
  return Dataset::from_rv(std::move(daily), std::move(rv.values), panel.dates);
}

/// Intraday CSV `date,time,return`; rows of one date must be contiguous.
inline IntradayPanel load_intraday(const std::string& path) {
  csv::Reader reader(path);
  const auto col = reader.header({"date", "time", "return"});
  IntradayPanel panel;
  std::string line;
  while (reader.next(line)) {
    const auto f = reader.row(line);
    const std::string date(f[col[0]]);
    const double r = reader.parse_double(f[col[2]], "return");
    if (panel.dates.empty() || panel.dates.back() != date) {
      for (const auto& seen : panel.dates)
        if (seen == date) reader.fail("rows for date " + date + " are not contiguous");
      panel.dates.push_back(date);
      panel.returns_per_day.emplace_back();
    }
    panel.returns_per_day.back().push_back(r);
  }
  if (panel.dates.empty()) reader.fail("empty intraday file");
  return panel;
}

/// Dataset CSV `date,return,rv`.
inline Dataset load_dataset(const std::string& path) {
  csv::Reader reader(path);
  const auto col = reader.header({"date", "return", "rv"});
  std::vector<std::string> dates;
  std::vector<double> returns, rv;
  std::string line;
  while (reader.next(line)) {
    const auto f = reader.row(line);
    dates.emplace_back(f[col[0]]);
    returns.push_back(reader.parse_double(f[col[1]], "return"));
    const double v = reader.parse_double(f[col[2]], "rv");
    if (!(v > 0.0)) reader.fail("rv must be positive (ln RV undefined)");
    rv.push_back(v);
  }
  if (returns.empty()) reader.fail("empty dataset");
  if (returns.size() < 2) reader.fail("dataset needs at least 2 observations");
  return Dataset::from_rv(std::move(returns), std::move(rv), std::move(dates));
}

inline void save_dataset(const Dataset& data, const std::string& path) {
  auto out = csv::open_for_write(path);
  out << "date,return,rv\n";
  for (std::size_t t = 0; t < data.size(); ++t) {
    out << (data.dates().empty() ? synthetic_date(t) : data.dates()[t]) << ',' << csv::format(data.returns()[t]) << ','
        << csv::format(data.rv()[t]) << '\n';
  }
  csv::finish(out, path);
}

/// Ground-truth latent path `t,h` (t is 1-based).
inline void save_latent_path(const std::vector<double>& h, const std::string& path) {
  auto out = csv::open_for_write(path);
  out << "t,h\n";
  for (std::size_t t = 0; t < h.size(); ++t) out << (t + 1) << ',' << csv::format(h[t]) << '\n';
  csv::finish(out, path);
}

inline std::vector<double> load_latent_path(const std::string& path) {
  csv::Reader reader(path);
  const auto col = reader.header({"t", "h"});
  std::vector<double> h;
  std::string line;
  while (reader.next(line)) h.push_back(reader.parse_double(reader.row(line)[col[1]], "h"));
  if (h.empty()) reader.fail("empty latent path");
  return h;
}

inline void save_params(const Params& p, const std::string& path) {
  auto out = csv::open_for_write(path);
  out << "parameter,value\n"
      << "phi," << csv::format(p.phi) << "\nmu," << csv::format(p.mu) << "\nxi," << csv::format(p.xi)
      << "\nsigma_eta_sq," << csv::format(p.sigma_eta_sq) << "\nsigma_u_sq," << csv::format(p.sigma_u_sq) << '\n';
  csv::finish(out, path);
}

inline Params load_params(const std::string& path) {
  csv::Reader reader(path);
  const auto col = reader.header({"parameter", "value"});
  Params p;
  int seen = 0;
  std::string line;
  while (reader.next(line)) {
    const auto f = reader.row(line);
    const double v = reader.parse_double(f[col[1]], "value");
    const auto name = f[col[0]];
    if (name == "phi") p.phi = v;
    else if (name == "mu") p.mu = v;
    else if (name == "xi") p.xi = v;
    else if (name == "sigma_eta_sq") p.sigma_eta_sq = v;
    else if (name == "sigma_u_sq") p.sigma_u_sq = v;
    else reader.fail("unknown parameter '" + std::string(name) + "'");
    ++seen;
  }
  if (seen != 5) reader.fail("expected 5 parameters, found " + std::to_string(seen));
  return p;
}

/// `chain.csv` -> `chain.latent.csv`.
inline std::string latent_companion_path(const std::string& chain_path) {
  std::filesystem::path p(chain_path);
  const auto stem = p.stem().string();
  return (p.parent_path() / (stem + ".latent.csv")).string();
}

/// Chain CSV `iter,phi,mu,xi,sigma_eta_sq,sigma_u_sq,accept,delta_h`.
/// Latent snapshots, when present, go to the companion file as
/// `iter,h_1,...,h_T`.
inline void save_chain(const Chain& chain, const std::string& path) {
  auto out = csv::open_for_write(path);
  out << "iter,phi,mu,xi,sigma_eta_sq,sigma_u_sq,accept,delta_h\n";
  bool has_latent = false;
  for (const auto& s : chain.samples) {
    out << s.iter << ',' << csv::format(s.params.phi) << ',' << csv::format(s.params.mu) << ','
        << csv::format(s.params.xi) << ',' << csv::format(s.params.sigma_eta_sq) << ','
        << csv::format(s.params.sigma_u_sq) << ',' << (s.accept ? 1 : 0) << ',' << csv::format(s.delta_h) << '\n';
    has_latent = has_latent || s.latent.has_value();
  }
  csv::finish(out, path);
  if (!has_latent) return;

  const auto lpath = latent_companion_path(path);
  auto lout = csv::open_for_write(lpath);
  const std::size_t n = chain.samples.front().latent->size();
  lout << "iter";
  for (std::size_t t = 1; t <= n; ++t) lout << ",h_" << t;
  lout << '\n';
  for (const auto& s : chain.samples) {
    if (!s.latent || s.latent->size() != n) throw csv::IoError("inconsistent latent snapshots in chain");
    lout << s.iter;
    for (double x : *s.latent) lout << ',' << csv::format(x);
    lout << '\n';
  }
  csv::finish(lout, lpath);
}

inline Chain load_chain(const std::string& path) {
  csv::Reader reader(path);
  const auto col = reader.header({"iter", "phi", "mu", "xi", "sigma_eta_sq", "sigma_u_sq", "accept", "delta_h"});
  Chain chain;
  std::string line;
  while (reader.next(line)) {
    const auto f = reader.row(line);
    ChainSample s;
    s.iter = reader.parse_int(f[col[0]], "iter");
    s.params.phi = reader.parse_double(f[col[1]], "phi");
    s.params.mu = reader.parse_double(f[col[2]], "mu");
    s.params.xi = reader.parse_double(f[col[3]], "xi");
    s.params.sigma_eta_sq = reader.parse_double(f[col[4]], "sigma_eta_sq");
    s.params.sigma_u_sq = reader.parse_double(f[col[5]], "sigma_u_sq");
    const auto acc = reader.parse_int(f[col[6]], "accept");
    if (acc != 0 && acc != 1) reader.fail("accept must be 0 or 1");
    s.accept = acc == 1;
    if (f[col[7]] == "inf") {
      s.delta_h = std::numeric_limits<double>::infinity();
      ++chain.divergent_proposals;
    } else {
      s.delta_h = reader.parse_double(f[col[7]], "delta_h");
    }
    chain.sweeps = s.iter;
    chain.samples.push_back(std::move(s));
  }

  const auto lpath = latent_companion_path(path);
  if (!chain.samples.empty() && std::filesystem::exists(lpath)) {
    csv::Reader lreader(lpath);
    std::string header;
    if (!lreader.next(header)) lreader.fail("missing header row");
    const std::size_t width = csv::split(header).size();
    std::size_t i = 0;
    while (lreader.next(line)) {
      const auto f = csv::split(line);
      if (f.size() != width) lreader.fail("ragged latent row");
      if (i >= chain.samples.size()) lreader.fail("more latent rows than chain rows");
      if (lreader.parse_int(f[0], "iter") != chain.samples[i].iter) lreader.fail("latent iter does not match chain");
      std::vector<double> h;
      h.reserve(width - 1);
      for (std::size_t k = 1; k < width; ++k) h.push_back(lreader.parse_double(f[k], "h"));
      chain.samples[i++].latent = std::move(h);
    }
    if (i != chain.samples.size()) lreader.fail("fewer latent rows than chain rows");
  }
  return chain;
}

}  // namespace rsv
