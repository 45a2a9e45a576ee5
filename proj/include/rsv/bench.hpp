#pragma once

// Elementary-step scaling study. The series length is T = 512 B; each
// measurement averages `reps` consecutive three-kernel leapfrog steps, the
// whole measurement is repeated `repeats` times, and the mean time per step
// is fitted by f(B) = A + C B per backend. Gain(B) = f_slow(B) / f_fast(B).

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rsv/csv.hpp"
#include "rsv/data_pipeline.hpp"
#include "rsv/integrator.hpp"
#include "rsv/model.hpp"
#include "rsv/parallel.hpp"
#include "rsv/rng.hpp"

namespace rsv::bench {

inline constexpr std::size_t kSitesPerBlock = 512;

enum class Precision { Single, Double };

inline std::string to_string(Precision p) { return p == Precision::Single ? "single" : "double"; }

struct Backend {
  std::string name;
  int workers = 1;
};

struct BenchConfig {
  std::vector<int> b_values{1, 2, 4, 8, 16, 32};
  int reps = 10000;
  int repeats = 5;
  int warmup = 10;
  int refresh_interval = 100;
  int max_retries = 3;
  std::size_t chunk = Executor::kDefaultChunk;
  double step_size = 0.02;
  std::uint64_t seed = 2014;
  Precision precision = Precision::Double;
  std::vector<Backend> backends{{"serial", 1}};
  Params params{0.95, -0.5, -0.3, 0.05, 0.1};

  void validate() const {
    if (b_values.empty()) throw std::invalid_argument("empty B grid");
    for (int b : b_values)
      if (b < 1) throw std::invalid_argument("B values must be positive");
    if (reps < 1 || repeats < 1 || warmup < 0 || refresh_interval < 1 || max_retries < 0)
      throw std::invalid_argument("reps, repeats and refresh interval must be positive");
    if (chunk == 0) throw std::invalid_argument("chunk must be positive");
    if (!(step_size > 0.0)) throw std::invalid_argument("step size must be positive");
    if (backends.empty()) throw std::invalid_argument("no backends selected");
    params.validate();
  }
};

struct TimingResult {
  int b = 0;
  std::size_t length = 0;
  double mean_seconds = 0.0;
  double se_seconds = 0.0;
  std::vector<double> per_repeat;
  double step_size_used = 0.0;

  /// Standard error above 10% of the mean marks a noisy environment.
  bool unstable() const { return per_repeat.size() >= 2 && se_seconds > 0.1 * mean_seconds; }
};

struct BenchFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

template <std::floating_point Real>
void refresh(std::vector<Real>& p, Rng& rng) {
  for (auto& x : p) x = static_cast<Real>(standard_normal(rng));
}

/// One full measurement; returns nullopt if the trajectory diverged.
template <std::floating_point Real>
std::optional<double> measure_once(PhaseState<Real> state, Real dt, const RsvPotential<Real>& potential,
                                   const Executor& exec, const BenchConfig& cfg, Rng& rng) {
  using clock = std::chrono::steady_clock;
  refresh(state.p, rng);
  bool ok = true;
  for (int i = 0; i < cfg.warmup; ++i) ok = elementary_step(state, dt, potential, exec) && ok;
  if (!ok) return std::nullopt;
  clock::duration total{};
  int done = 0;
  while (done < cfg.reps) {
    refresh(state.p, rng);
    const int block = std::min(cfg.refresh_interval, cfg.reps - done);
    const auto t0 = clock::now();
    for (int i = 0; i < block; ++i) ok = elementary_step(state, dt, potential, exec) && ok;
    total += clock::now() - t0;
    if (!ok) return std::nullopt;
    done += block;
  }
  return std::chrono::duration<double>(total).count() / static_cast<double>(cfg.reps);
}

}  // namespace detail

/// Average wall-clock seconds per elementary step at T = 512 B.
template <std::floating_point Real>
TimingResult time_elementary_step(int b, const Backend& backend, const BenchConfig& cfg) {
  cfg.validate();
  const std::size_t length = kSitesPerBlock * static_cast<std::size_t>(b);
  const auto truth = simulate_rsv(cfg.params, length, cfg.seed);
  const Observations<Real> obs = truth.dataset.observations<Real>();
  const RsvPotential<Real> potential(cfg.params, obs);
  const Executor exec(backend.workers, cfg.chunk);
  PhaseState<Real> start;
  start.h.assign(truth.latent.begin(), truth.latent.end());
  start.p.assign(length, Real(0));

  double dt = cfg.step_size;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt, dt *= 0.5) {
    Rng rng(cfg.seed, static_cast<std::uint64_t>(b));
    TimingResult res;
    res.b = b;
    res.length = length;
    res.step_size_used = dt;
    bool diverged = false;
    for (int r = 0; r < cfg.repeats && !diverged; ++r) {
      const auto sec = detail::measure_once<Real>(start, static_cast<Real>(dt), potential, exec, cfg, rng);
      if (!sec) diverged = true;
      else res.per_repeat.push_back(*sec);
    }
    if (diverged) continue;
    double mean = 0.0;
    for (double s : res.per_repeat) mean += s;
    mean /= static_cast<double>(res.per_repeat.size());
    double ss = 0.0;
    for (double s : res.per_repeat) ss += (s - mean) * (s - mean);
    const auto n = static_cast<double>(res.per_repeat.size());
    res.mean_seconds = mean;
    res.se_seconds = n > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0;
    return res;
  }
  throw BenchFailure("trajectory diverged at B=" + std::to_string(b) + " after " + std::to_string(cfg.max_retries) +
                     " step-size reductions");
}

struct TimingFit {
  double intercept_a = 0.0;
  double slope_c = 0.0;
  double r_squared = 0.0;

  double predict(double b) const { return intercept_a + slope_c * b; }
};

/// Ordinary least squares of seconds on B.
inline TimingFit fit_linear(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) throw std::invalid_argument("linear fit needs at least 2 points");
  const auto n = static_cast<double>(points.size());
  double xbar = 0.0, ybar = 0.0;
  for (const auto& [x, y] : points) {
    xbar += x;
    ybar += y;
  }
  xbar /= n;
  ybar /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (x - xbar) * (x - xbar);
    sxy += (x - xbar) * (y - ybar);
    syy += (y - ybar) * (y - ybar);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("degenerate fit: all B values identical");
  TimingFit fit;
  fit.slope_c = sxy / sxx;
  fit.intercept_a = ybar - fit.slope_c * xbar;
  double ss_res = 0.0;
  for (const auto& [x, y] : points) {
    const double r = y - fit.predict(x);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

inline double compute_gain(const TimingFit& slow, const TimingFit& fast, double b) {
  const double ts = slow.predict(b);
  const double tf = fast.predict(b);
  if (!(tf > 0.0) || !(ts > 0.0)) throw std::domain_error("non-positive predicted time at B=" + std::to_string(b));
  return ts / tf;
}

inline double asymptotic_gain(const TimingFit& slow, const TimingFit& fast) {
  if (!(fast.slope_c > 0.0)) throw std::domain_error("fast backend slope must be positive");
  return slow.slope_c / fast.slope_c;
}

struct BackendSeries {
  Backend backend;
  std::vector<TimingResult> points;
  std::optional<TimingFit> fit;
};

struct Study {
  Precision precision = Precision::Double;
  std::vector<BackendSeries> series;

  /// Serial (first) vs parallel (second) when both are fitted.
  std::optional<std::pair<const BackendSeries*, const BackendSeries*>> gain_pair() const {
    if (series.size() < 2 || !series[0].fit || !series[1].fit) return std::nullopt;
    return std::make_pair(&series[0], &series[1]);
  }
};

inline TimingFit fit_series(const std::vector<TimingResult>& points) {
  std::vector<std::pair<double, double>> xy;
  for (const auto& p : points) xy.emplace_back(static_cast<double>(p.b), p.mean_seconds);
  return fit_linear(xy);
}

template <class Progress>
Study run_study(const BenchConfig& cfg, Progress&& progress) {
  cfg.validate();
  Study study;
  study.precision = cfg.precision;
  for (const auto& backend : cfg.backends) {
    BackendSeries s{backend, {}, std::nullopt};
    for (int b : cfg.b_values) {
      s.points.push_back(cfg.precision == Precision::Single ? time_elementary_step<float>(b, backend, cfg)
                                                            : time_elementary_step<double>(b, backend, cfg));
      progress(backend, s.points.back());
    }
    if (s.points.size() >= 2) s.fit = fit_series(s.points);
    study.series.push_back(std::move(s));
  }
  return study;
}

inline Study run_study(const BenchConfig& cfg) {
  return run_study(cfg, [](const Backend&, const TimingResult&) {});
}

struct ReportFiles {
  std::vector<std::string> timing;
  std::string fits;
  std::string gain;
  std::string gain_limit;
};

/// Writes timing_<backend>.csv, fits.csv, gain.csv and gain_limit.csv into
/// `dir`. The first line of each file is `# generated <timestamp>`; the rest
/// depends only on the study.
inline ReportFiles emit_report(const Study& study, const std::string& dir, const std::string& timestamp) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path root(dir);
  const std::string stamp = "# generated " + timestamp + "\n";
  ReportFiles files;

  for (const auto& s : study.series) {
    const auto path = (root / ("timing_" + s.backend.name + ".csv")).string();
    auto out = csv::open_for_write(path);
    out << stamp << "B,T,mean_seconds,se_seconds\n";
    for (const auto& p : s.points)
      out << p.b << ',' << p.length << ',' << csv::format(p.mean_seconds) << ',' << csv::format(p.se_seconds) << '\n';
    csv::finish(out, path);
    files.timing.push_back(path);
  }

  files.fits = (root / "fits.csv").string();
  {
    auto out = csv::open_for_write(files.fits);
    out << stamp << "backend,workers,precision,A,C,r_squared\n";
    for (const auto& s : study.series) {
      if (!s.fit) continue;
      out << s.backend.name << ',' << s.backend.workers << ',' << to_string(study.precision) << ','
          << csv::format(s.fit->intercept_a) << ',' << csv::format(s.fit->slope_c) << ','
          << csv::format(s.fit->r_squared) << '\n';
    }
    csv::finish(out, files.fits);
  }

  const auto pair = study.gain_pair();
  files.gain = (root / "gain.csv").string();
  {
    auto out = csv::open_for_write(files.gain);
    out << stamp << "B,gain\n";
    if (pair) {
      for (const auto& p : pair->first->points) {
        out << p.b << ',' << csv::format(compute_gain(*pair->first->fit, *pair->second->fit, p.b)) << '\n';
      }
    }
    csv::finish(out, files.gain);
  }

  files.gain_limit = (root / "gain_limit.csv").string();
  {
    auto out = csv::open_for_write(files.gain_limit);
    out << stamp << "slow,fast,asymptotic_gain\n";
    if (pair && pair->second->fit->slope_c > 0.0) {
      out << pair->first->backend.name << ',' << pair->second->backend.name << ','
          << csv::format(asymptotic_gain(*pair->first->fit, *pair->second->fit)) << '\n';
    }
    csv::finish(out, files.gain_limit);
  }
  return files;
}

struct TimingRow {
  int b;
  std::size_t length;
  double mean_seconds;
  double se_seconds;
};

inline std::vector<TimingRow> load_timing_csv(const std::string& path) {
  csv::Reader reader(path);
  const auto col = reader.header({"B", "T", "mean_seconds", "se_seconds"});
  std::vector<TimingRow> rows;
  std::string line;
  while (reader.next(line)) {
    const auto f = reader.row(line);
    rows.push_back({static_cast<int>(reader.parse_int(f[col[0]], "B")),
                    static_cast<std::size_t>(reader.parse_int(f[col[1]], "T")),
                    reader.parse_double(f[col[2]], "mean_seconds"), reader.parse_double(f[col[3]], "se_seconds")});
  }
  return rows;
}

struct FitRow {
  std::string backend;
  int workers;
  std::string precision;
  TimingFit fit;
};

inline std::vector<FitRow> load_fits_csv(const std::string& path) {
  csv::Reader reader(path);
  const auto col = reader.header({"backend", "workers", "precision", "A", "C", "r_squared"});
  std::vector<FitRow> rows;
  std::string line;
  while (reader.next(line)) {
    const auto f = reader.row(line);
    rows.push_back({std::string(f[col[0]]), static_cast<int>(reader.parse_int(f[col[1]], "workers")),
                    std::string(f[col[2]]),
                    {reader.parse_double(f[col[3]], "A"), reader.parse_double(f[col[4]], "C"),
                     reader.parse_double(f[col[5]], "r_squared")}});
  }
  return rows;
}

inline std::vector<std::pair<int, double>> load_gain_csv(const std::string& path) {
  csv::Reader reader(path);
  const auto col = reader.header({"B", "gain"});
  std::vector<std::pair<int, double>> rows;
  std::string line;
  while (reader.next(line)) {
    const auto f = reader.row(line);
    rows.emplace_back(static_cast<int>(reader.parse_int(f[col[0]], "B")), reader.parse_double(f[col[1]], "gain"));
  }
  return rows;
}

}  // namespace rsv::bench
