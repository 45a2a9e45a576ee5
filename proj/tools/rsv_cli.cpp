#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "rsv/rsv.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kDataError = 2, kNumericFailure = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class F>
void as_usage(F&& check) {
  try {
    check();
  } catch (const std::logic_error& e) {
    throw UsageError(e.what());
  }
}

std::string sibling(const std::string& path, const std::string& suffix) {
  std::filesystem::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void add_param_options(CLI::App* cmd, rsv::Params& p) {
  cmd->add_option("--phi", p.phi, "AR(1) persistence")->capture_default_str();
  cmd->add_option("--mu", p.mu, "mean log-volatility")->capture_default_str();
  cmd->add_option("--xi", p.xi, "RV bias")->capture_default_str();
  cmd->add_option("--sigma-eta-sq", p.sigma_eta_sq, "volatility innovation variance")->capture_default_str();
  cmd->add_option("--sigma-u-sq", p.sigma_u_sq, "RV measurement variance")->capture_default_str();
}

struct SimulateArgs {
  std::size_t length = 0;
  std::uint64_t seed = 0;
  std::string out = "data.csv";
  std::string truth;
  std::string truth_params;
  rsv::Params params{0.95, -0.5, -0.3, 0.05, 0.1};
};

int cmd_simulate(SimulateArgs& a) {
  as_usage([&] {
    a.params.validate();
    if (a.length < 2) throw std::invalid_argument("--T must be at least 2");
  });
  if (a.truth.empty()) a.truth = sibling(a.out, ".truth.csv");
  if (a.truth_params.empty()) a.truth_params = sibling(a.out, ".params.csv");
  const auto sim = rsv::simulate_rsv(a.params, a.length, a.seed);
  rsv::save_dataset(sim.dataset, a.out);
  rsv::save_latent_path(sim.latent, a.truth);
  rsv::save_params(a.params, a.truth_params);
  std::cout << "dataset " << a.out << "\nlatent " << a.truth << "\nparams " << a.truth_params << '\n';
  return kOk;
}

struct EstimateArgs {
  std::string data;
  std::string intraday;
  std::string out = "chain.csv";
  std::string summary;
  rsv::SamplerConfig config;
  rsv::PriorSpec prior;
};

int cmd_estimate(EstimateArgs& a) {
  as_usage([&] {
    a.config.validate();
    a.prior.validate();
  });
  const auto data = a.data.empty() ? rsv::dataset_from_intraday(rsv::load_intraday(a.intraday)) : rsv::load_dataset(a.data);
  if (a.summary.empty()) a.summary = sibling(a.out, ".summary.csv");
  const auto chain = rsv::run_chain(data, rsv::default_initialization(data), a.prior, a.config);
  rsv::save_chain(chain, a.out);
  const auto summary = rsv::summarize(chain);
  rsv::save_summary_csv(summary, a.summary);
  std::cout << rsv::render_table(summary);
  return kOk;
}

struct DiagnoseArgs {
  std::string chain;
  std::string out;
};

int cmd_diagnose(const DiagnoseArgs& a) {
  const auto chain = rsv::load_chain(a.chain);
  if (chain.samples.empty()) throw rsv::csv::ParseError(a.chain, 0, "chain has no samples");
  const auto summary = rsv::summarize(chain);
  if (!a.out.empty()) rsv::save_summary_csv(summary, a.out);
  std::cout << rsv::render_table(summary);
  return kOk;
}

struct BenchArgs {
  rsv::bench::BenchConfig config;
  std::vector<std::string> backends{"serial", "parallel"};
  int workers = rsv::Executor::available_workers();
  std::string precision = "double";
  std::string out_dir = "bench_report";
};

void print_fit(const rsv::bench::BackendSeries& s) {
  if (!s.fit) return;
  std::printf("%-10s workers=%d  A=%.6e  C=%.6e  R2=%.6f\n", s.backend.name.c_str(), s.backend.workers,
              s.fit->intercept_a, s.fit->slope_c, s.fit->r_squared);
}

int cmd_bench(BenchArgs& a) {
  as_usage([&] {
    a.config.precision = a.precision == "single" ? rsv::bench::Precision::Single : rsv::bench::Precision::Double;
    a.config.backends.clear();
    for (const auto& name : a.backends) {
      if (name == "serial") a.config.backends.push_back({"serial", 1});
      else if (name == "parallel") a.config.backends.push_back({"parallel", a.workers});
      else throw std::invalid_argument("unknown backend '" + name + "'");
    }
    if (a.workers < 1) throw std::invalid_argument("--workers must be positive");
    a.config.validate();
  });

  const auto study = rsv::bench::run_study(a.config, [](const rsv::bench::Backend& b, const rsv::bench::TimingResult& r) {
    std::fprintf(stderr, "%s B=%d T=%zu mean=%.4e s se=%.2e s%s\n", b.name.c_str(), r.b, r.length, r.mean_seconds,
                 r.se_seconds, r.unstable() ? " (unstable)" : "");
  });
  const auto files = rsv::bench::emit_report(study, a.out_dir, utc_timestamp());

  std::printf("fit f(B) = A + C B\n");
  for (const auto& s : study.series) print_fit(s);
  if (const auto pair = study.gain_pair()) {
    std::printf("gain %s/%s\n", pair->first->backend.name.c_str(), pair->second->backend.name.c_str());
    for (const auto& [b, g] : rsv::bench::load_gain_csv(files.gain)) std::printf("B=%d gain=%.6g\n", b, g);
    if (pair->second->fit->slope_c > 0.0)
      std::printf("asymptotic gain %.6g\n", rsv::bench::asymptotic_gain(*pair->first->fit, *pair->second->fit));
  }
  std::printf("report %s\n", a.out_dir.c_str());
  return kOk;
}

/// Fills options not given on the command line from `key = value` lines.
void apply_config_file(CLI::App* cmd, const std::string& path) {
  if (!std::filesystem::exists(path)) throw UsageError("config file " + path + " not found");
  for (const auto& item : CLI::ConfigTOML().from_file(path)) {
    if (item.name == "++" || item.name == "--") continue;
    auto* opt = cmd->get_option_no_throw("--" + item.name);
    if (opt == nullptr || item.name == "config") throw UsageError("unknown config key '" + item.name + "'");
    if (opt->count() > 0) continue;
    opt->add_result(item.inputs);
    opt->run_callback();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Realized stochastic volatility estimation and leapfrog benchmarks"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "simulate a synthetic dataset");
  simulate->add_option("--T", sim.length, "series length")->required();
  simulate->add_option("--seed", sim.seed, "random seed")->required();
  simulate->add_option("--out", sim.out, "dataset CSV")->capture_default_str();
  simulate->add_option("--truth", sim.truth, "latent path CSV (default <out>.truth.csv)");
  simulate->add_option("--truth-params", sim.truth_params, "parameter CSV (default <out>.params.csv)");
  add_param_options(simulate, sim.params);

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "run the sampler on a dataset");
  auto* data_opt = estimate->add_option("--data", est.data, "dataset CSV (date,return,rv)");
  auto* intraday_opt = estimate->add_option("--intraday", est.intraday, "intraday CSV (date,time,return)");
  data_opt->excludes(intraday_opt);
  estimate->add_option("--seed", est.config.seed, "random seed")->required();
  estimate->add_option("--out", est.out, "chain CSV")->capture_default_str();
  estimate->add_option("--summary", est.summary, "summary CSV (default <out>.summary.csv)");
  estimate->add_option("--burnin", est.config.n_burnin)->capture_default_str();
  estimate->add_option("--samples", est.config.n_samples)->capture_default_str();
  estimate->add_option("--thin", est.config.thin)->capture_default_str();
  estimate->add_option("--step-size", est.config.md.step_size)->capture_default_str();
  estimate->add_option("--n-steps", est.config.md.n_steps)->capture_default_str();
  estimate->add_option("--latent-warmup", est.config.latent_warmup)->capture_default_str();
  estimate->add_option("--workers", est.config.workers)->capture_default_str();
  estimate->add_flag("--store-latent", est.config.store_latent, "write latent snapshots to <out>.latent.csv");
  estimate->add_option("--prior-mu-mean", est.prior.mu_mean)->capture_default_str();
  estimate->add_option("--prior-mu-var", est.prior.mu_var)->capture_default_str();
  estimate->add_option("--prior-xi-mean", est.prior.xi_mean)->capture_default_str();
  estimate->add_option("--prior-xi-var", est.prior.xi_var)->capture_default_str();
  estimate->add_option("--prior-var-shape", est.prior.var_shape)->capture_default_str();
  estimate->add_option("--prior-var-scale", est.prior.var_scale)->capture_default_str();
  estimate->add_option("--prior-phi-a", est.prior.phi_a)->capture_default_str();
  estimate->add_option("--prior-phi-b", est.prior.phi_b)->capture_default_str();

  DiagnoseArgs diag;
  auto* diagnose = app.add_subcommand("diagnose", "summarize a stored chain");
  diagnose->add_option("--chain", diag.chain, "chain CSV")->required();
  diagnose->add_option("--out", diag.out, "summary CSV");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "time the elementary leapfrog step");
  std::string bench_config;
  bench_cmd->add_option("--config", bench_config, "key = value file; flags take precedence");
  bench_cmd->add_option("--b-values", bench.config.b_values, "blocks of 512 sites")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--reps", bench.config.reps)->capture_default_str();
  bench_cmd->add_option("--repeats", bench.config.repeats)->capture_default_str();
  bench_cmd->add_option("--warmup", bench.config.warmup)->capture_default_str();
  bench_cmd->add_option("--refresh-interval", bench.config.refresh_interval)->capture_default_str();
  bench_cmd->add_option("--step-size", bench.config.step_size)->capture_default_str();
  bench_cmd->add_option("--chunk", bench.config.chunk)->capture_default_str();
  bench_cmd->add_option("--seed", bench.config.seed)->capture_default_str();
  bench_cmd->add_option("--workers", bench.workers, "parallel backend workers")->capture_default_str();
  bench_cmd->add_option("--backends", bench.backends)->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--precision", bench.precision)
      ->check(CLI::IsMember({"single", "double"}))
      ->capture_default_str();
  bench_cmd->add_option("--out-dir", bench.out_dir)->capture_default_str();

  try {
    app.parse(argc, argv);
    if (*bench_cmd && !bench_config.empty()) apply_config_file(bench_cmd, bench_config);
    if (*estimate && est.data.empty() && est.intraday.empty()) throw UsageError("estimate needs --data or --intraday");
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sim);
    if (*estimate) return cmd_estimate(est);
    if (*diagnose) return cmd_diagnose(diag);
    return cmd_bench(bench);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const rsv::NumericFailure& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumericFailure;
  } catch (const rsv::bench::BenchFailure& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumericFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
}
