/*
 Copyright 2026 The AZOPG Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

// azopg command line: solve | oracle | bench | check.
//
// Exit codes: 0 success, 1 check failure or internal error, 2 invalid
// configuration, 3 run failure (destabilization), 4 target unreached.

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "azopg/azopg.hpp"

namespace {

using namespace azopg;

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kInvalidConfig = 2;
constexpr int kRunFailure = 3;
constexpr int kUnreached = 4;

struct InvalidConfig : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Values given on the command line. Optional so that only flags actually
// passed override the config file.
struct Flags {
  std::string config;
  std::optional<std::string> system, system_file, mode, dist, delay_law,
      out_dir;
  std::optional<int> masses, N;
  std::optional<std::vector<int>> workers;
  std::optional<double> eta, r, tau, dt, target_rel_error, slow_fraction,
      slow_extra, init_bound, t_lo, t_hi;
  std::optional<std::uint64_t> seed;
  std::optional<long> max_iters, max_staleness;
  bool quiet = false;
};

void add_config_flags(CLI::App& app, Flags& f) {
  app.add_option("--config", f.config, "JSON config file (flags override it)")
      ->check(CLI::ExistingFile);
  app.add_option("--system", f.system, "mass-spring-damper | scalar | file");
  app.add_option("--masses", f.masses, "number of masses k (n = 2k, m = k)");
  app.add_option("--system_file,--system-file", f.system_file,
                 "JSON with A, B, Q, R and optional X0");
  app.add_option("--workers", f.workers, "worker counts, e.g. 1 2 4 8")
      ->delimiter(',');
  app.add_option("--eta", f.eta, "step size");
  app.add_option("-r,--r", f.r, "smoothing radius");
  app.add_option("--tau", f.tau, "rollout horizon");
  app.add_option("--dt", f.dt, "integrator step");
  app.add_option("-N,--N", f.N, "estimates per update");
  app.add_option("--seed", f.seed, "master seed (default: $AZOPG_SEED or 1)");
  app.add_option("--target_rel_error,--target-rel-error", f.target_rel_error,
                 "stop when (f - f*) / (f0 - f*) is at most this");
  app.add_option("--max_iters,--max-iters", f.max_iters, "iteration cap");
  app.add_option("--mode", f.mode, "simulated | threaded");
  app.add_option("--slow_fraction,--slow-fraction", f.slow_fraction,
                 "fraction of workers given an extra delay");
  app.add_option("--slow_extra,--slow-extra", f.slow_extra,
                 "extra seconds per estimate for slowed workers");
  app.add_option("--dist", f.dist,
                 "gaussian | rademacher | truncated-gaussian");
  app.add_option("--init_bound,--init-bound", f.init_bound,
                 "entrywise bound for truncated-gaussian");
  app.add_option("--t_lo,--t-lo", f.t_lo, "simulated estimate time, low");
  app.add_option("--t_hi,--t-hi", f.t_hi, "simulated estimate time, high");
  app.add_option("--delay_law,--delay-law", f.delay_law,
                 "uniform | fixed-per-worker");
  app.add_option("--max_staleness,--max-staleness", f.max_staleness,
                 "drop estimates older than this many updates (off by default)");
  app.add_option("--out_dir,--out-dir", f.out_dir, "output directory");
  app.add_flag("-q,--quiet", f.quiet, "no progress output");
}

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("AZOPG_SEED");
  if (s == nullptr || *s == '\0') return std::nullopt;
  std::uint64_t v = 0;
  const char* end = s + std::char_traits<char>::length(s);
  const auto res = std::from_chars(s, end, v);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw InvalidConfig(std::string("AZOPG_SEED is not an unsigned integer: ") +
                        s);
  }
  return v;
}

// Merges defaults, config file, AZOPG_SEED and flags, in increasing priority
// (a seed in the config file wins over the environment).
ExperimentConfig resolve(const Flags& f, bool& workers_set) {
  ExperimentConfig c;
  bool seed_in_file = false;
  workers_set = f.workers.has_value();
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw InvalidConfig("config file: " + std::string(e.what()));
    }
    seed_in_file = j.is_object() && j.contains("seed");
    workers_set = workers_set || (j.is_object() && j.contains("workers"));
    c = config_from_json(j);
  }
  if (!seed_in_file) {
    if (auto s = env_seed()) c.seed = *s;
  }
  auto set = [](auto& dst, const auto& src) {
    if (src) dst = *src;
  };
  set(c.system, f.system);
  set(c.masses, f.masses);
  set(c.system_file, f.system_file);
  set(c.workers, f.workers);
  set(c.eta, f.eta);
  set(c.r, f.r);
  set(c.tau, f.tau);
  set(c.dt, f.dt);
  set(c.N, f.N);
  set(c.seed, f.seed);
  set(c.target_rel_error, f.target_rel_error);
  set(c.max_iters, f.max_iters);
  if (f.mode) {
    if (*f.mode == "simulated") c.mode = ExecMode::simulated;
    else if (*f.mode == "threaded") c.mode = ExecMode::threaded;
    else throw InvalidConfig("--mode must be simulated or threaded");
  }
  set(c.slow_fraction, f.slow_fraction);
  set(c.slow_extra, f.slow_extra);
  set(c.dist, f.dist);
  set(c.init_bound, f.init_bound);
  set(c.t_lo, f.t_lo);
  set(c.t_hi, f.t_hi);
  set(c.delay_law, f.delay_law);
  if (f.max_staleness) c.max_staleness = *f.max_staleness;
  set(c.out_dir, f.out_dir);
  c.validate();
  return c;
}

int exit_code_for(RunStatus s) {
  switch (s) {
    case RunStatus::converged: return kOk;
    case RunStatus::destabilized: return kRunFailure;
    case RunStatus::timeout: return kUnreached;
  }
  return kCheckFailed;
}

void print_run(const std::string& label, const RunResult& run) {
  const TraceRow& last = run.trace.rows.back();
  std::printf("%s status=%s iterations=%ld time_s=%.6g rel_error=%.6g "
              "max_delay=%ld\n",
              label.c_str(), std::string(to_string(run.status)).c_str(),
              last.iteration,
              last.time_s, last.rel_error, run.trace.max_delay());
  for (const auto& w : run.warnings) {
    std::fprintf(stderr, "warning: %s\n", w.c_str());
  }
  if (!run.diagnostic.empty()) {
    std::fprintf(stderr, "diagnostic: %s\n", run.diagnostic.c_str());
  }
}

int worst_exit(const ExperimentResult& res) {
  int code = kOk;
  for (const auto& [M, run] : res.runs) {
    const int c = exit_code_for(run.status);
    if (c == kRunFailure) return kRunFailure;
    code = std::max(code, c);
  }
  return code;
}

int cmd_solve(const ExperimentConfig& cfg) {
  if (cfg.workers.size() != 1) {
    throw InvalidConfig("solve takes exactly one worker count; use bench");
  }
  const ExperimentResult res = run_experiment(cfg);
  for (const auto& [M, run] : res.runs) {
    print_run("M=" + std::to_string(M), run);
  }
  std::printf("f*=%.17g traces in %s\n", res.optimum.cost,
              cfg.out_dir.c_str());
  return worst_exit(res);
}

int cmd_bench(ExperimentConfig cfg, bool workers_given) {
  if (!workers_given) cfg.workers = {1, 2, 4, 6, 8};
  const ExperimentResult res = run_experiment(cfg);
  for (const auto& [M, run] : res.runs) {
    print_run("M=" + std::to_string(M), run);
  }
  const auto speedup = std::filesystem::path(cfg.out_dir) / "speedup.csv";
  if (std::filesystem::exists(speedup)) {
    std::ifstream in(speedup);
    std::cout << in.rdbuf();
  } else {
    std::fprintf(stderr, "no speedup report: a run did not reach the target\n");
  }
  return worst_exit(res);
}

int cmd_oracle(const ExperimentConfig& cfg, bool quiet) {
  const LinearSystem sys = cfg.build_system();
  const Policy K0 = cfg.initial_policy(sys);
  if (!is_stabilizing(sys, K0)) {
    throw InvalidConfig("initial policy is not stabilizing");
  }
  const OptimalPolicy opt = optimal_policy(sys, K0);
  const Reference ref{cost(sys, K0), opt.cost};
  TraceSink sink;
  if (!quiet) {
    sink = [](const TraceRow& row) {
      if (row.iteration % 500 == 0) {
        std::fprintf(stderr, "  j=%ld rel_error=%.3e\n", row.iteration,
                     row.rel_error);
      }
    };
  }
  const RunResult run =
      run_model_based(sys, K0, cfg.eta, cfg.stop(), ref, std::move(sink));
  std::filesystem::create_directories(cfg.out_dir);
  const auto path = std::filesystem::path(cfg.out_dir) / "trace_oracle.csv";
  std::ofstream out(path);
  write_trace_csv(out, run.trace);
  print_run("oracle", run);
  std::printf("f*=%.17g trace in %s\n", opt.cost, path.string().c_str());
  return exit_code_for(run.status);
}

// Quick invariant suite on the configured system.
int cmd_check(const ExperimentConfig& cfg) {
  int failed = 0;
  auto line = [&](bool ok, const std::string& what, const std::string& info) {
    if (!ok) ++failed;
    std::printf("[%s] %s: %s\n", ok ? "PASS" : "FAIL", what.c_str(),
                info.c_str());
    std::fflush(stdout);
  };
  auto num = [](double v) {
    std::ostringstream s;
    s << v;
    return s.str();
  };

  {
    const LinearSystem s = build_scalar_system();
    const ValueCertificate c =
        value_certificate(s, Policy(Matrix::Constant(1, 1, 2.0)));
    line(std::abs(c.cost - 1.25) <= 1e-12 &&
             std::abs(c.grad(0, 0) - 0.375) <= 1e-12,
         "scalar closed form",
         "f=" + num(c.cost) + " grad=" + num(c.grad(0, 0)));
  }

  const LinearSystem sys = cfg.build_system();
  const Policy K0 = cfg.initial_policy(sys);
  if (!is_stabilizing(sys, K0)) {
    throw InvalidConfig("initial policy is not stabilizing");
  }
  const ValueCertificate cert = value_certificate(sys, K0);
  {
    const Matrix F = sys.closed_loop(K0);
    const Matrix W = sys.Q() + K0.K.transpose() * sys.R() * K0.K;
    const double res = lyapunov_residual(F, cert.P, W) / (1.0 + W.norm());
    line(res <= 1e-10, "Lyapunov residual at K0", num(res));
  }
  {
    Matrix fd(K0.K.rows(), K0.K.cols());
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < fd.size(); ++i) {
      Matrix plus = K0.K;
      Matrix minus = K0.K;
      plus.data()[i] += h;
      minus.data()[i] -= h;
      fd.data()[i] =
          (cost(sys, Policy(plus)) - cost(sys, Policy(minus))) / (2 * h);
    }
    const double rel =
        (fd - cert.grad).norm() / std::max(cert.grad.norm(), 1e-300);
    line(rel <= 1e-5, "gradient vs central differences", "rel err " + num(rel));
  }
  const OptimalPolicy opt = optimal_policy(sys, K0);
  line(value_certificate(sys, opt.K).grad.norm() <= 1e-8, "optimal policy",
       "f*=" + num(opt.cost) + " after " + std::to_string(opt.iterations) +
           " Newton steps");
  {
    Rng rng(cfg.seed);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      const Perturbation p =
          sample_perturbation(sys.inputs(), sys.states(), rng);
      worst = std::max(worst, std::abs(p.U.norm() -
                                       std::sqrt(double(p.U.size()))));
    }
    line(worst <= 1e-12, "sphere sample norm", "worst dev " + num(worst));
  }
  {
    const auto dist = InitDistribution::gaussian(sys.states());
    Rng rng(cfg.seed);
    RolloutConfig rc{cfg.tau, cfg.dt, 1e6};
    double worst = 0.0;
    for (int i = 0; i < 5; ++i) {
      const Vector z = sample_initial_state(dist, rng);
      const double exact = truncated_cost_exact(sys, K0, z, cfg.tau);
      worst = std::max(worst, std::abs(rollout_cost(sys, K0, z, rc) - exact) /
                                  (1.0 + exact));
    }
    line(worst <= 1e-6, "rollout vs exact truncated cost",
         "worst rel err " + num(worst) + " at dt=" + num(cfg.dt));
  }
  {
    // Short simulated runs: staleness bound, accounting, reproducibility.
    const int M = *std::max_element(cfg.workers.begin(), cfg.workers.end());
    const Reference ref{cost(sys, K0), opt.cost};
    const StopRule stop{0.0, 30};
    auto run = [&] {
      return run_simulated(sys, K0, cfg.engine(M), cfg.delay_model(M), stop,
                           cfg.seed, ref);
    };
    const RunResult a = run();
    const RunResult b = run();
    std::ostringstream ca, cb;
    write_trace_csv(ca, a.trace);
    write_trace_csv(cb, b.trace);
    const auto [lo, hi] = cfg.delay_model(M).effective_interval(M);
    const long bound = delay_bound(lo, hi, M, cfg.N);
    line(a.trace.max_delay() <= bound, "delay bound",
         "M=" + std::to_string(M) + " max delay " +
             std::to_string(a.trace.max_delay()) + " <= " +
             std::to_string(bound));
    bool accounting = true;
    for (const TraceRow& row : a.trace.rows) {
      accounting =
          accounting && row.rollouts_total == 2L * cfg.N * row.iteration;
    }
    line(accounting, "rollout accounting", "rollouts_total = 2 N j");
    line(ca.str() == cb.str(), "byte-reproducible simulated trace",
         std::to_string(ca.str().size()) + " bytes");
  }
  {
    const double mu = gradient_dominance_probe(sys, 200, 2.0 * cost(sys, K0),
                                               cfg.seed);
    line(mu > 0.0, "gradient-dominance probe", "mu_hat=" + num(mu));
  }
  return failed == 0 ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asynchronous zero-order policy gradient for continuous-time LQR"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Flags flags;
  CLI::App* solve = app.add_subcommand("solve", "one AZOPG run");
  CLI::App* oracle =
      app.add_subcommand("oracle", "model-based gradient descent baseline");
  CLI::App* bench =
      app.add_subcommand("bench", "worker sweep with speedup report");
  CLI::App* check = app.add_subcommand("check", "quick invariant suite");
  for (CLI::App* sub : {solve, oracle, bench, check}) {
    add_config_flags(*sub, flags);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalidConfig;
  }

  try {
    bool workers_set = false;
    const ExperimentConfig cfg = resolve(flags, workers_set);
    if (*solve) return cmd_solve(cfg);
    if (*oracle) return cmd_oracle(cfg, flags.quiet);
    if (*bench) return cmd_bench(cfg, workers_set);
    if (*check) return cmd_check(cfg);
  } catch (const InvalidConfig& e) {
    std::fprintf(stderr, "invalid configuration: %s\n", e.what());
    return kInvalidConfig;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid configuration: %s\n", e.what());
    return kInvalidConfig;
  } catch (const NotStabilizingError& e) {
    std::fprintf(stderr, "invalid configuration: %s\n", e.what());
    return kInvalidConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kCheckFailed;
  }
  return kCheckFailed;
}
