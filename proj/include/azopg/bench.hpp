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

// Experiment harness: benchmark systems, configuration, CSV traces and
// speedup reports.

#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "azopg/async_engine.hpp"
#include "azopg/errors.hpp"
#include "azopg/linalg_control.hpp"

#ifndef AZOPG_VERSION
#define AZOPG_VERSION "0.1.0"
#endif

namespace azopg {

inline constexpr const char* kVersion = AZOPG_VERSION;

/// Chain of k unit masses joined by unit springs and dampers:
/// x = [p; v], A = [[0, I], [-T, -T]], B = [0; I], T = tridiag(-1, 2, -1),
/// Q = I, R = I, X0 = I.
inline LinearSystem build_mass_spring_damper(int k_masses) {
  if (k_masses < 1) {
    throw std::invalid_argument("mass-spring-damper needs at least one mass");
  }
  const Eigen::Index k = k_masses;
  Matrix T = Matrix::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    T(i, i) = 2.0;
    if (i + 1 < k) {
      T(i, i + 1) = -1.0;
      T(i + 1, i) = -1.0;
    }
  }
  Matrix A = Matrix::Zero(2 * k, 2 * k);
  A.topRightCorner(k, k).setIdentity();
  A.bottomLeftCorner(k, k) = -T;
  A.bottomRightCorner(k, k) = -T;
  Matrix B = Matrix::Zero(2 * k, k);
  B.bottomRows(k).setIdentity();
  return LinearSystem(std::move(A), std::move(B), Matrix::Identity(2 * k, 2 * k),
                      Matrix::Identity(k, k));
}

/// A = 0, B = Q = R = X0 = 1. f(K) = (K^2 + 1) / (2K) for K > 0.
inline LinearSystem build_scalar_system() {
  const Matrix one = Matrix::Ones(1, 1);
  return LinearSystem(Matrix::Zero(1, 1), one, one, one, one);
}

// ---------------------------------------------------------------------------
// JSON helpers

inline Matrix matrix_from_json(const nlohmann::json& j, const char* name) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) {
    throw std::invalid_argument(std::string(name) +
                                " must be a nonempty array of rows");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Matrix M(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw std::invalid_argument(std::string(name) + " has ragged rows");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      M(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  }
  return M;
}

inline nlohmann::json matrix_to_json(const Matrix& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

/// System file: {"A": [[...]], "B": ..., "Q": ..., "R": ..., "X0": ...};
/// X0 defaults to the identity.
inline LinearSystem load_system_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open system file " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("system file " + path.string() + ": " +
                                e.what());
  }
  Matrix A = matrix_from_json(j.at("A"), "A");
  Matrix B = matrix_from_json(j.at("B"), "B");
  Matrix Q = matrix_from_json(j.at("Q"), "Q");
  Matrix R = matrix_from_json(j.at("R"), "R");
  if (j.contains("X0")) {
    return LinearSystem(std::move(A), std::move(B), std::move(Q), std::move(R),
                        matrix_from_json(j.at("X0"), "X0"));
  }
  return LinearSystem(std::move(A), std::move(B), std::move(Q), std::move(R));
}

// ---------------------------------------------------------------------------
// Configuration

enum class ExecMode { simulated, threaded };

struct ExperimentConfig {
  std::string system = "mass-spring-damper";  // | "scalar" | "file"
  int masses = 4;
  std::string system_file;
  std::optional<Matrix> K0;  // default: zero gain (K = 2 for "scalar")
  std::vector<int> workers{1};
  double eta = 2e-3;
  double r = 1e-5;
  double tau = 100.0;
  double dt = 1e-2;
  int N = 32;
  std::uint64_t seed = 1;
  double target_rel_error = 1e-3;
  long max_iters = 20000;
  ExecMode mode = ExecMode::simulated;
  double slow_fraction = 0.0;
  double slow_extra = 0.1;
  std::string dist = "gaussian";
  double init_bound = 3.0;
  double t_lo = 0.04;
  double t_hi = 0.06;
  std::string delay_law = "uniform";
  std::optional<long> max_staleness;
  std::string out_dir = "azopg_out";

  void validate() const {
    auto fail = [](const std::string& what) {
      throw std::invalid_argument("config: " + what);
    };
    if (system != "mass-spring-damper" && system != "scalar" &&
        system != "file") {
      fail("system must be mass-spring-damper, scalar or file");
    }
    if (system == "mass-spring-damper" && masses < 1) fail("masses < 1");
    if (system == "file" && system_file.empty()) fail("system_file missing");
    if (workers.empty()) fail("workers must be nonempty");
    for (int m : workers) {
      if (m < 1) fail("worker counts must be >= 1");
    }
    if (!(eta > 0.0)) fail("eta must be > 0");
    if (!(r > 0.0)) fail("r must be > 0");
    if (!(tau > 0.0)) fail("tau must be > 0");
    if (!(dt > 0.0) || dt > tau) fail("need 0 < dt <= tau");
    if (N < 1) fail("N must be >= 1");
    if (!(target_rel_error > 0.0)) fail("target_rel_error must be > 0");
    if (max_iters < 1) fail("max_iters must be >= 1");
    if (!(slow_fraction >= 0.0 && slow_fraction <= 1.0)) {
      fail("slow_fraction must be in [0, 1]");
    }
    if (!(slow_extra >= 0.0)) fail("slow_extra must be >= 0");
    if (!(t_lo > 0.0) || !(t_hi >= t_lo)) fail("need 0 < t_lo <= t_hi");
    if (delay_law != "uniform" && delay_law != "fixed-per-worker") {
      fail("delay_law must be uniform or fixed-per-worker");
    }
    parse_init_kind(dist);
  }

  LinearSystem build_system() const {
    if (system == "scalar") return build_scalar_system();
    if (system == "file") return load_system_file(system_file);
    return build_mass_spring_damper(masses);
  }

  Policy initial_policy(const LinearSystem& sys) const {
    if (K0) {
      Policy K(*K0);
      sys.check_policy(K);
      return K;
    }
    if (system == "scalar") return Policy(Matrix::Constant(1, 1, 2.0));
    return Policy::zero(sys.inputs(), sys.states());
  }

  EngineConfig engine(int M) const {
    EngineConfig e;
    e.eta = eta;
    e.N = N;
    e.radius = r;
    e.rollout.tau = tau;
    e.rollout.dt = dt;
    e.workers = M;
    e.dist = parse_init_kind(dist);
    e.init_bound = init_bound;
    e.max_staleness = max_staleness;
    return e;
  }

  DelayModel delay_model(int M) const {
    DelayModel dm;
    dm.t_lo = t_lo;
    dm.t_hi = t_hi;
    dm.law = delay_law == "uniform" ? DelayLaw::uniform
                                    : DelayLaw::fixed_per_worker;
    // A single worker is never slowed: it is the speedup baseline.
    if (slow_fraction > 0.0 && M > 1) {
      dm.per_worker_extra = DelayModel::slow_tail(M, slow_fraction, slow_extra);
    }
    return dm;
  }

  StopRule stop() const { return {target_rel_error, max_iters}; }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["system"] = system;
    j["masses"] = masses;
    j["system_file"] = system_file;
    if (K0) j["K0"] = matrix_to_json(*K0);
    j["workers"] = workers;
    j["eta"] = eta;
    j["r"] = r;
    j["tau"] = tau;
    j["dt"] = dt;
    j["N"] = N;
    j["seed"] = seed;
    j["target_rel_error"] = target_rel_error;
    j["max_iters"] = max_iters;
    j["mode"] = mode == ExecMode::simulated ? "simulated" : "threaded";
    j["slow_fraction"] = slow_fraction;
    j["slow_extra"] = slow_extra;
    j["dist"] = dist;
    j["init_bound"] = init_bound;
    j["t_lo"] = t_lo;
    j["t_hi"] = t_hi;
    j["delay_law"] = delay_law;
    if (max_staleness) j["max_staleness"] = *max_staleness;
    j["out_dir"] = out_dir;
    return j;
  }

  /// Reads any subset of the fields; unknown keys are rejected.
  static ExperimentConfig from_json(const nlohmann::json& j,
                                    ExperimentConfig base) {
    if (!j.is_object()) throw std::invalid_argument("config must be an object");
    ExperimentConfig c = std::move(base);
    try {
      for (const auto& [key, v] : j.items()) {
        if (key == "system") c.system = v.get<std::string>();
        else if (key == "masses") c.masses = v.get<int>();
        else if (key == "system_file") c.system_file = v.get<std::string>();
        else if (key == "K0") c.K0 = matrix_from_json(v, "K0");
        else if (key == "workers") c.workers = v.get<std::vector<int>>();
        else if (key == "eta") c.eta = v.get<double>();
        else if (key == "r") c.r = v.get<double>();
        else if (key == "tau") c.tau = v.get<double>();
        else if (key == "dt") c.dt = v.get<double>();
        else if (key == "N") c.N = v.get<int>();
        else if (key == "seed") c.seed = v.get<std::uint64_t>();
        else if (key == "target_rel_error") c.target_rel_error = v.get<double>();
        else if (key == "max_iters") c.max_iters = v.get<long>();
        else if (key == "mode") {
          const auto s = v.get<std::string>();
          if (s == "simulated") c.mode = ExecMode::simulated;
          else if (s == "threaded") c.mode = ExecMode::threaded;
          else throw std::invalid_argument("mode must be simulated or threaded");
        }
        else if (key == "slow_fraction") c.slow_fraction = v.get<double>();
        else if (key == "slow_extra") c.slow_extra = v.get<double>();
        else if (key == "dist") c.dist = v.get<std::string>();
        else if (key == "init_bound") c.init_bound = v.get<double>();
        else if (key == "t_lo") c.t_lo = v.get<double>();
        else if (key == "t_hi") c.t_hi = v.get<double>();
        else if (key == "delay_law") c.delay_law = v.get<std::string>();
        else if (key == "max_staleness") c.max_staleness = v.get<long>();
        else if (key == "out_dir") c.out_dir = v.get<std::string>();
        else throw std::invalid_argument("unknown config key '" + key + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument(std::string("config: ") + e.what());
    }
    return c;
  }
};

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  return ExperimentConfig::from_json(j, ExperimentConfig{});
}

// ---------------------------------------------------------------------------
// CSV traces

inline constexpr const char* kTraceHeader =
    "iteration,time_s,rollouts_total,rel_error,grad_norm,max_delay";

namespace detail {

inline std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_field(std::string_view field, std::size_t line) {
  T value{};
  const auto res =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
    throw std::invalid_argument("trace line " + std::to_string(line) +
                                ": cannot parse '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace detail

inline void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << kTraceHeader << '\n';
  for (const TraceRow& row : trace.rows) {
    out << row.iteration << ',' << detail::shortest(row.time_s) << ','
        << row.rollouts_total << ',' << detail::shortest(row.rel_error) << ','
        << detail::shortest(row.grad_norm) << ',' << row.max_delay << '\n';
  }
}

inline Trace read_trace_csv(std::istream& in, int workers = 1) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) {
    throw std::invalid_argument("trace CSV: unexpected header");
  }
  Trace trace;
  trace.workers = workers;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos;) {
      f.push_back(rest.substr(0, pos));
      rest.remove_prefix(pos + 1);
    }
    f.push_back(rest);
    if (f.size() != 6) {
      throw std::invalid_argument("trace line " + std::to_string(lineno) +
                                  ": expected 6 fields");
    }
    trace.rows.push_back({detail::parse_field<long>(f[0], lineno),
                          detail::parse_field<double>(f[1], lineno),
                          detail::parse_field<long>(f[2], lineno),
                          detail::parse_field<double>(f[3], lineno),
                          detail::parse_field<double>(f[4], lineno),
                          detail::parse_field<long>(f[5], lineno)});
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Speedup

struct SpeedupRow {
  int M;
  double time_to_target;
  double speedup;
  long rollouts_per_worker;
};

struct SpeedupReport {
  std::vector<SpeedupRow> rows;
};

/// First trace row with rel_error <= target, if any.
inline std::optional<TraceRow> first_reaching(const Trace& trace,
                                              double target) {
  for (const TraceRow& row : trace.rows) {
    if (row.rel_error <= target) return row;
  }
  return std::nullopt;
}

/// Speedup T_1 / T_M keyed by worker count; requires an M = 1 trace and every
/// trace to reach the target.
inline SpeedupReport speedup_report(const std::map<int, Trace>& traces,
                                    double target) {
  const auto base = traces.find(1);
  if (base == traces.end()) {
    throw ReportError("speedup report needs a single-worker trace");
  }
  std::map<int, TraceRow> hits;
  for (const auto& [M, trace] : traces) {
    const auto hit = first_reaching(trace, target);
    if (!hit) {
      throw ReportError("trace for M = " + std::to_string(M) +
                        " never reaches rel_error " +
                        detail::shortest(target));
    }
    hits.emplace(M, *hit);
  }
  const double t1 = hits.at(1).time_s;
  SpeedupReport report;
  for (const auto& [M, hit] : hits) {
    report.rows.push_back({M, hit.time_s, M == 1 ? 1.0 : t1 / hit.time_s,
                           hit.rollouts_total / M});
  }
  return report;
}

inline void write_speedup_csv(std::ostream& out, const SpeedupReport& rep) {
  out << "M,time_to_target,speedup,rollouts_per_worker\n";
  for (const SpeedupRow& row : rep.rows) {
    out << row.M << ',' << detail::shortest(row.time_to_target) << ','
        << detail::shortest(row.speedup) << ',' << row.rollouts_per_worker
        << '\n';
  }
}

// ---------------------------------------------------------------------------
// Diagnostics

/// Empirical gradient-dominance constant over the sublevel set f(K) <= a:
/// min over sampled K of ||grad f(K)||_F^2 / (2 (f(K) - f*)).
/// Samples are K* plus random directions with adaptively shrinking radius.
inline double gradient_dominance_probe(const LinearSystem& sys, int samples,
                                       double a, std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("probe: samples < 1");
  const OptimalPolicy opt = optimal_policy(sys, stabilizing_gain(sys));
  if (!(a > opt.cost)) {
    throw std::invalid_argument("probe: need a > f*");
  }
  Rng rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double radius = 1.0 + opt.K.K.norm();
  double best = std::numeric_limits<double>::infinity();
  int accepted = 0;
  int misses = 0;
  const long budget = 1000L * samples;
  for (long attempt = 0; attempt < budget && accepted < samples; ++attempt) {
    Matrix D(opt.K.K.rows(), opt.K.K.cols());
    for (Eigen::Index i = 0; i < D.size(); ++i) D.data()[i] = normal(rng);
    D *= radius * unit(rng) / D.norm();
    const Policy K(opt.K.K + D);
    bool ok = false;
    if (is_stabilizing(sys, K)) {
      const ValueCertificate cert = value_certificate(sys, K);
      const double gap = cert.cost - opt.cost;
      if (cert.cost <= a && gap > 1e-9 * (1.0 + opt.cost)) {
        best = std::min(best, cert.grad.squaredNorm() / (2.0 * gap));
        ++accepted;
        ok = true;
      }
    }
    if (ok) {
      misses = 0;
    } else if (++misses >= 50) {
      radius *= 0.5;
      misses = 0;
    }
  }
  if (accepted == 0) {
    throw SamplingFailure("probe: no stabilizing samples with f(K) <= a");
  }
  return best;
}

/// Model-based baseline K_{j+1} = K_j - eta grad f(K_j). Trace times are
/// wall-clock; rollout counts are zero.
inline RunResult run_model_based(const LinearSystem& sys, const Policy& K0,
                                 double eta, const StopRule& stop,
                                 const Reference& ref, TraceSink sink = {}) {
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be > 0");
  if (!is_stabilizing(sys, K0)) {
    throw NotStabilizingError("initial policy is not stabilizing");
  }
  const auto t0 = std::chrono::steady_clock::now();
  const PolicyMonitor monitor = oracle_monitor(sys, ref.f0, ref.f_star);
  RunResult out;
  out.f0 = ref.f0;
  out.f_star = ref.f_star;
  Policy K = K0;
  auto emit = [&](long j, const PolicyMetrics& m) {
    const double t = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    out.trace.rows.push_back({j, t, 0, m.rel_error, m.grad_norm, 0});
    if (sink) sink(out.trace.rows.back());
  };
  emit(0, monitor(K));
  out.status = RunStatus::timeout;
  for (long j = 0;; ++j) {
    if (out.trace.rows.back().rel_error <= stop.target_rel_error) {
      out.status = RunStatus::converged;
      break;
    }
    if (j >= stop.max_iters) break;
    Policy next(K.K - eta * value_certificate(sys, K).grad);
    try {
      const PolicyMetrics m = monitor(next);
      K = std::move(next);
      emit(j + 1, m);
    } catch (const NotStabilizingError&) {
      out.status = RunStatus::destabilized;
      out.diagnostic = "update " + std::to_string(j + 1) +
                       " left the stabilizing set";
      break;
    }
  }
  out.final_policy = K;
  return out;
}

// ---------------------------------------------------------------------------
// Experiment driver

struct ExperimentResult {
  std::map<int, RunResult> runs;
  OptimalPolicy optimum;
  std::vector<std::filesystem::path> files;
};

inline std::filesystem::path trace_path(const std::filesystem::path& dir,
                                        int M) {
  return dir / ("trace_M" + std::to_string(M) + ".csv");
}

/// Delay bound for a finished run using its measured pull-to-push interval.
inline long measured_delay_bound(const Trace& trace, int N) {
  if (!(trace.t_lo_measured > 0.0) ||
      !std::isfinite(trace.t_lo_measured)) {
    return 1;
  }
  return delay_bound(trace.t_lo_measured, trace.t_hi_measured, trace.workers,
                     N);
}

inline nlohmann::json run_summary(const RunResult& run, int N) {
  nlohmann::json j;
  j["status"] = std::string(to_string(run.status));
  j["iterations"] = run.trace.rows.empty() ? 0 : run.trace.rows.back().iteration;
  j["max_delay"] = run.trace.max_delay();
  j["delay_histogram"] = run.trace.delay_histogram;
  j["discarded_rollouts"] = run.trace.discarded_rollouts;
  j["dropped_stale"] = run.trace.dropped_stale;
  if (std::isfinite(run.trace.t_lo_measured)) {
    j["t_lo_measured"] = run.trace.t_lo_measured;
    j["t_hi_measured"] = run.trace.t_hi_measured;
    j["delay_bound_measured"] = measured_delay_bound(run.trace, N);
  }
  j["descent_fraction"] = descent_fraction(run.trace);
  j["final_K"] = matrix_to_json(run.final_policy.K);
  if (!run.diagnostic.empty()) j["diagnostic"] = run.diagnostic;
  if (!run.warnings.empty()) j["warnings"] = run.warnings;
  return j;
}

/// Runs one engine execution per worker count, writing trace_M<M>.csv for
/// each and metadata.json (config, K*, f*, per-run summaries, version).
/// Traces are written whatever the run status.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const LinearSystem sys = cfg.build_system();
  const Policy K0 = cfg.initial_policy(sys);
  if (!is_stabilizing(sys, K0)) {
    throw NotStabilizingError("initial policy is not stabilizing");
  }
  ExperimentResult result;
  result.optimum = optimal_policy(sys, K0);
  const Reference ref{cost(sys, K0), result.optimum.cost};

  const std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);

  nlohmann::json meta;
  meta["version"] = kVersion;
  meta["config"] = cfg.to_json();
  meta["K_star"] = matrix_to_json(result.optimum.K.K);
  meta["f_star"] = result.optimum.cost;
  meta["f0"] = ref.f0;
  meta["columns"] = kTraceHeader;

  auto write_meta = [&] {
    std::ofstream out(dir / "metadata.json");
    out << meta.dump(2) << '\n';
  };

  for (int M : cfg.workers) {
    RunResult run;
    if (cfg.mode == ExecMode::simulated) {
      run = run_simulated(sys, K0, cfg.engine(M), cfg.delay_model(M),
                          cfg.stop(), cfg.seed, ref);
    } else {
      run = run_threaded(sys, K0, cfg.engine(M), cfg.stop(), cfg.seed, ref,
                         cfg.delay_model(M).per_worker_extra);
    }
    const auto path = trace_path(dir, M);
    {
      std::ofstream out(path);
      write_trace_csv(out, run.trace);
    }
    result.files.push_back(path);
    meta["runs"][std::to_string(M)] = run_summary(run, cfg.N);
    if (cfg.mode == ExecMode::simulated) {
      const auto [lo, hi] = cfg.delay_model(M).effective_interval(M);
      meta["runs"][std::to_string(M)]["delay_bound_configured"] =
          delay_bound(lo, hi, M, cfg.N);
    }
    write_meta();
    const bool stop = run.status == RunStatus::destabilized;
    result.runs.emplace(M, std::move(run));
    if (stop) break;
  }

  std::map<int, Trace> traces;
  for (const auto& [M, run] : result.runs) traces.emplace(M, run.trace);
  try {
    const SpeedupReport rep = speedup_report(traces, cfg.target_rel_error);
    std::ofstream out(dir / "speedup.csv");
    write_speedup_csv(out, rep);
    result.files.push_back(dir / "speedup.csv");
  } catch (const ReportError& e) {
    meta["speedup_error"] = e.what();
    write_meta();
  }
  result.files.push_back(dir / "metadata.json");
  return result;
}

}  // namespace azopg
