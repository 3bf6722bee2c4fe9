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

// Asynchronous master-worker runtime.
//
// Workers loop pull -> two-point estimate -> push. The master buffers pushed
// estimates, stale or not, and once it holds N of them applies
//
//   K_{j+1} = K_j - eta * mean(buffer).
//
// run_simulated drives the workers from a single-threaded discrete-event
// loop with rollout durations drawn from a DelayModel; run_threaded uses one
// OS thread per worker and wall-clock time.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "azopg/errors.hpp"
#include "azopg/linalg_control.hpp"
#include "azopg/rollout_sim.hpp"
#include "azopg/zo_estimator.hpp"

namespace azopg {

/// Raised by Master::push when an update leaves the stabilizing set.
class DestabilizedError : public NotStabilizingError {
 public:
  DestabilizedError(const std::string& what, long iteration)
      : NotStabilizingError(what), iteration_(iteration) {}
  long iteration() const noexcept { return iteration_; }

 private:
  long iteration_;
};

/// Upper bound on the staleness of any estimate when every pull-to-push
/// interval lies in [t_lo, t_hi]: floor(t_hi (M - 1) / (t_lo N)) + 1.
inline long delay_bound(double t_lo, double t_hi, int M, int N) {
  if (!(t_lo > 0.0) || !(t_hi >= t_lo) || !std::isfinite(t_hi) || M < 1 ||
      N < 1) {
    throw std::invalid_argument(
        "delay_bound: need 0 < t_lo <= t_hi < inf, M >= 1, N >= 1");
  }
  return static_cast<long>(
             std::floor(t_hi * static_cast<double>(M - 1) /
                        (t_lo * static_cast<double>(N)))) +
         1;
}

enum class DelayLaw { uniform, fixed_per_worker };

/// Duration of one pull-to-push cycle in simulated mode.
struct DelayModel {
  double t_lo = 0.04;
  double t_hi = 0.06;
  std::vector<double> per_worker_extra;  // added to every cycle of worker w
  DelayLaw law = DelayLaw::uniform;

  void validate() const {
    if (!(t_lo > 0.0) || !(t_lo <= t_hi) || !std::isfinite(t_hi)) {
      throw std::invalid_argument("DelayModel: need 0 < t_lo <= t_hi < inf");
    }
    for (double e : per_worker_extra) {
      if (!(e >= 0.0) || !std::isfinite(e)) {
        throw std::invalid_argument("DelayModel: extras must be >= 0");
      }
    }
  }

  double extra(int worker) const {
    return static_cast<std::size_t>(worker) < per_worker_extra.size()
               ? per_worker_extra[static_cast<std::size_t>(worker)]
               : 0.0;
  }

  double max_extra(int workers) const {
    double e = 0.0;
    for (int w = 0; w < workers; ++w) e = std::max(e, extra(w));
    return e;
  }

  /// Interval [t_lo, t_hi + max extra] containing every cycle.
  std::pair<double, double> effective_interval(int workers) const {
    return {t_lo, t_hi + max_extra(workers)};
  }

  /// Slow down the last round(fraction * M) workers by `seconds`.
  static std::vector<double> slow_tail(int workers, double fraction,
                                       double seconds) {
    std::vector<double> extra(static_cast<std::size_t>(workers), 0.0);
    const int slow = static_cast<int>(std::lround(fraction * workers));
    for (int w = workers - slow; w < workers; ++w) {
      extra[static_cast<std::size_t>(w)] = seconds;
    }
    return extra;
  }
};

struct TraceRow {
  long iteration = 0;
  double time_s = 0.0;
  long rollouts_total = 0;
  double rel_error = 0.0;
  double grad_norm = 0.0;
  long max_delay = 0;
};

struct Trace {
  int workers = 1;
  std::vector<TraceRow> rows;
  std::vector<long> delay_histogram;  // count of accepted estimates by delay
  long discarded_rollouts = 0;        // rollouts thrown away by redraws
  long dropped_stale = 0;             // only with a staleness filter
  double t_lo_measured = std::numeric_limits<double>::infinity();
  double t_hi_measured = 0.0;

  long max_delay() const { return rows.empty() ? 0 : rows.back().max_delay; }
};

/// Logging-only view of a policy's quality. Never feeds back into updates.
struct PolicyMetrics {
  double rel_error;
  double grad_norm;
};

using PolicyMonitor = std::function<PolicyMetrics(const Policy&)>;
using TraceSink = std::function<void(const TraceRow&)>;

/// Monitor backed by the exact oracle: (f(K) - f*) / (f(K0) - f*) and
/// ||grad f(K)||_F. Throws NotStabilizingError for non-stabilizing K.
inline PolicyMonitor oracle_monitor(const LinearSystem& sys, double f0,
                                    double f_star) {
  return [&sys, f0, f_star](const Policy& K) {
    const ValueCertificate cert = value_certificate(sys, K);
    const double gap0 = f0 - f_star;
    const double rel = gap0 > 0.0 ? (cert.cost - f_star) / gap0 : 0.0;
    return PolicyMetrics{rel, cert.grad.norm()};
  };
}

struct StopRule {
  double target_rel_error = 1e-3;
  long max_iters = 100000;
};

struct MasterConfig {
  double eta = 2e-3;
  int N = 32;
  std::optional<long> max_staleness;  // off: every estimate is used
};

/// Shared master state. All public members are safe to call concurrently;
/// one mutex serializes pull snapshots and push-and-update.
class Master {
 public:
  struct Snapshot {
    Policy K;
    long j;
  };

  using Clock = std::function<double()>;

  Master(Policy K0, MasterConfig cfg, PolicyMonitor monitor, StopRule stop,
         int workers, TraceSink sink = {}, Clock clock = {})
      : K_(std::move(K0)),
        cfg_(cfg),
        monitor_(std::move(monitor)),
        stop_(stop),
        sink_(std::move(sink)),
        clock_(std::move(clock)) {
    if (!(cfg_.eta > 0.0) || cfg_.N < 1) {
      throw std::invalid_argument("Master: need eta > 0 and N >= 1");
    }
    buffer_.reserve(static_cast<std::size_t>(cfg_.N));
    trace_.workers = workers;
    const PolicyMetrics m = monitor_(K_);
    append_row({0, 0.0, 0, m.rel_error, m.grad_norm, 0});
    if (m.rel_error <= stop_.target_rel_error) finish(Outcome::converged);
    if (stop_.max_iters <= 0) finish(Outcome::timeout);
  }

  Snapshot pull() const {
    std::lock_guard lock(mu_);
    return {K_, j_};
  }

  /// Buffers g; on the N-th buffered estimate applies the update and returns
  /// the new policy. Pushes after the run has finished are ignored.
  std::optional<Policy> push(GradEstimate g) {
    std::lock_guard lock(mu_);
    if (outcome_) return std::nullopt;
    if (clock_) g.pushed_at = clock_();
    if (!g.G.allFinite()) {
      throw std::invalid_argument("Master::push: estimate is not finite");
    }
    if (g.G.rows() != K_.K.rows() || g.G.cols() != K_.K.cols()) {
      throw std::invalid_argument("Master::push: estimate shape differs");
    }
    if (g.pulled_iteration < 0 || g.pulled_iteration > j_) {
      throw std::invalid_argument("Master::push: bad pulled_iteration");
    }
    trace_.discarded_rollouts += g.discarded_rollouts;
    trace_.t_lo_measured = std::min(trace_.t_lo_measured, g.elapsed);
    trace_.t_hi_measured = std::max(trace_.t_hi_measured, g.elapsed);
    last_time_ = std::max(last_time_, g.pushed_at);

    const long delay = j_ - g.pulled_iteration;
    if (cfg_.max_staleness && delay > *cfg_.max_staleness) {
      ++trace_.dropped_stale;
      return std::nullopt;
    }
    max_delay_ = std::max(max_delay_, delay);
    if (trace_.delay_histogram.size() <= static_cast<std::size_t>(delay)) {
      trace_.delay_histogram.resize(static_cast<std::size_t>(delay) + 1, 0);
    }
    ++trace_.delay_histogram[static_cast<std::size_t>(delay)];
    rollouts_ += g.rollout_count;
    buffer_.push_back(std::move(g));
    if (buffer_.size() < static_cast<std::size_t>(cfg_.N)) return std::nullopt;

    const Matrix mean = batch_average(buffer_, cfg_.N);
    buffer_.clear();
    Policy next(K_.K - cfg_.eta * mean);
    PolicyMetrics m{};
    try {
      m = monitor_(next);
    } catch (const NotStabilizingError&) {
      failure_ = "update " + std::to_string(j_ + 1) +
                 " left the stabilizing set";
      finish(Outcome::destabilized);
      throw DestabilizedError(failure_, j_ + 1);
    }
    K_ = next;
    ++j_;
    append_row({j_, last_time_, rollouts_, m.rel_error, m.grad_norm,
                max_delay_});
    if (m.rel_error <= stop_.target_rel_error) {
      finish(Outcome::converged);
    } else if (j_ >= stop_.max_iters) {
      finish(Outcome::timeout);
    }
    return next;
  }

  enum class Outcome { converged, timeout, destabilized };

  bool finished() const {
    std::lock_guard lock(mu_);
    return outcome_.has_value();
  }

  /// Ends the run from outside (e.g. a worker exhausted its redraws).
  void abort(const std::string& why) {
    std::lock_guard lock(mu_);
    if (!outcome_) {
      failure_ = why;
      finish(Outcome::destabilized);
    }
  }

  std::optional<Outcome> outcome() const {
    std::lock_guard lock(mu_);
    return outcome_;
  }

  std::string failure() const {
    std::lock_guard lock(mu_);
    return failure_;
  }

  long iteration() const {
    std::lock_guard lock(mu_);
    return j_;
  }

  std::size_t buffered() const {
    std::lock_guard lock(mu_);
    return buffer_.size();
  }

  Trace trace() const {
    std::lock_guard lock(mu_);
    return trace_;
  }

  Policy policy() const {
    std::lock_guard lock(mu_);
    return K_;
  }

 private:
  void append_row(const TraceRow& row) {
    trace_.rows.push_back(row);
    if (sink_) sink_(row);
  }

  void finish(Outcome o) { outcome_ = o; }

  mutable std::mutex mu_;
  Policy K_;
  long j_ = 0;
  std::vector<GradEstimate> buffer_;
  MasterConfig cfg_;
  PolicyMonitor monitor_;
  StopRule stop_;
  TraceSink sink_;
  Clock clock_;
  Trace trace_;
  long rollouts_ = 0;
  long max_delay_ = 0;
  double last_time_ = 0.0;
  std::optional<Outcome> outcome_;
  std::string failure_;
};

struct EngineConfig {
  double eta = 2e-3;
  int N = 32;
  double radius = 1e-5;
  RolloutConfig rollout;
  int workers = 1;
  InitKind dist = InitKind::gaussian;
  double init_bound = 3.0;  // truncated-gaussian only
  std::optional<long> max_staleness;

  void validate() const {
    if (!(eta > 0.0) || N < 1 || !(radius > 0.0) || workers < 1) {
      throw std::invalid_argument(
          "EngineConfig: need eta > 0, N >= 1, r > 0, workers >= 1");
    }
    rollout.validate();
  }
};

enum class RunStatus { converged, timeout, destabilized };

inline std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::converged:
      return "converged";
    case RunStatus::timeout:
      return "timeout";
    case RunStatus::destabilized:
      return "destabilized";
  }
  return "?";
}

struct RunResult {
  RunStatus status = RunStatus::timeout;
  Trace trace;
  Policy final_policy;
  double f_star = 0.0;
  double f0 = 0.0;
  std::string diagnostic;
  std::vector<std::string> warnings;
};

/// f(K0) and f* for the oracle monitor.
struct Reference {
  double f0;
  double f_star;

  static Reference of(const LinearSystem& sys, const Policy& K0) {
    return {cost(sys, K0), optimal_policy(sys, K0).cost};
  }
};

namespace detail {

inline InitDistribution make_distribution(const EngineConfig& cfg,
                                          Eigen::Index n) {
  return InitDistribution(cfg.dist, n,
                          cfg.dist == InitKind::truncated_gaussian
                              ? std::optional<double>(cfg.init_bound)
                              : std::nullopt);
}

inline RunResult finish_run(const Master& master, const Reference& ref,
                            std::vector<std::string> warnings) {
  RunResult out;
  out.trace = master.trace();
  out.final_policy = master.policy();
  out.f0 = ref.f0;
  out.f_star = ref.f_star;
  out.warnings = std::move(warnings);
  out.diagnostic = master.failure();
  switch (master.outcome().value_or(Master::Outcome::timeout)) {
    case Master::Outcome::converged:
      out.status = RunStatus::converged;
      break;
    case Master::Outcome::timeout:
      out.status = RunStatus::timeout;
      break;
    case Master::Outcome::destabilized:
      out.status = RunStatus::destabilized;
      break;
  }
  return out;
}

inline std::vector<std::string> check_setup(const LinearSystem& sys,
                                            const Policy& K0,
                                            const EngineConfig& cfg) {
  cfg.validate();
  sys.check_policy(K0);
  if (!is_stabilizing(sys, K0)) {
    throw NotStabilizingError("initial policy is not stabilizing");
  }
  std::vector<std::string> warnings;
  if (cfg.workers > cfg.N) {
    warnings.push_back("more workers (" + std::to_string(cfg.workers) +
                       ") than batch size (" + std::to_string(cfg.N) +
                       "); staleness grows with M/N");
  }
  return warnings;
}

}  // namespace detail

/// Deterministic discrete-event execution. Events are processed in
/// (time, worker_id) order; each worker samples from worker_rng(seed, w) and
/// draws its cycle durations from an independent stream, so the sequence of
/// policies does not depend on the delay draws when M = 1.
inline RunResult run_simulated(const LinearSystem& sys, const Policy& K0,
                               const EngineConfig& cfg, const DelayModel& dm,
                               const StopRule& stop, std::uint64_t seed,
                               const Reference& ref, TraceSink sink = {}) {
  auto warnings = detail::check_setup(sys, K0, cfg);
  dm.validate();
  const int M = cfg.workers;

  Master master(K0, {cfg.eta, cfg.N, cfg.max_staleness},
                oracle_monitor(sys, ref.f0, ref.f_star), stop, M,
                std::move(sink));
  const WorkerSampler sampler{&sys, detail::make_distribution(cfg, sys.states()),
                              cfg.rollout, cfg.radius};

  std::vector<Rng> sample_rng;
  std::vector<Rng> delay_rng;
  std::vector<double> fixed_duration;
  std::vector<GradEstimate> pending(static_cast<std::size_t>(M));
  for (int w = 0; w < M; ++w) {
    sample_rng.push_back(worker_rng(seed, w));
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(w), 0xde1a7u};
    delay_rng.emplace_back(seq);
    std::uniform_real_distribution<double> u(dm.t_lo, dm.t_hi);
    fixed_duration.push_back(u(delay_rng.back()));
  }

  auto cycle_time = [&](int w) {
    if (dm.law == DelayLaw::fixed_per_worker) {
      return fixed_duration[static_cast<std::size_t>(w)];
    }
    std::uniform_real_distribution<double> u(dm.t_lo, dm.t_hi);
    return u(delay_rng[static_cast<std::size_t>(w)]);
  };

  using Event = std::pair<double, int>;  // (push time, worker id)
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events;

  auto start_cycle = [&](int w, double now) {
    const Master::Snapshot snap = master.pull();
    GradEstimate est;
    try {
      est = sampler(snap.K, sample_rng[static_cast<std::size_t>(w)]);
    } catch (const DivergenceError& e) {
      master.abort(std::string("worker exhausted redraws: ") + e.what());
      return;
    }
    double duration = 0.0;
    for (int k = 0; k <= est.redraws; ++k) duration += cycle_time(w);
    duration += dm.extra(w);
    est.worker_id = w;
    est.pulled_iteration = snap.j;
    est.elapsed = duration;
    est.pushed_at = now + duration;
    pending[static_cast<std::size_t>(w)] = std::move(est);
    events.emplace(now + duration, w);
  };

  if (!master.finished()) {
    for (int w = 0; w < M; ++w) start_cycle(w, 0.0);
  }
  while (!master.finished() && !events.empty()) {
    const auto [time, w] = events.top();
    events.pop();
    try {
      master.push(std::move(pending[static_cast<std::size_t>(w)]));
    } catch (const DestabilizedError&) {
      break;
    }
    if (!master.finished()) start_cycle(w, time);
  }
  return detail::finish_run(master, ref, std::move(warnings));
}

/// One OS thread per worker; the master is the shared, mutex-guarded state.
/// Trace times are wall-clock seconds since start. `extra` adds a per-worker
/// sleep after each estimate.
inline RunResult run_threaded(const LinearSystem& sys, const Policy& K0,
                              const EngineConfig& cfg, const StopRule& stop,
                              std::uint64_t seed, const Reference& ref,
                              std::vector<double> extra = {},
                              TraceSink sink = {}) {
  auto warnings = detail::check_setup(sys, K0, cfg);
  const int M = cfg.workers;
  using steady = std::chrono::steady_clock;
  const auto t0 = steady::now();
  auto seconds_since_start = [t0] {
    return std::chrono::duration<double>(steady::now() - t0).count();
  };

  Master master(K0, {cfg.eta, cfg.N, cfg.max_staleness},
                oracle_monitor(sys, ref.f0, ref.f_star), stop, M,
                std::move(sink), seconds_since_start);
  const WorkerSampler sampler{&sys, detail::make_distribution(cfg, sys.states()),
                              cfg.rollout, cfg.radius};

  auto work = [&](int w) {
    Rng rng = worker_rng(seed, w);
    const double pause =
        static_cast<std::size_t>(w) < extra.size() ? extra[w] : 0.0;
    while (!master.finished()) {
      const auto start = steady::now();
      const Master::Snapshot snap = master.pull();
      GradEstimate est;
      try {
        est = sampler(snap.K, rng);
      } catch (const DivergenceError& e) {
        master.abort(std::string("worker exhausted redraws: ") + e.what());
        return;
      }
      if (pause > 0.0) {
        std::this_thread::sleep_for(std::chrono::duration<double>(pause));
      }
      est.worker_id = w;
      est.pulled_iteration = snap.j;
      est.elapsed =
          std::chrono::duration<double>(steady::now() - start).count();
      try {
        master.push(std::move(est));
      } catch (const DestabilizedError&) {
        return;
      }
    }
  };

  {
    std::vector<std::jthread> threads;
    threads.reserve(static_cast<std::size_t>(M));
    for (int w = 0; w < M; ++w) threads.emplace_back(work, w);
  }
  return detail::finish_run(master, ref, std::move(warnings));
}

/// Fraction of consecutive trace rows with strictly decreasing rel_error.
inline double descent_fraction(const Trace& trace) {
  if (trace.rows.size() < 2) return 1.0;
  std::size_t down = 0;
  for (std::size_t i = 1; i < trace.rows.size(); ++i) {
    if (trace.rows[i].rel_error < trace.rows[i - 1].rel_error) ++down;
  }
  return static_cast<double>(down) /
         static_cast<double>(trace.rows.size() - 1);
}

}  // namespace azopg
