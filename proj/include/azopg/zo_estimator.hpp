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

#pragma once

#include <span>
#include <string>

#include "azopg/linalg_control.hpp"
#include "azopg/rollout_sim.hpp"

namespace azopg {

/// One two-point estimate as pushed by a worker.
struct GradEstimate {
  Matrix G;                   // (f(K + rU) - f(K - rU)) / (2r) * U
  int worker_id = 0;
  long pulled_iteration = 0;  // master iteration of the K it was computed at
  double pushed_at = 0.0;     // seconds, simulated or wall clock
  double elapsed = 0.0;       // pull-to-push interval, seconds
  int rollout_count = 2;
  int redraws = 0;            // (zeta, U) draws discarded after divergence
  int discarded_rollouts = 0;
};

/// (f_zeta(K + rU) - f_zeta(K - rU)) / (2r) * U from two truncated rollouts.
/// A DivergenceError from either rollout propagates to the caller.
inline Matrix two_point_estimate(const LinearSystem& sys, const Policy& policy,
                                 const Vector& zeta, const Perturbation& dir,
                                 double radius, const RolloutConfig& cfg) {
  if (!(radius > 0.0)) {
    throw std::invalid_argument("two_point_estimate: radius must be > 0");
  }
  sys.check_policy(policy);
  if (dir.U.rows() != policy.K.rows() || dir.U.cols() != policy.K.cols()) {
    throw std::invalid_argument("two_point_estimate: U shape differs from K");
  }
  const Policy plus(policy.K + radius * dir.U);
  const Policy minus(policy.K - radius * dir.U);
  const double f_plus = rollout_cost(sys, plus, zeta, cfg);
  const double f_minus = rollout_cost(sys, minus, zeta, cfg);
  return (f_plus - f_minus) / (2.0 * radius) * dir.U;
}

/// Entrywise mean of exactly N estimates.
inline Matrix batch_average(std::span<const GradEstimate> estimates, int N) {
  if (N < 1 || estimates.size() != static_cast<std::size_t>(N)) {
    throw std::invalid_argument("batch_average: expected " +
                                std::to_string(N) + " estimates, got " +
                                std::to_string(estimates.size()));
  }
  Matrix sum = estimates.front().G;
  for (std::size_t i = 1; i < estimates.size(); ++i) {
    if (estimates[i].G.rows() != sum.rows() ||
        estimates[i].G.cols() != sum.cols()) {
      throw std::invalid_argument("batch_average: estimate shapes differ");
    }
    sum += estimates[i].G;
  }
  return sum / static_cast<double>(N);
}

/// What a worker does once per pull: draw U then zeta, run both rollouts, and
/// redraw if either perturbed policy diverges. Redrawing keeps the batch mean
/// unbiased where zero-filling would not.
struct WorkerSampler {
  const LinearSystem* sys;
  InitDistribution dist;
  RolloutConfig rollout;
  double radius;
  int max_redraws = 1000;

  GradEstimate operator()(const Policy& policy, Rng& rng) const {
    GradEstimate est;
    for (int attempt = 0;; ++attempt) {
      const Perturbation dir =
          sample_perturbation(policy.inputs(), policy.states(), rng);
      const Vector zeta = sample_initial_state(dist, rng);
      int ran = 0;
      try {
        const Policy plus(policy.K + radius * dir.U);
        const Policy minus(policy.K - radius * dir.U);
        ++ran;
        const double f_plus = rollout_cost(*sys, plus, zeta, rollout);
        ++ran;
        const double f_minus = rollout_cost(*sys, minus, zeta, rollout);
        est.G = (f_plus - f_minus) / (2.0 * radius) * dir.U;
        est.redraws = attempt;
        return est;
      } catch (const DivergenceError&) {
        est.discarded_rollouts += ran;
        if (attempt + 1 >= max_redraws) throw;
      }
    }
  }
};

}  // namespace azopg
