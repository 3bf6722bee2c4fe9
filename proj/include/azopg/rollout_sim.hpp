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

// Closed-loop rollouts and the random inputs a worker draws for them.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "azopg/errors.hpp"
#include "azopg/linalg_control.hpp"

namespace azopg {

/// Random stream owned by one worker (or one test).
using Rng = std::mt19937_64;

/// Per-worker stream: master_seed XOR worker_id.
inline Rng worker_rng(std::uint64_t master_seed, int worker_id) {
  return Rng(master_seed ^ static_cast<std::uint64_t>(worker_id));
}

struct RolloutConfig {
  double tau = 100.0;
  double dt = 1e-2;
  double divergence_cap = 1e6;

  void validate() const {
    if (!(dt > 0.0) || !(tau > 0.0) || !(dt <= tau) || !std::isfinite(tau)) {
      throw std::invalid_argument(
          "RolloutConfig: need 0 < dt <= tau < inf");
    }
    if (!(divergence_cap > 0.0)) {
      throw std::invalid_argument("RolloutConfig: divergence_cap must be > 0");
    }
  }

  /// Grid size: tau/dt rounded up to an even count (composite Simpson).
  long steps() const {
    long n = static_cast<long>(std::ceil(tau / dt - 1e-9));
    if (n < 2) n = 2;
    if (n % 2 != 0) ++n;
    return n;
  }
};

enum class InitKind { gaussian, rademacher, truncated_gaussian };

inline std::string_view to_string(InitKind kind) {
  switch (kind) {
    case InitKind::gaussian:
      return "gaussian";
    case InitKind::rademacher:
      return "rademacher";
    case InitKind::truncated_gaussian:
      return "truncated-gaussian";
  }
  return "?";
}

inline InitKind parse_init_kind(std::string_view name) {
  if (name == "gaussian") return InitKind::gaussian;
  if (name == "rademacher") return InitKind::rademacher;
  if (name == "truncated-gaussian") return InitKind::truncated_gaussian;
  throw std::invalid_argument("unknown initial-state distribution '" +
                              std::string(name) + "'");
}

/// Law of the initial state zeta: i.i.d. zero-mean, unit-variance entries.
///
/// The truncated Gaussian is a standard normal cut at +-c and rescaled to
/// unit variance, with c chosen so every entry lies in [-bound, bound].
/// Unit variance with support bound delta needs delta > sqrt(3).
class InitDistribution {
 public:
  static InitDistribution gaussian(Eigen::Index dim) {
    return InitDistribution(InitKind::gaussian, dim, std::nullopt);
  }
  static InitDistribution rademacher(Eigen::Index dim) {
    return InitDistribution(InitKind::rademacher, dim, std::nullopt);
  }
  static InitDistribution truncated_gaussian(Eigen::Index dim, double bound) {
    return InitDistribution(InitKind::truncated_gaussian, dim, bound);
  }

  InitDistribution(InitKind kind, Eigen::Index dim,
                   std::optional<double> bound)
      : kind_(kind), dim_(dim), bound_(bound) {
    if (dim < 1) throw std::invalid_argument("InitDistribution: dim < 1");
    if (kind == InitKind::truncated_gaussian) {
      if (!bound || !(*bound > std::sqrt(3.0)) || !std::isfinite(*bound)) {
        throw std::invalid_argument(
            "truncated-gaussian needs a finite bound > sqrt(3)");
      }
      cut_ = solve_cut(*bound);
      scale_ = 1.0 / std::sqrt(truncated_variance(cut_));
    } else if (kind == InitKind::rademacher) {
      bound_ = 1.0;
    }
  }

  InitKind kind() const { return kind_; }
  Eigen::Index dim() const { return dim_; }
  /// Entrywise support bound, if the law has bounded support.
  std::optional<double> bound() const { return bound_; }

  Vector sample(Rng& rng) const {
    Vector z(dim_);
    switch (kind_) {
      case InitKind::gaussian: {
        std::normal_distribution<double> normal;
        for (Eigen::Index i = 0; i < dim_; ++i) z[i] = normal(rng);
        break;
      }
      case InitKind::rademacher: {
        std::bernoulli_distribution coin(0.5);
        for (Eigen::Index i = 0; i < dim_; ++i) z[i] = coin(rng) ? 1.0 : -1.0;
        break;
      }
      case InitKind::truncated_gaussian: {
        std::normal_distribution<double> normal;
        for (Eigen::Index i = 0; i < dim_; ++i) {
          double v;
          do {
            v = normal(rng);
          } while (std::abs(v) > cut_);
          z[i] = std::clamp(v * scale_, -*bound_, *bound_);
        }
        break;
      }
    }
    return z;
  }

 private:
  // Variance of a standard normal truncated to [-c, c].
  static double truncated_variance(double c) {
    const double pdf = std::exp(-0.5 * c * c) / std::sqrt(2.0 * std::numbers::pi);
    const double mass = std::erf(c / std::sqrt(2.0));
    return 1.0 - 2.0 * c * pdf / mass;
  }

  // c / sqrt(var(c)) increases from sqrt(3) to infinity; invert by bisection.
  static double solve_cut(double bound) {
    double lo = 1e-6;
    double hi = bound;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (mid / std::sqrt(truncated_variance(mid)) < bound) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return lo;
  }

  InitKind kind_;
  Eigen::Index dim_;
  std::optional<double> bound_;
  double cut_ = 0.0;
  double scale_ = 1.0;
};

inline Vector sample_initial_state(const InitDistribution& dist, Rng& rng) {
  return dist.sample(rng);
}

/// Search direction U with vec(U) uniform on the sphere of radius sqrt(mn).
struct Perturbation {
  Matrix U;
};

inline Perturbation sample_perturbation(Eigen::Index m, Eigen::Index n,
                                        Rng& rng) {
  if (m < 1 || n < 1) {
    throw std::invalid_argument("sample_perturbation: m, n must be >= 1");
  }
  std::normal_distribution<double> normal;
  Matrix U(m, n);
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < U.size(); ++i) U.data()[i] = normal(rng);
    norm = U.norm();
  } while (norm == 0.0);
  U *= std::sqrt(static_cast<double>(m * n)) / norm;
  return {std::move(U)};
}

/// Truncated quadratic cost of one closed-loop trajectory from x(0) = zeta.
///
/// Classical RK4 on the grid of cfg.steps() points; for the linear field
/// xdot = F x one RK4 step is exactly x <- (I + hF + (hF)^2/2 + (hF)^3/6 +
/// (hF)^4/24) x, so that matrix is formed once per rollout. The running cost
/// x^T (Q + K^T R K) x is integrated with composite Simpson weights on the
/// same grid. K need not be stabilizing; leaving the divergence cap throws.
inline double rollout_cost(const LinearSystem& sys, const Policy& policy,
                           const Vector& zeta, const RolloutConfig& cfg) {
  cfg.validate();
  if (zeta.size() != sys.states()) {
    throw std::invalid_argument("rollout_cost: zeta has wrong size");
  }
  const Matrix F = sys.closed_loop(policy);
  const Eigen::Index n = sys.states();
  const long steps = cfg.steps();
  const double h = cfg.tau / static_cast<double>(steps);

  const Matrix hF = h * F;
  const Matrix hF2 = hF * hF;
  const Matrix step = Matrix::Identity(n, n) + hF + hF2 / 2.0 +
                      hF2 * hF / 6.0 + hF2 * hF2 / 24.0;
  const Matrix W = sys.Q() + policy.K.transpose() * sys.R() * policy.K;
  const double cap2 = cfg.divergence_cap * cfg.divergence_cap;

  Vector x = zeta;
  Vector next(n);
  Vector Wx(n);
  Wx.noalias() = W * x;
  double odd = 0.0;
  double even = 0.0;
  const double first = x.dot(Wx);
  double last = 0.0;
  for (long k = 1; k <= steps; ++k) {
    next.noalias() = step * x;
    x.swap(next);
    const double r2 = x.squaredNorm();
    if (!(r2 <= cap2)) {
      const double t = h * static_cast<double>(k);
      throw DivergenceError(
          "rollout diverged at t = " + std::to_string(t), t);
    }
    Wx.noalias() = W * x;
    const double c = x.dot(Wx);
    if (k == steps) {
      last = c;
    } else if (k % 2 == 1) {
      odd += c;
    } else {
      even += c;
    }
  }
  return h / 3.0 * (first + 4.0 * odd + 2.0 * even + last);
}

}  // namespace azopg
