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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "azopg/bench.hpp"
#include "azopg/zo_estimator.hpp"
#include "support/oracles.hpp"

namespace azopg {
namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

RolloutConfig horizon(double tau, double dt) { return {tau, dt, 1e6}; }

GradEstimate wrap(Matrix G) {
  GradEstimate g;
  g.G = std::move(G);
  return g;
}

TEST(TwoPointEstimate, ScalarNearExactGradient) {
  const LinearSystem sys = build_scalar_system();
  const Matrix G =
      two_point_estimate(sys, Policy(scalar(2)), Vector::Ones(1),
                         {scalar(1)}, 1e-4, horizon(100.0, 1e-3));
  EXPECT_NEAR(G(0, 0), testing::scalar_grad(2.0), 1e-2);
}

TEST(TwoPointEstimate, SignOfDirectionCancels) {
  const LinearSystem sys = build_mass_spring_damper(2);
  Rng rng(1);
  const Perturbation U = sample_perturbation(2, 4, rng);
  const Vector zeta = sample_initial_state(InitDistribution::gaussian(4), rng);
  const Policy K = Policy::zero(2, 4);
  const Matrix a = two_point_estimate(sys, K, zeta, U, 1e-3, {});
  const Matrix b = two_point_estimate(sys, K, zeta, {-U.U}, 1e-3, {});
  EXPECT_TRUE(a == b);
}

TEST(TwoPointEstimate, Errors) {
  const LinearSystem sys = build_scalar_system();
  EXPECT_THROW(two_point_estimate(sys, Policy(scalar(2)), Vector::Ones(1),
                                  {scalar(1)}, 0.0, {}),
               std::invalid_argument);
  EXPECT_THROW(two_point_estimate(sys, Policy(scalar(2)), Vector::Ones(1),
                                  {Matrix::Ones(1, 2)}, 1e-3, {}),
               std::invalid_argument);
  // K - rU = -0.5 is destabilizing for the integrator plant.
  EXPECT_THROW(two_point_estimate(sys, Policy(scalar(0.5)), Vector::Ones(1),
                                  {scalar(1)}, 1.0, horizon(100.0, 1e-2)),
               DivergenceError);
}

TEST(TwoPointEstimate, MeanOverGaussianStatesApproachesGradient) {
  // Each scalar estimate is zeta^2 times a constant, so the Monte Carlo
  // relative standard error is sqrt(2 / samples) = 1% here.
  const LinearSystem sys = build_scalar_system();
  const auto dist = InitDistribution::gaussian(1);
  Rng rng(21);
  constexpr int kSamples = 20000;
  double sum = 0.0;
  for (int i = 0; i < kSamples; ++i) {
    const Perturbation U = sample_perturbation(1, 1, rng);
    const Vector zeta = sample_initial_state(dist, rng);
    sum += two_point_estimate(sys, Policy(scalar(2)), zeta, U, 1e-4,
                              horizon(20.0, 1e-2))(0, 0);
  }
  EXPECT_NEAR(sum / kSamples, 0.375, 0.04 * 0.375);
}

TEST(TwoPointEstimate, SmoothingBiasShrinksWithRadius) {
  // For the scalar plant E_zeta,U[estimate] = (f(K + r) - f(K - r)) / (2r)
  // exactly (U = +-1, E[zeta^2] = 1), which the zeta = 1, U = 1 estimate
  // computes. Bias is f'''(K) r^2 / 6 + O(r^4) with f''' = -3 / K^4.
  const LinearSystem sys = build_scalar_system();
  double prev = std::numeric_limits<double>::infinity();
  for (double r : {1e-2, 1e-3, 1e-4}) {
    const double est =
        two_point_estimate(sys, Policy(scalar(2)), Vector::Ones(1),
                           {scalar(1)}, r, horizon(100.0, 1e-3))(0, 0);
    const double bias = std::abs(est - testing::scalar_grad(2.0));
    EXPECT_LT(bias, prev) << "r = " << r;
    prev = bias;
  }
  const double at_coarse =
      two_point_estimate(sys, Policy(scalar(2)), Vector::Ones(1), {scalar(1)},
                         1e-2, horizon(100.0, 1e-3))(0, 0);
  EXPECT_NEAR(at_coarse - 0.375, -3.0 / 16.0 * 1e-4 / 6.0, 1e-8);
}

TEST(BatchAverage, Basics) {
  const Matrix G = (Matrix(2, 2) << 1, -2, 3.5, 0).finished();
  std::vector<GradEstimate> one{wrap(G)};
  EXPECT_TRUE(batch_average(one, 1) == G);
  std::vector<GradEstimate> pair{wrap(G), wrap(-G)};
  EXPECT_TRUE(batch_average(pair, 2).isZero(0.0));
  EXPECT_THROW(batch_average(pair, 3), std::invalid_argument);
  EXPECT_THROW(batch_average(pair, 1), std::invalid_argument);
  std::vector<GradEstimate> ragged{wrap(G), wrap(Matrix::Zero(1, 2))};
  EXPECT_THROW(batch_average(ragged, 2), std::invalid_argument);
}

TEST(BatchAverage, VarianceScalesInverselyWithBatchSize) {
  const LinearSystem sys = build_scalar_system();
  const WorkerSampler sampler{&sys, InitDistribution::gaussian(1),
                              horizon(20.0, 1e-2), 1e-4};
  Rng rng(33);
  constexpr int kTrials = 1500;
  std::vector<double> scaled;
  for (int N : {1, 4, 16}) {
    double sum = 0.0;
    double sq = 0.0;
    for (int t = 0; t < kTrials; ++t) {
      std::vector<GradEstimate> batch;
      for (int i = 0; i < N; ++i) {
        batch.push_back(sampler(Policy(scalar(2)), rng));
      }
      const double v = batch_average(batch, N)(0, 0);
      sum += v;
      sq += v * v;
    }
    const double mean = sum / kTrials;
    const double var = sq / kTrials - mean * mean;
    scaled.push_back(var * N);
  }
  // Var(zeta^2) = 2, so N * Var(batch mean) = 2 * 0.375^2 for every N.
  for (double s : scaled) EXPECT_NEAR(s, 2.0 * 0.375 * 0.375, 0.15 * 0.28125);
}

TEST(BatchAverage, AlignsWithExactGradientForLargeBatches) {
  // Per-estimate noise on the 32-parameter benchmark is ~(mn - 1) times the
  // squared gradient norm, so the cosine of a batch mean grows like
  // 1 / sqrt(1 + c / N). It clears 0.9 once N is in the hundreds.
  const LinearSystem sys = build_mass_spring_damper(4);
  const Policy K = Policy::zero(4, 8);
  const Matrix exact = value_certificate(sys, K).grad;
  const WorkerSampler sampler{&sys, InitDistribution::gaussian(8),
                              horizon(100.0, 1e-2), 1e-5};
  Rng rng(44);
  auto cosine = [&](int N) {
    std::vector<GradEstimate> batch;
    for (int i = 0; i < N; ++i) batch.push_back(sampler(K, rng));
    const Matrix mean = batch_average(batch, N);
    return (mean.array() * exact.array()).sum() / mean.norm() / exact.norm();
  };
  const double small = cosine(32);
  const double large = cosine(1024);
  RecordProperty("cosine_N32", std::to_string(small));
  RecordProperty("cosine_N1024", std::to_string(large));
  EXPECT_GT(small, 0.0);
  EXPECT_GE(large, 0.9);
}

TEST(WorkerSampler, RedrawsDivergentSamples) {
  // Single mass, K = 0, radius 2: a fraction of directions destabilize.
  const LinearSystem sys = build_mass_spring_damper(1);
  const WorkerSampler sampler{&sys, InitDistribution::gaussian(2),
                              horizon(100.0, 1e-2), 2.0};
  Rng rng(5);
  int redraws = 0;
  int discarded = 0;
  for (int i = 0; i < 50; ++i) {
    const GradEstimate g = sampler(Policy::zero(1, 2), rng);
    EXPECT_TRUE(g.G.allFinite());
    EXPECT_EQ(g.rollout_count, 2);
    redraws += g.redraws;
    discarded += g.discarded_rollouts;
  }
  EXPECT_GT(redraws, 0);
  EXPECT_GE(discarded, redraws);
  EXPECT_LE(discarded, 2 * redraws);
}

}  // namespace
}  // namespace azopg
