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
#include <cstring>
#include <random>

#include "azopg/bench.hpp"
#include "azopg/rollout_sim.hpp"
#include "support/oracles.hpp"

namespace azopg {
namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

TEST(SampleInitialState, RademacherEntriesAreSigns) {
  Rng rng(1);
  const auto dist = InitDistribution::rademacher(4);
  for (int i = 0; i < 100; ++i) {
    const Vector z = sample_initial_state(dist, rng);
    for (Eigen::Index k = 0; k < 4; ++k) {
      EXPECT_TRUE(z[k] == 1.0 || z[k] == -1.0);
    }
    EXPECT_DOUBLE_EQ(z.norm(), 2.0);
  }
}

TEST(SampleInitialState, GaussianMomentsMatch) {
  Rng rng(2);
  const auto dist = InitDistribution::gaussian(8);
  constexpr int kSamples = 100000;
  Vector sum = Vector::Zero(8);
  Vector sq = Vector::Zero(8);
  for (int i = 0; i < kSamples; ++i) {
    const Vector z = sample_initial_state(dist, rng);
    sum += z;
    sq += z.cwiseAbs2();
  }
  const Vector mean = sum / kSamples;
  const Vector var = sq / kSamples - mean.cwiseAbs2();
  for (Eigen::Index k = 0; k < 8; ++k) {
    EXPECT_NEAR(mean[k], 0.0, 0.02);
    EXPECT_NEAR(var[k], 1.0, 0.05);
  }
}

TEST(SampleInitialState, TruncatedGaussianIsBoundedWithUnitVariance) {
  Rng rng(3);
  const auto dist = InitDistribution::truncated_gaussian(6, 3.0);
  ASSERT_TRUE(dist.bound().has_value());
  double sq = 0.0;
  double sum = 0.0;
  constexpr int kSamples = 50000;
  for (int i = 0; i < kSamples; ++i) {
    const Vector z = sample_initial_state(dist, rng);
    EXPECT_LE(z.cwiseAbs().maxCoeff(), 3.0);
    sum += z.sum();
    sq += z.squaredNorm();
  }
  EXPECT_NEAR(sum / (6.0 * kSamples), 0.0, 0.02);
  EXPECT_NEAR(sq / (6.0 * kSamples), 1.0, 0.02);
  // Unit variance is impossible with support narrower than sqrt(3).
  EXPECT_THROW(InitDistribution::truncated_gaussian(2, 1.7),
               std::invalid_argument);
  EXPECT_NO_THROW(InitDistribution::truncated_gaussian(2, 1.8));
}

TEST(SampleInitialState, SameSeedSameStream) {
  Rng a(99);
  Rng b(99);
  const auto dist = InitDistribution::gaussian(5);
  for (int i = 0; i < 50; ++i) {
    const Vector za = sample_initial_state(dist, a);
    const Vector zb = sample_initial_state(dist, b);
    ASSERT_EQ(0, std::memcmp(za.data(), zb.data(), 5 * sizeof(double)));
  }
  const Perturbation ua = sample_perturbation(3, 4, a);
  const Perturbation ub = sample_perturbation(3, 4, b);
  EXPECT_EQ(0, std::memcmp(ua.U.data(), ub.U.data(), 12 * sizeof(double)));
}

TEST(SampleInitialState, ParsesKindNames) {
  EXPECT_EQ(parse_init_kind("gaussian"), InitKind::gaussian);
  EXPECT_EQ(parse_init_kind("rademacher"), InitKind::rademacher);
  EXPECT_EQ(parse_init_kind("truncated-gaussian"),
            InitKind::truncated_gaussian);
  EXPECT_THROW(parse_init_kind("uniform"), std::invalid_argument);
}

TEST(SamplePerturbation, ZeroSphereIsPlusMinusOne) {
  Rng rng(4);
  int pos = 0;
  for (int i = 0; i < 200; ++i) {
    const double u = sample_perturbation(1, 1, rng).U(0, 0);
    EXPECT_DOUBLE_EQ(std::abs(u), 1.0);
    pos += u > 0;
  }
  EXPECT_GT(pos, 60);
  EXPECT_LT(pos, 140);
}

TEST(SamplePerturbation, NormIsSqrtMn) {
  Rng rng(5);
  for (int m = 1; m <= 4; ++m) {
    for (int n = 1; n <= 8; ++n) {
      const Perturbation p = sample_perturbation(m, n, rng);
      ASSERT_EQ(p.U.rows(), m);
      ASSERT_EQ(p.U.cols(), n);
      EXPECT_NEAR(p.U.norm(), std::sqrt(double(m * n)), 1e-12);
    }
  }
  EXPECT_THROW(sample_perturbation(0, 3, rng), std::invalid_argument);
}

TEST(SamplePerturbation, SecondMomentIsIdentity) {
  Rng rng(6);
  constexpr int kSamples = 100000;
  Matrix second = Matrix::Zero(4, 4);
  for (int i = 0; i < kSamples; ++i) {
    const Perturbation p = sample_perturbation(2, 2, rng);
    const Eigen::Map<const Vector> v(p.U.data(), 4);
    second += v * v.transpose();
  }
  second /= kSamples;
  EXPECT_LE((second - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 0.05);
}

TEST(RolloutConfig, ValidatesAndRoundsStepsUpToEven) {
  RolloutConfig cfg;
  cfg.tau = 1.0;
  cfg.dt = 0.3;
  EXPECT_EQ(cfg.steps(), 4);
  cfg.dt = 0.25;
  EXPECT_EQ(cfg.steps(), 4);
  cfg.dt = 0.2;
  EXPECT_EQ(cfg.steps(), 6);
  cfg.dt = 1.0;
  EXPECT_EQ(cfg.steps(), 2);
  cfg.dt = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.dt = 2.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.dt = 0.1;
  cfg.divergence_cap = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(RolloutCost, ScalarMatchesClosedForm) {
  const LinearSystem sys = build_scalar_system();
  RolloutConfig cfg;
  cfg.tau = 100.0;
  cfg.dt = 1e-3;
  const double v = rollout_cost(sys, Policy(scalar(2)), Vector::Ones(1), cfg);
  EXPECT_NEAR(v, 1.25, 1e-6);
}

TEST(RolloutCost, ZeroInitialStateCostsNothing) {
  const LinearSystem sys = build_mass_spring_damper(4);
  EXPECT_EQ(rollout_cost(sys, Policy::zero(4, 8), Vector::Zero(8), {}), 0.0);
}

TEST(RolloutCost, UnstableLoopDivergesBeforeHorizon) {
  const LinearSystem sys(scalar(1), scalar(1), scalar(1), scalar(1));
  RolloutConfig cfg;
  cfg.tau = 100.0;
  cfg.dt = 1e-2;
  cfg.divergence_cap = 1e6;
  try {
    rollout_cost(sys, Policy(scalar(0)), Vector::Ones(1), cfg);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    // e^t crosses 1e6 at t = ln(1e6).
    EXPECT_NEAR(e.blowup_time(), std::log(1e6), 0.02);
    EXPECT_LT(e.blowup_time(), 100.0);
  }
}

TEST(RolloutCost, AgreesWithExactTruncatedCost) {
  std::mt19937_64 rng(8);
  RolloutConfig cfg;
  cfg.tau = 100.0;
  cfg.dt = 1e-3;
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 1 + trial % 8;
    const Eigen::Index m = 1 + trial % 2 % n;
    const LinearSystem sys = testing::random_system(n, m, rng);
    const Policy K = testing::random_stabilizing(sys, 0.3, rng);
    const Vector zeta = testing::gaussian_matrix(n, 1, rng);
    const double exact = truncated_cost_exact(sys, K, zeta, cfg.tau);
    const double sim = rollout_cost(sys, K, zeta, cfg);
    EXPECT_LE(std::abs(sim - exact) / (1.0 + exact), 1e-6)
        << "trial " << trial;
  }
}

TEST(RolloutCost, FourthOrderConvergenceInStepSize) {
  const LinearSystem sys = build_mass_spring_damper(4);
  const Policy K = Policy::zero(4, 8);
  const Vector zeta = Vector::LinSpaced(8, -1.0, 1.0);
  const double exact = truncated_cost_exact(sys, K, zeta, 10.0);
  RolloutConfig coarse{10.0, 0.2, 1e6};
  RolloutConfig fine{10.0, 0.1, 1e6};
  const double e1 = std::abs(rollout_cost(sys, K, zeta, coarse) - exact);
  const double e2 = std::abs(rollout_cost(sys, K, zeta, fine) - exact);
  EXPECT_GT(e1 / e2, 12.0);
  EXPECT_LT(e1 / e2, 20.0);
}

TEST(RolloutCost, DimensionChecks) {
  const LinearSystem sys = build_mass_spring_damper(2);
  EXPECT_THROW(rollout_cost(sys, Policy::zero(2, 4), Vector::Zero(3), {}),
               std::invalid_argument);
  EXPECT_THROW(rollout_cost(sys, Policy::zero(4, 2), Vector::Zero(4), {}),
               std::invalid_argument);
}

}  // namespace
}  // namespace azopg
