// Copyright 2026 The InclusionCert Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "inclusioncert/examples.h"

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

namespace inclusioncert {
namespace {

using C = ExampleConstants;

TEST(ExamplesTest, ConstantsTable) {
  EXPECT_EQ(C::kMass, 60000.0);
  EXPECT_EQ(C::kGravity, 9.8);
  EXPECT_EQ(C::kThrustMax, 160000.0);
  EXPECT_EQ(C::kIdleFraction, 0.2);
  EXPECT_EQ(C::kLiftScale, 68.6);
  EXPECT_EQ(C::kLiftBias, 1.25);
  EXPECT_EQ(C::kLiftSlope, 4.2);
  EXPECT_EQ(C::kDragBias, 2.7);
  EXPECT_EQ(C::kDragScale, 3.08);
  EXPECT_EQ(C::kWingLiftFactor, 0.2);
  EXPECT_EQ(C::kSurgeFraction, 0.8);
  EXPECT_EQ(C::kFailureTime, 0.5);
  EXPECT_EQ(C::kAircraftSamples, 25);
  EXPECT_EQ(C::kExample1Samples, 20);
  // 0.5 x^2 - 0.05 x^3 at x = 1.
  EXPECT_DOUBLE_EQ(C::kExample1Quadratic + C::kExample1Cubic, 0.45);
}

TEST(ExamplesTest, Example1DefaultTimes) {
  const auto spec = default_example("example1");
  const auto t = sample_times(spec);
  ASSERT_EQ(t.size(), 20u);
  for (int k = 0; k < 20; ++k) EXPECT_NEAR(t[k], 1.7 * (k + 1) / 20.0, 1e-14);
}

// Independent fixed-step RK4 on a much finer grid.
double rk4_example1(double t_end, double x0, double amplitude = 0.0) {
  auto f = [&](double t, double x) { return 0.5 * x * x - 0.05 * x * x * x + amplitude * std::sin(t); };
  const int n = 200000;
  const double h = t_end / n;
  double x = x0;
  for (int k = 0; k < n; ++k) {
    const double t = k * h;
    const double k1 = f(t, x);
    const double k2 = f(t + h / 2, x + h / 2 * k1);
    const double k3 = f(t + h / 2, x + h / 2 * k2);
    const double k4 = f(t + h, x + h * k3);
    x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return x;
}

TEST(ExamplesTest, Example1MatchesRk4) {
  const auto d = generate_example(default_example("example1"));
  EXPECT_NEAR(d.states(19, 0), rk4_example1(1.7, 1.0), 1e-8);
  EXPECT_NEAR(d.states(19, 0), 3.3303, 1e-4);
  EXPECT_EQ(d.inputs.cols(), 0);
}

TEST(ExamplesTest, Example1UnsafeTime) {
  // First time x reaches 9, by bisection on the dense integrator.
  double lo = 2.0;
  double hi = 3.0;
  const OdeRhs rhs = [](const std::vector<double>& x, std::vector<double>& dx, double) {
    dx[0] = 0.5 * x[0] * x[0] - 0.05 * x[0] * x[0] * x[0];
  };
  for (int i = 0; i < 50; ++i) {
    const double mid = 0.5 * (lo + hi);
    const auto xs = integrate_dense(rhs, {1.0}, 0.0, {mid});
    (xs[0][0] >= 9.0 ? hi : lo) = mid;
  }
  EXPECT_NEAR(lo, 2.66, 0.01);
  EXPECT_NEAR(lo, 2.65667, 1e-4);
}

TEST(ExamplesTest, SynthesisDataHasInput) {
  const auto d = generate_example(default_example("example1_synthesis"));
  ASSERT_EQ(d.inputs.cols(), 1);
  EXPECT_EQ(d.input_names.at(0), "u");
  EXPECT_NEAR(d.times.back(), 2.0, 1e-15);
  EXPECT_DOUBLE_EQ(d.inputs(19, 0), 10 * std::sin(2.0));
  EXPECT_NEAR(d.states(19, 0), rk4_example1(2.0, 1.0, 10.0), 1e-7);
}

TEST(ExamplesTest, PendulumStaysOnCircle) {
  const auto d = generate_example(default_example("pendulum"));
  for (Eigen::Index k = 0; k < d.states.rows(); ++k) {
    const double r2 = d.states(k, 0) * d.states(k, 0) + d.states(k, 1) * d.states(k, 1);
    EXPECT_NEAR(r2, 1.0, 1e-9);
  }
}

TEST(ExamplesTest, AircraftTrimBalancesLift) {
  const double a = aircraft_trim_alpha();
  const double gamma = -3.0 * std::numbers::pi / 180.0;
  const Eigen::Vector3d f = aircraft_rhs({70.0, gamma, 30.0}, a, 0.0, 1.0);
  // Thrust-free: only weight and lift in the gamma equation.
  EXPECT_NEAR(f(1), 0.0, 1e-12);
  EXPECT_NEAR(f(2), 70.0 * std::sin(gamma), 1e-12);
}

TEST(ExamplesTest, WingFailureLosesAltitude) {
  const auto d = generate_example(default_example("aircraft_wing_failure"));
  ASSERT_EQ(d.states.rows(), 25);
  ASSERT_EQ(d.states.cols(), 3);
  EXPECT_EQ(d.inputs.cols(), 0);
  EXPECT_NEAR(d.times.front(), 0.02, 1e-15);
  EXPECT_NEAR(d.times.back(), 2.0, 1e-15);
  EXPECT_LT(d.states(24, 1), d.states(0, 1));
  EXPECT_LT(d.states(24, 2), 30.0);
}

TEST(ExamplesTest, EngineFailureExcitesAlpha) {
  const auto d = generate_example(default_example("aircraft_engine_failure"));
  ASSERT_EQ(d.inputs.cols(), 1);
  const double trim = aircraft_trim_alpha();
  EXPECT_NEAR(d.inputs(3, 0), trim + 0.02 * std::sin(4.0 * d.times[3]), 1e-15);
}

TEST(ExamplesTest, RejectsBadSpecs) {
  ExampleSpec s;
  s.generator = "nope";
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = default_example("example1");
  s.input = "sin:1";
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = default_example("aircraft_wing_failure");
  s.input = "zero";
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = default_example("example1");
  s.num_samples = 2;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  EXPECT_THROW(default_example("x"), std::invalid_argument);
}

}  // namespace
}  // namespace inclusioncert
