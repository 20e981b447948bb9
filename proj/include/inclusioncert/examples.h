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

#ifndef INCLUSIONCERT_EXAMPLES_H_
#define INCLUSIONCERT_EXAMPLES_H_

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "inclusioncert/spline.h"

namespace inclusioncert {

/// Case-study parameters. Values marked "chosen" only fix a reproducible
/// setup.
struct ExampleConstants {
  // Example I: xdot = 0.5 x^2 - 0.05 x^3 + u, x(0) = 1.
  static constexpr double kExample1X0 = 1.0;
  static constexpr double kExample1Quadratic = 0.5;
  static constexpr double kExample1Cubic = -0.05;
  static constexpr int kExample1Samples = 20;
  static constexpr double kExample1End = 1.7;
  static constexpr double kExample1SynthesisEnd = 2.0;
  static constexpr double kExample1InputAmplitude = 10.0;

  // Aircraft (DC9-30 landing configuration).
  static constexpr double kMass = 60000.0;
  static constexpr double kGravity = 9.8;
  static constexpr double kThrustMax = 160000.0;
  static constexpr double kIdleFraction = 0.2;
  static constexpr double kLiftScale = 68.6;
  static constexpr double kLiftBias = 1.25;
  static constexpr double kLiftSlope = 4.2;
  static constexpr double kDragBias = 2.7;
  static constexpr double kDragScale = 3.08;
  static constexpr double kWingLiftFactor = 0.2;
  static constexpr double kSurgeFraction = 0.8;
  static constexpr double kFailureTime = 0.5;
  static constexpr int kAircraftSamples = 25;
  static constexpr double kAircraftEnd = 2.0;
  // chosen
  static constexpr double kApproachSpeed = 70.0;
  static constexpr double kGlideSlopeDeg = -3.0;
  static constexpr double kApproachAltitude = 30.0;
  static constexpr double kAlphaExcitation = 0.02;
  static constexpr double kAlphaFrequency = 4.0;
  static constexpr double kFirstLogSample = 0.02;
  static constexpr double kSafeSpeedPlaceholder = 80.0;

  // Pendulum (chosen).
  static constexpr double kPendulumLength = 1.0;
  static constexpr double kPendulumTheta0 = 0.2;
  static constexpr int kPendulumSamples = 20;
  static constexpr double kPendulumEnd = 1.0;
};

struct ExampleSpec {
  /// example1, example1_synthesis, aircraft_wing_failure,
  /// aircraft_engine_failure, pendulum.
  std::string generator = "example1";
  int num_samples = ExampleConstants::kExample1Samples;
  /// Sample times lie in [t_first, t_last]; uniform spacing includes both ends.
  double t_first = ExampleConstants::kExample1End / ExampleConstants::kExample1Samples;
  double t_last = ExampleConstants::kExample1End;
  /// uniform | log
  std::string spacing = "uniform";
  /// zero | sin:A:w (A sin(w t)) for Example I; trim | excite for aircraft.
  std::string input = "zero";
  double failure_time = ExampleConstants::kFailureTime;

  /// Throws std::invalid_argument.
  void validate() const;
};

/// Default settings for a generator id. Throws std::invalid_argument for an
/// unknown id.
ExampleSpec default_example(const std::string& generator);
std::vector<std::string> example_generators();

std::vector<double> sample_times(const ExampleSpec& spec);

/// Dense Dormand-Prince integration (rtol 1e-10) sampled at spec times.
TrajectoryData generate_example(const ExampleSpec& spec);

/// Angle of attack that balances lift against weight at the approach speed
/// and glide slope.
double aircraft_trim_alpha();

/// Right-hand side of the aircraft model with states (V, gamma, z).
Eigen::Vector3d aircraft_rhs(const Eigen::Vector3d& x, double alpha, double thrust,
                             double lift_factor);

using OdeRhs = std::function<void(const std::vector<double>&, std::vector<double>&, double)>;
/// States at `times` (ascending, >= t0) by dense dopri5 output.
std::vector<std::vector<double>> integrate_dense(const OdeRhs& rhs, std::vector<double> x0,
                                                 double t0, const std::vector<double>& times,
                                                 double rtol = 1e-10, double atol = 1e-12);

}  // namespace inclusioncert

#endif  // INCLUSIONCERT_EXAMPLES_H_
