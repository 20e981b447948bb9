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
#include <stdexcept>

#include <boost/numeric/odeint.hpp>

namespace inclusioncert {

namespace {

using C = ExampleConstants;
namespace odeint = boost::numeric::odeint;

struct SinInput {
  double amplitude = 0.0;
  double omega = 0.0;
};

SinInput parse_sin(const std::string& s) {
  if (s == "zero") return {};
  if (s.rfind("sin:", 0) != 0) throw std::invalid_argument("input must be zero or sin:A:w");
  const auto colon = s.find(':', 4);
  if (colon == std::string::npos) throw std::invalid_argument("input must be sin:A:w");
  try {
    std::size_t p1 = 0;
    std::size_t p2 = 0;
    const std::string a = s.substr(4, colon - 4);
    const std::string w = s.substr(colon + 1);
    SinInput in{std::stod(a, &p1), std::stod(w, &p2)};
    if (p1 != a.size() || p2 != w.size()) throw std::invalid_argument("junk");
    return in;
  } catch (const std::exception&) {
    throw std::invalid_argument("malformed input spec '" + s + "'");
  }
}

bool is_aircraft(const std::string& g) {
  return g == "aircraft_wing_failure" || g == "aircraft_engine_failure";
}

}  // namespace

std::vector<std::string> example_generators() {
  return {"example1", "example1_synthesis", "aircraft_wing_failure", "aircraft_engine_failure",
          "pendulum"};
}

void ExampleSpec::validate() const {
  bool known = false;
  for (const auto& g : example_generators()) known = known || g == generator;
  if (!known) throw std::invalid_argument("unknown generator '" + generator + "'");
  if (num_samples < 4) throw std::invalid_argument("need at least 4 samples");
  if (!(t_last > t_first) || !std::isfinite(t_first) || !std::isfinite(t_last) || t_first < 0) {
    throw std::invalid_argument("sample interval must satisfy 0 <= t_first < t_last");
  }
  if (spacing != "uniform" && spacing != "log") {
    throw std::invalid_argument("spacing must be uniform or log");
  }
  if (spacing == "log" && !(t_first > 0)) throw std::invalid_argument("log spacing needs t_first > 0");
  if (is_aircraft(generator)) {
    if (input != "trim" && input != "excite") {
      throw std::invalid_argument("aircraft input must be trim or excite");
    }
    if (!(failure_time >= 0) || !std::isfinite(failure_time)) {
      throw std::invalid_argument("failure time must be >= 0");
    }
  } else if (generator != "pendulum") {
    parse_sin(input);
  }
}

ExampleSpec default_example(const std::string& generator) {
  ExampleSpec s;
  s.generator = generator;
  if (generator == "example1") return s;
  if (generator == "example1_synthesis") {
    s.t_first = 0.0;
    s.t_last = C::kExample1SynthesisEnd;
    s.input = "sin:10:1";
    return s;
  }
  if (is_aircraft(generator)) {
    s.num_samples = C::kAircraftSamples;
    s.t_first = C::kFirstLogSample;
    s.t_last = C::kAircraftEnd;
    s.spacing = "log";
    s.input = generator == "aircraft_engine_failure" ? "excite" : "trim";
    return s;
  }
  if (generator == "pendulum") {
    s.num_samples = C::kPendulumSamples;
    s.t_first = 0.0;
    s.t_last = C::kPendulumEnd;
    s.input = "zero";
    return s;
  }
  throw std::invalid_argument("unknown generator '" + generator + "'");
}

std::vector<double> sample_times(const ExampleSpec& spec) {
  std::vector<double> t(static_cast<std::size_t>(spec.num_samples));
  const double n1 = spec.num_samples - 1;
  for (int k = 0; k < spec.num_samples; ++k) {
    if (spec.spacing == "log") {
      t[k] = spec.t_first * std::pow(spec.t_last / spec.t_first, k / n1);
    } else {
      t[k] = spec.t_first + (spec.t_last - spec.t_first) * (k / n1);
    }
  }
  t.back() = spec.t_last;
  return t;
}

std::vector<std::vector<double>> integrate_dense(const OdeRhs& rhs, std::vector<double> x0,
                                                 double t0, const std::vector<double>& times,
                                                 double rtol, double atol) {
  std::vector<std::vector<double>> out;
  out.reserve(times.size());
  auto stepper = odeint::make_dense_output(atol, rtol, odeint::runge_kutta_dopri5<std::vector<double>>());
  std::vector<double> obs_t;
  std::size_t k = 0;
  while (k < times.size() && times[k] <= t0) {
    out.push_back(x0);
    ++k;
  }
  if (k == times.size()) return out;
  std::vector<double> rest(times.begin() + static_cast<std::ptrdiff_t>(k), times.end());
  rest.insert(rest.begin(), t0);
  odeint::integrate_times(stepper, rhs, x0, rest.begin(), rest.end(), 1e-3,
                          [&](const std::vector<double>& x, double t) {
                            if (t > t0) out.push_back(x);
                          });
  return out;
}

double aircraft_trim_alpha() {
  const double gamma = C::kGlideSlopeDeg * std::numbers::pi / 180.0;
  const double v2 = C::kApproachSpeed * C::kApproachSpeed;
  const double cl = C::kMass * C::kGravity * std::cos(gamma) / (C::kLiftScale * v2);
  return (cl - C::kLiftBias) / C::kLiftSlope;
}

Eigen::Vector3d aircraft_rhs(const Eigen::Vector3d& x, double alpha, double thrust,
                             double lift_factor) {
  const double v = x(0);
  const double gamma = x(1);
  const double cl = C::kLiftBias + C::kLiftSlope * alpha;
  const double lift = lift_factor * C::kLiftScale * cl * v * v;
  const double drag = (C::kDragBias + C::kDragScale * cl * cl) * v * v;
  const double mg = C::kMass * C::kGravity;
  return {(thrust * std::cos(alpha) - drag - mg * std::sin(gamma)) / C::kMass,
          (thrust * std::sin(alpha) + lift - mg * std::cos(gamma)) / (C::kMass * v),
          v * std::sin(gamma)};
}

TrajectoryData generate_example(const ExampleSpec& spec) {
  spec.validate();
  const std::vector<double> times = sample_times(spec);
  TrajectoryData d;
  d.times = times;
  const auto n = static_cast<Eigen::Index>(times.size());

  if (spec.generator == "example1" || spec.generator == "example1_synthesis") {
    const SinInput in = parse_sin(spec.input);
    auto u = [&](double t) { return in.amplitude * std::sin(in.omega * t); };
    const OdeRhs rhs = [&](const std::vector<double>& x, std::vector<double>& dx, double t) {
      dx[0] = C::kExample1Quadratic * x[0] * x[0] + C::kExample1Cubic * x[0] * x[0] * x[0] + u(t);
    };
    const auto xs = integrate_dense(rhs, {C::kExample1X0}, 0.0, times);
    d.states.resize(n, 1);
    d.state_names = {"x"};
    for (Eigen::Index k = 0; k < n; ++k) d.states(k, 0) = xs[static_cast<std::size_t>(k)][0];
    if (in.amplitude != 0.0) {
      d.inputs.resize(n, 1);
      d.input_names = {"u"};
      for (Eigen::Index k = 0; k < n; ++k) d.inputs(k, 0) = u(times[static_cast<std::size_t>(k)]);
    } else {
      d.inputs.resize(n, 0);
    }
    return d;
  }

  if (is_aircraft(spec.generator)) {
    const bool wing = spec.generator == "aircraft_wing_failure";
    const bool excite = spec.input == "excite";
    const double trim = aircraft_trim_alpha();
    auto alpha = [&](double t) {
      return excite ? trim + C::kAlphaExcitation * std::sin(C::kAlphaFrequency * t) : trim;
    };
    auto rhs_for = [&](bool failed) -> OdeRhs {
      const double thrust = C::kThrustMax * (!wing && failed ? C::kSurgeFraction : C::kIdleFraction);
      const double lf = wing && failed ? C::kWingLiftFactor : 1.0;
      return [=](const std::vector<double>& x, std::vector<double>& dx, double t) {
        const Eigen::Vector3d f = aircraft_rhs(Eigen::Vector3d(x[0], x[1], x[2]), alpha(t), thrust, lf);
        dx[0] = f(0);
        dx[1] = f(1);
        dx[2] = f(2);
      };
    };
    const std::vector<double> x0{C::kApproachSpeed, C::kGlideSlopeDeg * std::numbers::pi / 180.0,
                                 C::kApproachAltitude};
    std::vector<double> before;
    std::vector<double> after;
    for (double t : times) (t <= spec.failure_time ? before : after).push_back(t);
    auto xs = integrate_dense(rhs_for(false), x0, 0.0, before);
    // Restart at the failure so the switch is not smeared by step control.
    const auto at_failure = integrate_dense(rhs_for(false), x0, 0.0, {spec.failure_time});
    const auto tail = integrate_dense(rhs_for(true), at_failure.at(0), spec.failure_time, after);
    xs.insert(xs.end(), tail.begin(), tail.end());
    d.states.resize(n, 3);
    d.state_names = {"V", "gamma", "z"};
    for (Eigen::Index k = 0; k < n; ++k) {
      for (int c = 0; c < 3; ++c) d.states(k, c) = xs[static_cast<std::size_t>(k)][c];
    }
    if (excite) {
      d.inputs.resize(n, 1);
      d.input_names = {"u_alpha"};
      for (Eigen::Index k = 0; k < n; ++k) d.inputs(k, 0) = alpha(times[static_cast<std::size_t>(k)]);
    } else {
      d.inputs.resize(n, 0);
    }
    return d;
  }

  // Pendulum: integrate the angle, so positions lie on the circle exactly
  // up to rounding.
  const double l = C::kPendulumLength;
  const OdeRhs rhs = [&](const std::vector<double>& x, std::vector<double>& dx, double) {
    dx[0] = x[1];
    dx[1] = -(C::kGravity / l) * std::sin(x[0]);
  };
  const auto xs = integrate_dense(rhs, {C::kPendulumTheta0, 0.0}, 0.0, times);
  d.states.resize(n, 2);
  d.state_names = {"x", "y"};
  for (Eigen::Index k = 0; k < n; ++k) {
    const double th = xs[static_cast<std::size_t>(k)][0];
    d.states(k, 0) = l * std::sin(th);
    d.states(k, 1) = -l * std::cos(th);
  }
  d.inputs.resize(n, 0);
  return d;
}

}  // namespace inclusioncert
