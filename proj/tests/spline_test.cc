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

#include "inclusioncert/spline.h"

#include <cmath>
#include <random>
#include <sstream>

#include <boost/numeric/odeint.hpp>
#include <gtest/gtest.h>

namespace inclusioncert {
namespace {

namespace odeint = boost::numeric::odeint;

TrajectoryData sample(const std::vector<double>& times,
                      const std::function<double(double)>& f) {
  TrajectoryData d;
  d.times = times;
  d.states.resize(static_cast<Eigen::Index>(times.size()), 1);
  for (std::size_t i = 0; i < times.size(); ++i) d.states(i, 0) = f(times[i]);
  d.inputs.resize(static_cast<Eigen::Index>(times.size()), 0);
  d.state_names = {"x"};
  return d;
}

TEST(Basis, DegreeZeroIndicator) {
  const KnotVector kv({0, 1, 2});
  EXPECT_EQ(basis_eval(kv, 1, 0, 0.5), 0.0);
  EXPECT_EQ(basis_eval(kv, 0, 0, 0.5), 1.0);
  EXPECT_EQ(basis_eval(kv, 1, 0, 1.5), 1.0);
  EXPECT_EQ(basis_eval(kv, 0, 0, 1.5), 0.0);
}

TEST(Basis, HatHandUnrolled) {
  const KnotVector kv({0, 1, 2});
  // Q_{0,1} is the hat on [0,2]; (t - 0)/(1 - 0) * 1 at t = 0.5.
  EXPECT_DOUBLE_EQ(basis_eval(kv, 0, 1, 0.5), 0.5);
  EXPECT_DOUBLE_EQ(basis_eval(kv, 0, 1, 1.5), 0.5);
  EXPECT_DOUBLE_EQ(basis_eval(kv, 0, 1, 1.0), 1.0);
}

TEST(Basis, IndexOutOfRange) {
  const KnotVector kv({0, 1, 2});
  EXPECT_THROW(basis_eval(kv, 1, 1, 0.5), std::out_of_range);
  EXPECT_THROW(basis_eval(kv, -1, 0, 0.5), std::out_of_range);
}

TEST(Basis, UniformCubicPartitionOfUnity) {
  const KnotVector kv({0, 1, 2, 3, 4, 5, 6, 7});
  for (double t = 3.0; t <= 4.0; t += 0.01) {
    double s = 0;
    for (int i = 0; i < kv.num_basis(3); ++i) s += basis_eval(kv, i, 3, t);
    EXPECT_NEAR(s, 1.0, 1e-14);
  }
}

TEST(Basis, HatDerivative) {
  const KnotVector kv({0, 1, 2});
  EXPECT_DOUBLE_EQ(basis_derivative(kv, 0, 1, 0.5), 1.0);
  EXPECT_DOUBLE_EQ(basis_derivative(kv, 0, 1, 1.5), -1.0);
  const double h = 1e-6;
  EXPECT_NEAR((basis_eval(kv, 0, 1, 0.5 + h) - basis_eval(kv, 0, 1, 0.5 - h)) / (2 * h),
              1.0, 1e-9);
}

TEST(Basis, DegreeZeroDerivativeIsFlat) {
  const KnotVector kv({0, 1, 2});
  EXPECT_EQ(basis_derivative(kv, 0, 0, 0.5), 0.0);
}

TEST(Basis, DerivativeIntegratesToZero) {
  const KnotVector kv({0, 0.5, 1.25, 2, 3});
  const int n = 10000;
  const double a = 0.0, b = 3.0, h = (b - a) / n;
  double s = 0;
  for (int k = 0; k <= n; ++k) {
    const double w = (k == 0 || k == n) ? 0.5 : 1.0;
    s += w * basis_derivative(kv, 0, 3, a + k * h);
  }
  EXPECT_NEAR(s * h, 0.0, 1e-6);
}

TEST(BasisProperty, PartitionOfUnityClamped) {
  std::mt19937_64 rng(1);
  for (int nb : {4, 7, 12}) {
    const auto kv = KnotVector::clamped_uniform(-1.0, 2.5, nb, 3);
    std::uniform_real_distribution<double> u(-1.0, 2.5);
    for (int k = 0; k < 1000; ++k) {
      const double t = u(rng);
      double s = 0;
      for (int i = 0; i < nb; ++i) s += basis_eval(kv, i, 3, t);
      EXPECT_LE(std::abs(s - 1.0), 1e-10);
    }
  }
}

TEST(BasisProperty, LocalSupport) {
  const auto kv = KnotVector::clamped_uniform(0.0, 1.0, 8, 3);
  for (int i = 0; i < 8; ++i) {
    for (double t = 0.0; t <= 1.0; t += 0.0137) {
      if (t < kv[i] || t > kv[i + 4]) EXPECT_EQ(basis_eval(kv, i, 3, t), 0.0);
    }
  }
}

TEST(BasisProperty, DerivativeMatchesFiniteDifference) {
  std::mt19937_64 rng(2);
  const auto kv = KnotVector::clamped_uniform(0.0, 2.0, 9, 3);
  std::uniform_real_distribution<double> u(0.01, 1.99);
  std::uniform_int_distribution<int> idx(0, 8);
  const double h = 1e-7;
  for (int k = 0; k < 200; ++k) {
    const double t = u(rng);
    const int i = idx(rng);
    const double fd = (basis_eval(kv, i, 3, t + h) - basis_eval(kv, i, 3, t - h)) / (2 * h);
    EXPECT_LE(std::abs(fd - basis_derivative(kv, i, 3, t)), 1e-6);
  }
}

TEST(Basis, PolynomialPieceMatchesRecursion) {
  const auto kv = KnotVector::clamped_uniform(0.0, 3.0, 7, 3);
  for (double t = 0.05; t < 3.0; t += 0.1) {
    const int span = kv.find_span(t, 3);
    for (int i = span - 3; i <= span; ++i) {
      const double pt[] = {t};
      EXPECT_NEAR(basis_polynomial(kv, i, 3, span).evaluate(pt),
                  basis_eval(kv, i, 3, t), 1e-12);
    }
  }
}

TEST(Fit, ReproducesCubic) {
  const auto d = sample({0.0, 0.3, 0.5, 1.1, 1.4, 2.0}, [](double t) { return t * t * t; });
  const auto m = fit_trajectory_spline(d);
  for (double t = 0.0; t <= 2.0; t += 0.01) {
    EXPECT_NEAR(m.value(0, t), t * t * t, 1e-9);
    EXPECT_NEAR(m.derivative(0, t), 3 * t * t, 1e-8);
  }
  EXPECT_LE(m.interpolation_residual, 1e-8);
}

TEST(Fit, ReproducesConstant) {
  const auto d = sample({0, 1, 2, 3, 4}, [](double) { return 1.0; });
  const auto m = fit_trajectory_spline(d);
  for (double t = 0.0; t <= 4.0; t += 0.1) EXPECT_NEAR(m.value(0, t), 1.0, 1e-12);
}

TEST(Fit, RejectsTooFewAndDegenerate) {
  EXPECT_THROW(fit_trajectory_spline(sample({0, 1, 2}, [](double t) { return t; })),
               DataError);
  auto d = sample({0, 1, 2, 3}, [](double t) { return t; });
  d.times[2] = 0.5;
  EXPECT_THROW(fit_trajectory_spline(d), DataError);
}

TEST(Fit, DedupAverages) {
  auto d = sample({0, 1, 1, 2, 3}, [](double t) { return t; });
  d.states(2, 0) = 3.0;
  const auto dd = dedup_samples(d);
  ASSERT_EQ(dd.num_samples(), 4u);
  EXPECT_DOUBLE_EQ(dd.states(1, 0), 2.0);
}

double example1_truth(double t) {
  using State = std::vector<double>;
  State x{1.0};
  auto rhs = [](const State& s, State& ds, double) {
    ds[0] = 0.5 * s[0] * s[0] - 0.05 * s[0] * s[0] * s[0];
  };
  odeint::integrate_adaptive(
      odeint::make_dense_output(1e-12, 1e-10, odeint::runge_kutta_dopri5<State>()),
      rhs, x, 0.0, t, 1e-3);
  return x[0];
}

TEST(Fit, ExampleOneInterpolation) {
  std::vector<double> times;
  for (int k = 1; k <= 20; ++k) times.push_back(1.7 * k / 20.0);
  const auto d = sample(times, example1_truth);
  const auto m = fit_trajectory_spline(d);
  EXPECT_LE(m.interpolation_residual, 1e-8);
  double worst = 0;
  for (double t = times.front(); t <= 1.7; t += 0.05) {
    worst = std::max(worst, std::abs(m.value(0, t) - example1_truth(t)));
  }
  RecordProperty("max_deviation_from_rk45", std::to_string(worst));
  EXPECT_LT(worst, 1e-2);

  const auto ext = extrapolation_model(fit_control_affine(d, m), 1.7, 2.5);
  EXPECT_LE(ext.drift[0].degree(), 2);
  const double at[] = {1.7};
  EXPECT_NEAR(ext.drift[0].evaluate(at), m.derivative(0, 1.7), 1e-9);
}

TEST(ControlAffine, RecoversUnitInputGain) {
  // xdot = 1 + u, u = sin t, so x = t - cos t + c.
  TrajectoryData d;
  const int n = 30;
  d.states.resize(n, 1);
  d.inputs.resize(n, 1);
  for (int k = 0; k < n; ++k) {
    const double t = 6.0 * k / (n - 1);
    d.times.push_back(t);
    d.states(k, 0) = t - std::cos(t) + 1.0;
    d.inputs(k, 0) = std::sin(t);
  }
  const auto m = fit_control_affine(d, fit_trajectory_spline(d));
  ASSERT_TRUE(m.has_inputs);
  // G(t) = sum_i Qdot_i(t) b1_i.
  for (double t = 0.5; t <= 5.5; t += 0.25) {
    double g = 0, f = 0;
    for (int i = 0; i < m.affine_knots.num_basis(3); ++i) {
      const double dq = basis_derivative(m.affine_knots, i, 3, t);
      g += dq * m.input_products[0](i, 0);
      f += dq * m.drift_products(i, 0);
    }
    EXPECT_NEAR(g, 1.0, 0.05) << t;
    EXPECT_NEAR(f, 1.0, 0.05) << t;
  }
}

TEST(ControlAffine, ZeroInputsReuseInterpolant) {
  auto d = sample({0, 0.5, 1, 1.5, 2, 2.5}, [](double t) { return std::exp(-t); });
  d.inputs = Eigen::MatrixXd::Zero(6, 1);
  const auto base = fit_trajectory_spline(d);
  const auto m = fit_control_affine(d, base);
  EXPECT_FALSE(m.has_inputs);
  EXPECT_EQ(m.input_products[0].cwiseAbs().maxCoeff(), 0.0);
  const auto ext = extrapolation_model(m, 2.5, 3.0);
  const auto span = base.knots.find_span(2.5, 3);
  EXPECT_TRUE(ext.drift[0].same_function(base.derivative_polynomial(0, span), 1e-12));
  EXPECT_FALSE(ext.has_input_map());
}

TEST(ControlAffine, ConstantInputWarns) {
  auto d = sample({0, 0.5, 1, 1.5, 2, 2.5, 3, 3.5, 4}, [](double t) { return 2 * t; });
  d.inputs = Eigen::MatrixXd::Constant(9, 1, 0.7);
  const auto m = fit_control_affine(d, fit_trajectory_spline(d));
  bool warned = false;
  for (const auto& w : m.warnings) warned |= w.find("constant") != std::string::npos;
  EXPECT_TRUE(warned);
}

TEST(Extrapolation, CubicGivesPowerRule) {
  const auto d = sample({0.0, 0.4, 0.9, 1.3, 2.0}, [](double t) { return t * t * t; });
  const auto ext = extrapolation_model(fit_control_affine(d, fit_trajectory_spline(d)), 2.0, 3.0);
  for (double t = 2.0; t <= 3.0; t += 0.05) {
    const double pt[] = {t};
    EXPECT_NEAR(ext.drift[0].evaluate(pt), 3 * t * t, 1e-8);
  }
}

TEST(Extrapolation, ConstantGivesZero) {
  const auto d = sample({0, 1, 2, 3}, [](double) { return -4.0; });
  const auto ext = extrapolation_model(fit_control_affine(d, fit_trajectory_spline(d)), 3.0, 4.0);
  EXPECT_LE(ext.drift[0].max_abs_coefficient(), 1e-12);
}

TEST(Extrapolation, RejectsEmptyHorizon) {
  const auto d = sample({0, 1, 2, 3}, [](double t) { return t; });
  const auto m = fit_trajectory_spline(d);
  EXPECT_THROW(extrapolation_model(m, 3.0, 3.0), std::invalid_argument);
}

TEST(ExtrapolationProperty, MatchesLastSpanDerivative) {
  const auto d = sample({0, 0.2, 0.5, 0.6, 1.0, 1.3, 1.9}, [](double t) { return std::sin(3 * t); });
  const auto m = fit_trajectory_spline(d);
  const auto ext = extrapolation_model(fit_control_affine(d, m), 1.9, 2.5);
  const int span = m.knots.find_span(1.9, 3);
  const double a = m.knots[span], b = m.knots[span + 1];
  for (int k = 0; k < 100; ++k) {
    const double t = a + (b - a) * k / 99.0;
    const double pt[] = {t};
    EXPECT_NEAR(ext.drift[0].evaluate(pt), m.derivative(0, t), 1e-9);
  }
}

TEST(Csv, RoundTripAndClassification) {
  std::istringstream in("t,x1,x2,u1\n0,1,2,0.5\n0.1,1.5,2.5,0.25\n");
  const auto d = read_trajectory_csv(in);
  EXPECT_EQ(d.num_states(), 2u);
  EXPECT_EQ(d.num_inputs(), 1u);
  std::ostringstream out;
  write_trajectory_csv(out, d);
  std::istringstream again(out.str());
  const auto e = read_trajectory_csv(again);
  EXPECT_EQ(e.times, d.times);
  EXPECT_EQ(e.states, d.states);
  EXPECT_EQ(e.inputs, d.inputs);
}

TEST(Csv, NonMonotoneTimeNamesLine) {
  std::istringstream in("t,x\n0,1\n0.2,2\n0.1,3\n");
  try {
    read_trajectory_csv(in);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
}

TEST(Csv, BadNumberNamesLine) {
  std::istringstream in("t,x\n0,1\n0.2,abc\n");
  EXPECT_THROW(read_trajectory_csv(in), DataError);
}

}  // namespace
}  // namespace inclusioncert
