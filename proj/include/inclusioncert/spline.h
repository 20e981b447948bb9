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

#ifndef INCLUSIONCERT_SPLINE_H_
#define INCLUSIONCERT_SPLINE_H_

#include <iosfwd>
#include <stdexcept>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "inclusioncert/poly.h"

namespace inclusioncert {

/// Non-decreasing knot sequence. Basis function i of degree p (zero-based) is
/// supported on [knots[i], knots[i+p+1]].
class KnotVector {
 public:
  KnotVector() = default;
  explicit KnotVector(std::vector<double> knots);

  /// Clamped knots on [a, b] with uniformly spaced interior knots.
  static KnotVector clamped_uniform(double a, double b, int num_basis,
                                    int degree);
  /// Cubic interpolation knots for not-a-knot end conditions: the sample
  /// times with the second and penultimate removed, ends repeated 4 times.
  static KnotVector not_a_knot(std::span<const double> times);

  const std::vector<double>& knots() const { return knots_; }
  std::size_t size() const { return knots_.size(); }
  double operator[](std::size_t i) const { return knots_[i]; }
  int num_basis(int degree) const {
    return static_cast<int>(knots_.size()) - degree - 1;
  }
  double front() const { return knots_.front(); }
  double back() const { return knots_.back(); }
  /// Index s with knots[s] <= t < knots[s+1] among spans usable by degree p;
  /// t at the right end maps to the last non-empty span.
  int find_span(double t, int degree) const;

 private:
  std::vector<double> knots_;
};

/// Cox-de Boor recursion. Terms whose knot gap is zero contribute 0.
double basis_eval(const KnotVector& kv, int i, int p, double t);
/// p * (Q_{i,p-1}/(k[i+p]-k[i]) - Q_{i+1,p-1}/(k[i+p+1]-k[i+1])).
double basis_derivative(const KnotVector& kv, int i, int p, double t);
/// The polynomial piece of Q_{i,p} on [knots[span], knots[span+1]).
Polynomial basis_polynomial(const KnotVector& kv, int i, int p, int span,
                            const std::string& var = "t");

struct TrajectoryData {
  std::vector<double> times;
  Eigen::MatrixXd states;  // N x n
  Eigen::MatrixXd inputs;  // N x m, m may be 0
  std::vector<std::string> state_names;
  std::vector<std::string> input_names;

  std::size_t num_samples() const { return times.size(); }
  std::size_t num_states() const { return static_cast<std::size_t>(states.cols()); }
  std::size_t num_inputs() const { return static_cast<std::size_t>(inputs.cols()); }
  bool inputs_all_zero() const;

  /// Throws DataError on shape mismatch, non-finite entries, or times that
  /// are not strictly increasing.
  void validate() const;
};

/// Thrown for malformed or unusable trajectory data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Merges samples with coincident times by averaging states and inputs.
/// Throws DataError if times decrease.
TrajectoryData dedup_samples(const TrajectoryData& data);

/// Header `t,x1..xn[,u1..um]`; columns are classified by the first letter of
/// their name ('u' marks an input), unless `num_inputs` is given.
TrajectoryData read_trajectory_csv(std::istream& in, int num_inputs = -1);
TrajectoryData read_trajectory_csv_file(const std::string& path,
                                        int num_inputs = -1);
void write_trajectory_csv(std::ostream& out, const TrajectoryData& data);

struct SplineModel {
  /// Cubic interpolant X_l(t) = sum_i coefs(i, l) Q_i(t).
  KnotVector knots;
  int degree = 3;
  Eigen::MatrixXd coefs;  // num_basis x n

  /// Control-affine part X_l(t, u) = sum_i Q_i(t) (b0(i,l) + sum_j b1[l](i,j) u_j)
  /// on a coarser knot vector. Only the products of spline weights and input
  /// weights are identifiable, so these are stored directly.
  bool has_inputs = false;
  KnotVector affine_knots;
  Eigen::MatrixXd drift_products;               // K x n
  std::vector<Eigen::MatrixXd> input_products;  // n entries, each K x m

  double t_first = 0.0;
  double t_last = 0.0;
  Eigen::VectorXd x_last;
  std::size_t num_inputs = 0;
  double interpolation_residual = 0.0;
  double reconstruction_residual = 0.0;
  std::vector<std::string> warnings;

  std::size_t num_states() const { return static_cast<std::size_t>(coefs.cols()); }
  double value(std::size_t state, double t) const;
  double derivative(std::size_t state, double t) const;
  /// Time derivative of the interpolant on the given span, as a polynomial
  /// in t.
  Polynomial derivative_polynomial(std::size_t state, int span) const;
};

/// Not-a-knot cubic interpolation of every state channel.
SplineModel fit_trajectory_spline(const TrajectoryData& data);

/// Least-squares fit of the drift and input products against derivative
/// samples of the interpolant. All-zero inputs leave the interpolant's
/// derivative as the drift; collinear regressors add a warning and the
/// minimum-norm solution is kept.
SplineModel fit_control_affine(const TrajectoryData& data, SplineModel model);

/// Xdot(t) = F(t) + G(t) u with F, G global polynomials in "t" on
/// [t_start, t_end].
struct ControlAffineModel {
  std::vector<Polynomial> drift;                   // n
  std::vector<std::vector<Polynomial>> input_map;  // n x m
  double t_start = 0.0;
  double t_end = 0.0;

  std::size_t num_states() const { return drift.size(); }
  std::size_t num_inputs() const {
    return input_map.empty() ? 0 : input_map.front().size();
  }
  bool has_input_map() const;
  Eigen::VectorXd drift_at(double t) const;
  Eigen::MatrixXd input_map_at(double t) const;
};

/// Extends the final spline segment's derivative as global polynomials on
/// [t_start, t_end]. Throws std::invalid_argument if t_end <= t_start.
ControlAffineModel extrapolation_model(const SplineModel& model,
                                       double t_start, double t_end);

nlohmann::json to_json(const SplineModel& model);
nlohmann::json to_json(const ControlAffineModel& model);
ControlAffineModel control_affine_model_from_json(const nlohmann::json& j);

}  // namespace inclusioncert

#endif  // INCLUSIONCERT_SPLINE_H_
