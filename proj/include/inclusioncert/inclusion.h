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

#ifndef INCLUSIONCERT_INCLUSION_H_
#define INCLUSIONCERT_INCLUSION_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "inclusioncert/poly.h"
#include "inclusioncert/spline.h"

namespace inclusioncert {

class InclusionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// |Xdot - xdot| <= M sigma(t) componentwise, sigma a polynomial in "t".
struct RegularityInfo {
  double M = 0.0;
  Polynomial sigma = Polynomial::constant(1.0, {"t"});

  /// M finite and >= 0, sigma univariate in t, sigma >= 0 on a 1000-point
  /// grid of [t0, t1] and sigma in Sigma[t]. Throws InclusionError naming a
  /// point where sigma < 0 when one is found.
  void validate(double t0, double t1) const;
};

/// xdot in co{F + Gu - M sigma 1, F + Gu + M sigma 1} on [t_N, T].
struct DifferentialInclusion {
  ControlAffineModel model;
  RegularityInfo reg;
  VarList state_names;
  Eigen::VectorXd x_N;
  double t_N = 0.0;
  double T = 0.0;

  std::size_t num_states() const { return static_cast<std::size_t>(x_N.size()); }
  std::size_t num_inputs() const { return model.num_inputs(); }
  /// M sigma(t).
  double half_width(double t) const;
  /// F(t) + G(t) u; u may be empty when there are no inputs.
  Eigen::VectorXd nominal(double t, const Eigen::VectorXd& u) const;
  Eigen::VectorXd lower(double t, const Eigen::VectorXd& u) const;
  Eigen::VectorXd upper(double t, const Eigen::VectorXd& u) const;
  bool contains(double t, const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                double tol = 0.0) const;
  /// F_comp -/+ M sigma as polynomials in t (sign < 0 gives the lower vertex).
  Polynomial vertex(std::size_t comp, int sign) const;
};

/// Horizon is [model.t_start, model.t_end]. state_names defaults to x1..xn.
DifferentialInclusion build_inclusion(const ControlAffineModel& model,
                                      const RegularityInfo& reg,
                                      const Eigen::VectorXd& x_N,
                                      VarList state_names = {});

enum class TimeGate { kTerminal, kWholeHorizon };

/// {x : l_i(x) <= 0 for every i}.
struct UnsafeSet {
  std::vector<Polynomial> constraints;
  TimeGate gate = TimeGate::kTerminal;

  /// Throws std::invalid_argument on an empty list or on variables that are
  /// not states.
  void validate(const VarList& state_names) const;
  bool contains(const VarList& state_names, const Eigen::VectorXd& x) const;
};

/// Algebraic phi_i(t,x) >= 0 and integral int psi_j(t,x) dt >= 0.
struct SideInfo {
  std::vector<Polynomial> algebraic;
  std::vector<Polynomial> integral;

  bool empty() const { return algebraic.empty() && integral.empty(); }
  /// phi = 0 as the pair phi >= 0, -phi >= 0.
  void add_equality(const Polynomial& phi);
  /// phi with both phi and -phi listed.
  std::vector<Polynomial> equalities() const;
};

using Feedback = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

struct SimulationOptions {
  double dt = 1e-3;
  int switch_every = 10;  // selection redrawn every switch_every steps
  std::optional<double> t_end;
  /// Constant selection instead of random draws.
  std::optional<Eigen::VectorXd> fixed_alpha;
  bool record_derivatives = false;
  /// h_i(t, x) = 0. Selections are drawn from the part of the hull tangent
  /// to the manifold and states are projected back after every step.
  std::vector<Polynomial> equalities;
};

struct Trajectory {
  std::vector<double> times;
  Eigen::MatrixXd states;  // rows follow times
  /// Derivative and input at the start of every switch interval.
  std::vector<double> sample_times;
  std::vector<Eigen::VectorXd> sample_derivatives;
  std::vector<Eigen::VectorXd> sample_inputs;
  std::vector<Eigen::VectorXd> alphas;
  bool blew_up = false;
  double blowup_time = 0.0;
  /// Steps where no tangent selection lies in the hull (manifold mode).
  long hull_conflicts = 0;
};

/// RNG seeded by (seed, index), so trajectory i is independent of how many
/// others are drawn.
Trajectory simulate_selection(const DifferentialInclusion& di, const Feedback& controller,
                              std::uint64_t seed, std::uint64_t index = 0,
                              const SimulationOptions& opts = {});

struct UnsafeHit {
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  double first_hit_time = 0.0;
};

struct EnvelopeOptions {
  SimulationOptions sim;
  std::uint64_t seed = 0;
  /// Adds the constant selections alpha = -1 and alpha = +1.
  bool force_extremes = false;
};

struct Envelope {
  std::vector<double> times;
  Eigen::MatrixXd min;
  Eigen::MatrixXd max;
  std::vector<UnsafeHit> hits;
  std::vector<UnsafeHit> blowups;
  std::size_t num_trajectories = 0;
};

Envelope monte_carlo_envelope(const DifferentialInclusion& di, const Feedback& controller,
                              const UnsafeSet* unsafe, std::size_t n_traj,
                              const EnvelopeOptions& opts = {});

/// First time the trajectory lies in the set (whole horizon) or the final
/// time if it ends there (terminal).
std::optional<double> first_unsafe_time(const Trajectory& traj, const UnsafeSet& unsafe,
                                        const VarList& state_names);

/// t,comp,min,max,width
void write_envelope_csv(std::ostream& out, const Envelope& env);
void write_trajectory_csv(std::ostream& out, const Trajectory& traj,
                          const VarList& state_names);
nlohmann::json to_json(const UnsafeHit& hit);
nlohmann::json to_json(const RegularityInfo& reg);

}  // namespace inclusioncert

#endif  // INCLUSIONCERT_INCLUSION_H_
