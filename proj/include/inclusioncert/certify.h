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

#ifndef INCLUSIONCERT_CERTIFY_H_
#define INCLUSIONCERT_CERTIFY_H_

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "inclusioncert/inclusion.h"
#include "inclusioncert/poly.h"
#include "inclusioncert/sdp.h"
#include "inclusioncert/sos.h"

namespace inclusioncert {

class CertifyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// t = t_mid + t_half s, x_k = center_k + half_k xi_k.
struct Scaling {
  double t_mid = 0.0;
  double t_half = 1.0;
  Eigen::VectorXd center;
  Eigen::VectorXd half;

  /// Maps a polynomial in (t, x) to (s, xi); names are kept.
  Polynomial to_scaled(const Polynomial& p, const VarList& states) const;
  Polynomial to_original(const Polynomial& p, const VarList& states) const;
};

/// Per-state bounds of x_N + int (F -/+ M sigma) over [t_N, T], a box that
/// contains every uncontrolled solution.
struct WorkingBox {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
};
WorkingBox working_box(const DifferentialInclusion& di);
Scaling default_scaling(const DifferentialInclusion& di);

/// How the W term of the synthesis decrease conditions is signed.
enum class SynthesisForm {
  /// -dB/dt - dB/dx (f -/+ M sigma) - W - ... in Sigma, controller verbatim.
  kPrinted,
  /// -dB/dt - dB/dx (f -/+ M sigma) + W - ... in Sigma with the controller
  /// sign flipped, so the input supplies the decrease.
  kControlled,
};

struct CertifyOptions {
  SolverConfig solver;
  double min_margin = 1e-4;
  /// c <= margin_cap keeps an interior optimal face when the margin is not
  /// tight; <= 0 disables the cap.
  double margin_cap = 0.1;
  double coefficient_bound = 1.0;
  /// Coefficient bound for the free multiplier of a p, -p constraint pair.
  double equality_multiplier_bound = 100.0;
  /// W - epsilon * |xi|^2 in Sigma (scaled states).
  double w_epsilon = 0.0;
  /// Controlled synthesis maximizes c - w_penalty * mean(W) over the scaled
  /// box.
  double w_penalty = 1e-3;
  /// Boundary condition over X_u x [t_N, T] instead of X_u at T.
  bool strict = false;
  double eps_psd = 1e-7;
  double posthoc_tol = 1e-6;
  /// Multiplier degree; -1 means deg B rounded up to even.
  int multiplier_degree = -1;
  std::optional<Scaling> scaling;
  SynthesisForm form = SynthesisForm::kControlled;
};

struct BarrierCertificate {
  VarList state_names;
  Polynomial B;  // in (t, states)
  Polynomial W_minus;
  Polynomial W_plus;
  std::map<std::string, Polynomial> multipliers;  // scaled coordinates
  Polynomial B_scaled;
  Scaling scaling;
  double margin = 0.0;
  int degree = 0;
  double t_N = 0.0;
  double T = 0.0;
  Eigen::VectorXd x_N;
  TimeGate gate = TimeGate::kTerminal;
  bool synthesized = false;
  double q1 = 0.0;
  SynthesisForm form = SynthesisForm::kPrinted;
  double eig_min = 0.0;
  double residual = 0.0;

  double eval_B(double t, const Eigen::VectorXd& x) const;
};

struct ProbeRecord {
  double T = 0.0;
  int degree = 0;
  bool feasible = false;
  std::string status;
  double margin = 0.0;
  double eig_min = 0.0;
  double residual = 0.0;
  int iterations = 0;
  std::string message;
};

struct VerifyResult {
  bool feasible = false;
  std::optional<BarrierCertificate> certificate;
  ProbeRecord probe;
};

/// The SOS program for one (T, degree) probe; exposed for SDPA export.
struct SafetyProgram {
  SosProgram program;
  Scaling scaling;
  VarList state_names;
  int degree = 0;
  int multiplier_degree = 0;
  std::vector<std::string> multiplier_names;
};

/// Whole-horizon gating in `unsafe` turns on strict mode.
SafetyProgram build_safety_program(const DifferentialInclusion& di, const UnsafeSet& unsafe,
                                   double T, int degree, const SideInfo* side,
                                   const CertifyOptions& opts, bool synthesis = false,
                                   double q1 = 1.0);

/// Throws CertifyError on invalid arguments (T <= t_N, inputs in the model,
/// degree < 1, bad unsafe set).
VerifyResult verify_safety(const DifferentialInclusion& di, const UnsafeSet& unsafe, double T,
                           int degree, const SideInfo* side = nullptr,
                           const CertifyOptions& opts = {});

struct SingularityEvent {
  double t = 0.0;
  Eigen::VectorXd x;
  double norm = 0.0;  // |dB/dx^T G|
};

/// u = G^T dB/dx (dB/dx^T G G^T dB/dx)^{-1} W(t, x).
class SafeController {
 public:
  SafeController() = default;
  /// G is n x m, polynomials in t.
  SafeController(VarList state_names, Polynomial B, Polynomial W,
                 std::vector<std::vector<Polynomial>> G);

  std::optional<double> u_max;
  bool flip_sign = false;
  double delta = 1e-6;

  const VarList& state_names() const { return names_; }
  const Polynomial& B() const { return B_; }
  const Polynomial& W() const { return W_; }
  const std::vector<std::vector<Polynomial>>& G() const { return G_; }
  std::size_t num_inputs() const { return G_.empty() ? 0 : G_.front().size(); }

  Eigen::VectorXd evaluate(double t, const Eigen::VectorXd& x) const;
  /// dB/dx^T G at (t, x), length m.
  Eigen::VectorXd lie_row(double t, const Eigen::VectorXd& x) const;
  double eval_W(double t, const Eigen::VectorXd& x) const;
  std::vector<SingularityEvent> singularities() const;
  std::size_t num_evaluations() const;
  double max_abs_input() const;

 private:
  struct Log {
    std::mutex mu;
    std::vector<SingularityEvent> events;
    std::size_t evaluations = 0;
    double max_abs = 0.0;
  };
  VarList names_;
  Polynomial B_;
  Polynomial W_;
  std::vector<std::vector<Polynomial>> G_;
  std::vector<PolyEvaluator> dB_;  // per state, over (t, states)
  PolyEvaluator W_eval_;
  std::vector<std::vector<PolyEvaluator>> G_eval_;
  std::shared_ptr<Log> log_ = std::make_shared<Log>();
};

Eigen::VectorXd controller_eval(const SafeController& ctrl, double t, const Eigen::VectorXd& x);

struct GridCheck {
  bool pass = false;
  double min_abs = 0.0;  // min over the grid of |dB/dx^T G|
  double t_at = 0.0;
  Eigen::VectorXd x_at;
  std::size_t points = 0;
};

/// 50 points per axis over [t_N, T] x box (per state axis, capped at ~1e6
/// points in total).
GridCheck controllability_grid_check(const SafeController& ctrl, double t0, double t1,
                                     const WorkingBox& box, int per_axis = 50,
                                     double threshold = 1e-6);

struct SynthesisResult {
  bool feasible = false;
  std::optional<BarrierCertificate> certificate;
  std::optional<SafeController> controller;
  GridCheck grid;
  bool controller_sound = false;
  std::vector<ProbeRecord> probes;  // one per q1 tried
};

/// Tries q1 = +1 then -1 unless q1 is given. Throws CertifyError when G is
/// identically zero.
SynthesisResult synthesize_controller(const DifferentialInclusion& di, const UnsafeSet& unsafe,
                                      double T, int degree, std::optional<double> q1 = {},
                                      const SideInfo* side = nullptr,
                                      const CertifyOptions& opts = {});

struct SweepOptions {
  double tol = 0.01;
  CertifyOptions certify;
  const SideInfo* side = nullptr;
  /// Concurrent degrees.
  int threads = 0;
};

struct DegreeSweep {
  int degree = 0;
  std::optional<double> verified_T;
  std::optional<BarrierCertificate> certificate;
  std::vector<ProbeRecord> probes;
  int monotonicity_violations = 0;
};

struct HorizonSweepResult {
  std::vector<DegreeSweep> degrees;
  std::vector<std::string> warnings;
};

/// Default lower end t_N + 0.05 * (span of data times).
double default_sweep_lower(const DifferentialInclusion& di, double data_span);

HorizonSweepResult sweep_horizon(const DifferentialInclusion& di, const UnsafeSet& unsafe,
                                 const std::vector<int>& degrees, double T_lo, double T_hi,
                                 const SweepOptions& opts = {});

struct AuditOptions {
  SimulationOptions sim;
  double slack_fraction = 1e-4;
  bool force_extremes = true;
  /// Equality side information restricts selections to the manifold.
  const SideInfo* side = nullptr;
  int threads = 0;
};

struct AuditViolation {
  std::string kind;  // "unsafe" or "decrease"
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  double time = 0.0;
  Eigen::VectorXd state;
  double excess = 0.0;
};

struct AuditReport {
  std::size_t trajectories = 0;
  std::size_t unsafe_hits = 0;
  std::size_t decrease_violations = 0;
  std::size_t blowups = 0;
  long hull_conflicts = 0;
  double span_B = 0.0;
  double slack = 0.0;
  double max_increase = 0.0;
  std::vector<AuditViolation> counterexamples;  // first few of each kind
  bool pass = false;
};

/// Samples n_traj selections (controller applied when given) plus the two
/// constant extreme selections, and checks terminal (or whole-horizon)
/// avoidance and that B never rises above its running minimum by more than
/// slack_fraction * span(B).
AuditReport falsify_certificate(const BarrierCertificate& cert, const DifferentialInclusion& di,
                                const UnsafeSet& unsafe, std::size_t n_traj,
                                std::uint64_t seed, const Feedback& controller = nullptr,
                                const AuditOptions& opts = {});

/// x_N + int_{t0}^{t1} F dt for the extrapolated drift (u = 0).
Eigen::VectorXd open_loop_prediction(const ControlAffineModel& model, const Eigen::VectorXd& x0,
                                     double t0, double t1);

nlohmann::json to_json(const Scaling& s);
nlohmann::json to_json(const BarrierCertificate& cert);
nlohmann::json to_json(const ProbeRecord& p);
nlohmann::json to_json(const AuditReport& r);
nlohmann::json to_json(const SafeController& c);
nlohmann::json to_json(const HorizonSweepResult& r);
std::string to_string(SynthesisForm f);

}  // namespace inclusioncert

#endif  // INCLUSIONCERT_CERTIFY_H_
