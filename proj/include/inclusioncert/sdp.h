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

#ifndef INCLUSIONCERT_SDP_H_
#define INCLUSIONCERT_SDP_H_

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace inclusioncert {

/// One entry of a symmetric block matrix, zero-based, row <= col. Diagonal
/// (LP) blocks only carry row == col entries.
struct SdpEntry {
  int block = 0;
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// A coefficient of a free variable in an equality row.
struct FreeEntry {
  int constraint = 0;
  int variable = 0;
  double value = 0.0;
};

/// minimize C.X + c_f'x_f  s.t.  A_i.X + (A_f x_f)_i = b_i,  X psd,  x_f free.
/// The dual is  max b'y  s.t.  C - sum y_i A_i = S psd,  A_f'y = c_f.
struct SdpStandardForm {
  std::vector<int> block_sizes;  // negative size: diagonal block
  std::vector<SdpEntry> cost;
  std::vector<std::vector<SdpEntry>> constraints;
  Eigen::VectorXd b;
  int num_free = 0;
  std::vector<FreeEntry> free_entries;
  Eigen::VectorXd free_cost;

  std::size_t num_constraints() const { return constraints.size(); }
  int block_dim(int block) const {
    return block_sizes[block] < 0 ? -block_sizes[block] : block_sizes[block];
  }
  bool is_diagonal(int block) const { return block_sizes[block] < 0; }
  /// Throws std::invalid_argument on inconsistent dimensions, row > col,
  /// off-diagonal entries in diagonal blocks, or non-finite data.
  void validate() const;
};

enum class SdpStatus {
  kOptimal,
  kPrimalInfeasible,
  kDualInfeasible,
  kMaxIter,
  kNumericalFailure,
};

std::string to_string(SdpStatus status);

struct SolverConfig {
  double primal_tolerance = 1e-8;
  double dual_tolerance = 1e-8;
  double gap_tolerance = 1e-8;
  double infeasibility_ratio = 1e8;
  int max_iter = 200;
  double step_fraction = 0.98;
  /// Centering target is at least floor * mu_0 * infeas / infeas_0.
  double centrality_floor = 0.1;
  /// Multiplies max(|b|_inf, |C|_F, 1) for the starting X = S = xi I.
  double initial_scale = 1.0;
  bool keep_history = true;

  void validate() const;
};

struct IterateLog {
  int iteration = 0;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double complementarity = 0.0;  // X.S
  double step_primal = 0.0;
  double step_dual = 0.0;
};

struct KktResiduals {
  double primal = 0.0;  // |b - A(X) - A_f x_f| / (1 + |b|)
  double dual = 0.0;    // (|C - A*(y) - S|_F + |c_f - A_f'y|) / (1 + |C|_F + |c_f|)
  double gap = 0.0;     // |pobj - dobj| / (1 + |pobj| + |dobj|)
  double primal_objective = 0.0;
  double dual_objective = 0.0;
};

struct SdpSolution {
  SdpStatus status = SdpStatus::kNumericalFailure;
  /// Dense per-block matrices; diagonal blocks are stored as dense diagonal
  /// matrices.
  std::vector<Eigen::MatrixXd> X;
  std::vector<Eigen::MatrixXd> S;
  Eigen::VectorXd y;
  Eigen::VectorXd x_free;
  KktResiduals residuals;
  /// Residuals as tracked inside the iteration loop.
  KktResiduals loop_residuals;
  int iterations = 0;
  std::vector<IterateLog> history;
  std::string message;
};

/// Residuals of (X, y, S, x_f) recomputed from scratch.
KktResiduals compute_residuals(const SdpStandardForm& problem,
                               const std::vector<Eigen::MatrixXd>& X,
                               const Eigen::VectorXd& y,
                               const std::vector<Eigen::MatrixXd>& S,
                               const Eigen::VectorXd& x_free);

/// Infeasible-start primal-dual interior point method, HKM direction with
/// Mehrotra predictor-corrector. Deterministic.
SdpSolution solve_sdp(const SdpStandardForm& problem,
                      const SolverConfig& config = {});

}  // namespace inclusioncert

#endif  // INCLUSIONCERT_SDP_H_
