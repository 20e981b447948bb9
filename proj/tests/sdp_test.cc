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

#include "inclusioncert/sdp.h"

#include <random>

#include <Eigen/Eigenvalues>

#include <gtest/gtest.h>

#include "inclusioncert/sdpa.h"

namespace inclusioncert {
namespace {

// min tr(X) s.t. X11 = 1, X psd (2x2).
SdpStandardForm trace_problem() {
  SdpStandardForm p;
  p.block_sizes = {2};
  p.cost = {{0, 0, 0, 1.0}, {0, 1, 1, 1.0}};
  p.constraints = {{{0, 0, 0, 1.0}}};
  p.b = Eigen::VectorXd::Constant(1, 1.0);
  p.free_cost = Eigen::VectorXd(0);
  return p;
}

TEST(Sdp, TraceMinimization) {
  const auto sol = solve_sdp(trace_problem());
  ASSERT_EQ(sol.status, SdpStatus::kOptimal) << sol.message;
  EXPECT_NEAR(sol.residuals.primal_objective, 1.0, 1e-7);
  EXPECT_NEAR(sol.X[0](0, 0), 1.0, 1e-7);
  EXPECT_NEAR(sol.X[0](1, 1), 0.0, 1e-7);
  EXPECT_NEAR(sol.X[0](0, 1), 0.0, 1e-7);
}

TEST(Sdp, PinnedZeroDiagonal) {
  // X00 = 0 forces row 0 to vanish; then X11 = 1 - 2 X01 = 1.
  // min tr(X) + X02 over a 3x3 block.
  SdpStandardForm p;
  p.block_sizes = {3, -1};
  p.cost = {{0, 0, 0, 1.0}, {0, 1, 1, 1.0}, {0, 2, 2, 1.0}, {0, 0, 2, 0.5}};
  p.constraints = {{{0, 0, 0, 2.0}}, {{0, 0, 1, 1.0}, {0, 1, 1, 1.0}}, {{1, 0, 0, 1.0}}};
  p.b = Eigen::Vector3d(0.0, 1.0, 0.0);
  p.free_cost = Eigen::VectorXd(0);
  const auto sol = solve_sdp(p);
  ASSERT_EQ(sol.status, SdpStatus::kOptimal) << sol.message;
  EXPECT_NEAR(sol.residuals.primal_objective, 1.0, 1e-7);
  EXPECT_LE(sol.residuals.primal, 1e-8);
  EXPECT_LE(sol.residuals.dual, 1e-8);
  EXPECT_LE(sol.residuals.gap, 1e-8);
  EXPECT_NEAR(sol.residuals.primal, sol.loop_residuals.primal, 1e-12);
  EXPECT_NEAR(sol.residuals.dual, sol.loop_residuals.dual, 1e-12);
  EXPECT_EQ(sol.X[0](0, 0), 0.0);
  EXPECT_EQ(sol.X[1](0, 0), 0.0);
  // Cholesky, since the lifted slack has norm ~1/S11 and eigenvalues of that
  // spread are below eigensolver resolution.
  for (const auto& s : sol.S) EXPECT_EQ(Eigen::LLT<Eigen::MatrixXd>(s).info(), Eigen::Success);
}

TEST(Sdp, EmptyRowWithNonzeroRhsIsInfeasible) {
  SdpStandardForm p;
  p.block_sizes = {2};
  p.constraints = {{{0, 0, 0, 1.0}}, {{0, 0, 1, 1.0}}};
  p.b = Eigen::Vector2d(0.0, 1.0);
  p.free_cost = Eigen::VectorXd(0);
  EXPECT_EQ(solve_sdp(p).status, SdpStatus::kPrimalInfeasible);
}

TEST(Sdp, HandLoweredSosMargin) {
  // max c s.t. x^2 + 1 - c = [1 x] G [1 x]'. Coefficient rows:
  // 1: G00 + c = 1; x: 2 G01 = 0; x^2: G11 = 1. c is free, cost -c.
  SdpStandardForm p;
  p.block_sizes = {2};
  p.constraints = {{{0, 0, 0, 1.0}}, {{0, 0, 1, 1.0}}, {{0, 1, 1, 1.0}}};
  p.b = Eigen::Vector3d(1.0, 0.0, 1.0);
  p.num_free = 1;
  p.free_entries = {{0, 0, 1.0}};
  p.free_cost = Eigen::VectorXd::Constant(1, -1.0);
  const auto sol = solve_sdp(p);
  ASSERT_EQ(sol.status, SdpStatus::kOptimal) << sol.message;
  EXPECT_NEAR(sol.x_free(0), 1.0, 1e-7);
}

TEST(Sdp, SignContradictionIsPrimalInfeasible) {
  auto p = trace_problem();
  p.b(0) = -1.0;
  const auto sol = solve_sdp(p);
  EXPECT_EQ(sol.status, SdpStatus::kPrimalInfeasible) << sol.message;
}

TEST(Sdp, UnboundedIsDualInfeasible) {
  // min -X11 with no constraint on X11.
  SdpStandardForm p;
  p.block_sizes = {2};
  p.cost = {{0, 0, 0, -1.0}};
  p.constraints = {{{0, 1, 1, 1.0}}};
  p.b = Eigen::VectorXd::Constant(1, 1.0);
  p.free_cost = Eigen::VectorXd(0);
  EXPECT_EQ(solve_sdp(p).status, SdpStatus::kDualInfeasible);
}

TEST(Sdp, LpBlock) {
  // min x1 + 2 x2 s.t. x1 + x2 = 1, x >= 0.
  SdpStandardForm p;
  p.block_sizes = {-2};
  p.cost = {{0, 0, 0, 1.0}, {0, 1, 1, 2.0}};
  p.constraints = {{{0, 0, 0, 1.0}, {0, 1, 1, 1.0}}};
  p.b = Eigen::VectorXd::Constant(1, 1.0);
  p.free_cost = Eigen::VectorXd(0);
  const auto sol = solve_sdp(p);
  ASSERT_EQ(sol.status, SdpStatus::kOptimal);
  EXPECT_NEAR(sol.X[0](0, 0), 1.0, 1e-7);
}

TEST(Sdp, RejectsBadInput) {
  auto p = trace_problem();
  p.constraints[0][0].row = 1;
  p.constraints[0][0].col = 0;
  EXPECT_THROW(solve_sdp(p), std::invalid_argument);
  SolverConfig cfg;
  cfg.step_fraction = 1.0;
  EXPECT_THROW(solve_sdp(trace_problem(), cfg), std::invalid_argument);
}

// Random problem with known interior points on both sides.
SdpStandardForm random_problem(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dim(2, 6);
  std::normal_distribution<double> g(0.0, 1.0);
  SdpStandardForm p;
  const int nblocks = 1 + static_cast<int>(rng() % 3);
  for (int k = 0; k < nblocks; ++k) p.block_sizes.push_back(dim(rng));
  p.block_sizes.push_back(-dim(rng));
  int total = 0;
  for (std::size_t k = 0; k < p.block_sizes.size(); ++k) total += std::abs(p.block_sizes[k]);
  const int m = 3 + static_cast<int>(rng() % static_cast<unsigned>(total));
  std::vector<Eigen::MatrixXd> x0, s0;
  for (int s : p.block_sizes) {
    const int d = std::abs(s);
    Eigen::MatrixXd r(d, d), q(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        r(i, j) = g(rng);
        q(i, j) = g(rng);
      }
    Eigen::MatrixXd a = r * r.transpose() + 0.5 * Eigen::MatrixXd::Identity(d, d);
    Eigen::MatrixXd c = q * q.transpose() + 0.5 * Eigen::MatrixXd::Identity(d, d);
    if (s < 0) {
      a = Eigen::MatrixXd(a.diagonal().asDiagonal());
      c = Eigen::MatrixXd(c.diagonal().asDiagonal());
    }
    x0.push_back(a);
    s0.push_back(c);
  }
  Eigen::VectorXd y0(m);
  for (int i = 0; i < m; ++i) y0(i) = g(rng);
  p.b = Eigen::VectorXd::Zero(m);
  std::vector<Eigen::MatrixXd> cmat = s0;
  std::uniform_real_distribution<double> keep(0.0, 1.0);
  for (int i = 0; i < m; ++i) {
    std::vector<SdpEntry> row;
    for (std::size_t k = 0; k < p.block_sizes.size(); ++k) {
      const int d = std::abs(p.block_sizes[k]);
      for (int r = 0; r < d; ++r) {
        for (int c = r; c < d; ++c) {
          if (p.block_sizes[k] < 0 && r != c) continue;
          if (keep(rng) > 0.35) continue;
          const double v = g(rng);
          row.push_back({static_cast<int>(k), r, c, v});
          const double f = r == c ? 1.0 : 2.0;
          p.b(i) += f * v * x0[k](r, c);
          cmat[k](r, c) += y0(i) * v;
          if (r != c) cmat[k](c, r) += y0(i) * v;
        }
      }
    }
    p.constraints.push_back(row);
  }
  for (std::size_t k = 0; k < cmat.size(); ++k) {
    const int d = std::abs(p.block_sizes[k]);
    for (int r = 0; r < d; ++r)
      for (int c = r; c < d; ++c)
        if (cmat[k](r, c) != 0.0 && (p.block_sizes[k] > 0 || r == c)) {
          p.cost.push_back({static_cast<int>(k), r, c, cmat[k](r, c)});
        }
  }
  p.free_cost = Eigen::VectorXd(0);
  return p;
}

TEST(SdpProperty, RandomInteriorFeasibleSuite) {
  std::mt19937_64 rng(2026);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_problem(rng);
    const auto sol = solve_sdp(p);
    ASSERT_EQ(sol.status, SdpStatus::kOptimal) << "trial " << trial << ": " << sol.message;
    EXPECT_LE(sol.residuals.primal, 1e-8);
    EXPECT_LE(sol.residuals.dual, 1e-8);
    EXPECT_LE(sol.residuals.gap, 1e-8);
    // Loop residuals agree with the independent recomputation.
    EXPECT_NEAR(sol.residuals.primal, sol.loop_residuals.primal, 1e-12);
    EXPECT_NEAR(sol.residuals.dual, sol.loop_residuals.dual, 1e-12);
    EXPECT_NEAR(sol.residuals.gap, sol.loop_residuals.gap, 1e-12);
    // Weak duality: pobj - dobj equals X.S up to residual terms; on
    // (near-)feasible iterates it is nonnegative.
    for (const auto& it : sol.history) {
      if (it.primal_residual < 1e-10 && it.dual_residual < 1e-10) {
        const double scale = 1.0 + std::abs(it.primal_objective) + std::abs(it.dual_objective);
        EXPECT_GE(it.primal_objective - it.dual_objective, -1e-9 * scale);
      }
    }
  }
}

TEST(SdpProperty, Deterministic) {
  std::mt19937_64 rng(99);
  const auto p = random_problem(rng);
  const auto a = solve_sdp(p);
  const auto b = solve_sdp(p);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.y, b.y);
  for (std::size_t k = 0; k < a.X.size(); ++k) EXPECT_EQ(a.X[k], b.X[k]);
}

TEST(Sdpa, TraceProblemRoundTrip) {
  const auto p = trace_problem();
  const auto text = export_sdpa(p);
  // Comment, m, nblocks, sizes, b.
  std::istringstream is(text);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(is, line)) lines.push_back(line);
  ASSERT_GE(lines.size(), 5u);
  EXPECT_EQ(lines[1], "1");
  EXPECT_EQ(lines[2], "1");
  EXPECT_EQ(lines[3], "2");
  EXPECT_EQ(lines[4], "1");
  EXPECT_TRUE(identical(parse_sdpa(text), canonicalize(p)));
}

TEST(Sdpa, DiagonalAndFreeRoundTrip) {
  SdpStandardForm p;
  p.block_sizes = {-3, 2};
  p.cost = {{0, 1, 1, 0.1}, {1, 0, 1, -1.0 / 3.0}};
  p.constraints = {{{0, 0, 0, 1.0}, {1, 1, 1, 2.0}}, {{0, 2, 2, std::acos(-1.0)}}};
  p.b = Eigen::Vector2d(1.0 / 7.0, 2.0);
  p.num_free = 2;
  p.free_entries = {{0, 1, 0.3}, {1, 0, -1e-17}};
  p.free_cost = Eigen::Vector2d(-1.0, 1e300);
  const auto q = parse_sdpa(export_sdpa(p));
  EXPECT_TRUE(identical(q, canonicalize(p)));
  EXPECT_EQ(q.block_sizes[0], -3);
}

TEST(Sdpa, AcceptsCommentsAndOddWhitespace) {
  const std::string text =
      "\"a title line\n"
      "* another comment\n"
      "  1  = mDIM\n"
      "1 = nBLOCK\n"
      "{2}\n"
      "{1.0}\n"
      "0 1 1 1 -1\n"
      "\t0,1,2,2,-1\n"
      "1 1 1 1   1.0\n"
      "\n";
  EXPECT_TRUE(identical(parse_sdpa(text), canonicalize(trace_problem())));
}

TEST(Sdpa, MalformedReportsLine) {
  const std::string text = "1\n1\n2\n1.0\n0 1 1 1\n";
  try {
    parse_sdpa(text);
    FAIL();
  } catch (const SdpaParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 5"), std::string::npos) << e.what();
  }
}

TEST(Sdpa, ImportSolution) {
  const auto p = trace_problem();
  const std::string out =
      "phase.value = pdOPT\n"
      "objValPrimal = 1.0\n"
      "xVec = \n{-1.0}\n"
      "xMat = \n{\n{ {0.0, 0.0}, {0.0, 1.0} }\n}\n"
      "yMat = \n{\n{ {1.0, 0.0}, {0.0, 0.0} }\n}\n";
  const auto sol = import_sdpa_solution(out, p);
  EXPECT_EQ(sol.status, SdpStatus::kOptimal);
  EXPECT_DOUBLE_EQ(sol.y(0), 1.0);
  EXPECT_LE(sol.residuals.primal, 1e-15);
  EXPECT_LE(sol.residuals.dual, 1e-15);
}

}  // namespace
}  // namespace inclusioncert
