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

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace inclusioncert {

std::string to_string(SdpStatus status) {
  switch (status) {
    case SdpStatus::kOptimal: return "optimal";
    case SdpStatus::kPrimalInfeasible: return "primal_infeasible";
    case SdpStatus::kDualInfeasible: return "dual_infeasible";
    case SdpStatus::kMaxIter: return "max_iter";
    case SdpStatus::kNumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

void SolverConfig::validate() const {
  if (!(primal_tolerance > 0 && dual_tolerance > 0 && gap_tolerance > 0)) {
    throw std::invalid_argument("solver tolerances must be positive");
  }
  if (!(step_fraction > 0 && step_fraction < 1)) {
    throw std::invalid_argument("step fraction must lie in (0, 1)");
  }
  if (max_iter < 1 || !(infeasibility_ratio > 1) || !(initial_scale > 0)) {
    throw std::invalid_argument("invalid solver configuration");
  }
}

void SdpStandardForm::validate() const {
  const int nb = static_cast<int>(block_sizes.size());
  for (int s : block_sizes) {
    if (s == 0) throw std::invalid_argument("block size 0");
  }
  auto check = [&](const SdpEntry& e) {
    if (e.block < 0 || e.block >= nb) throw std::invalid_argument("bad block index");
    const int d = block_dim(e.block);
    if (e.row < 0 || e.col < 0 || e.row >= d || e.col >= d) {
      throw std::invalid_argument("entry outside its block");
    }
    if (e.row > e.col) throw std::invalid_argument("entries must have row <= col");
    if (is_diagonal(e.block) && e.row != e.col) {
      throw std::invalid_argument("off-diagonal entry in a diagonal block");
    }
    if (!std::isfinite(e.value)) throw std::invalid_argument("non-finite entry");
  };
  for (const auto& e : cost) check(e);
  for (const auto& row : constraints) {
    for (const auto& e : row) check(e);
  }
  if (static_cast<std::size_t>(b.size()) != constraints.size()) {
    throw std::invalid_argument("len(b) != number of constraints");
  }
  if (!b.allFinite()) throw std::invalid_argument("non-finite b");
  if (num_free < 0 || free_cost.size() != num_free || !free_cost.allFinite()) {
    throw std::invalid_argument("free variable cost has wrong size");
  }
  for (const auto& f : free_entries) {
    if (f.constraint < 0 || f.constraint >= static_cast<int>(constraints.size()) ||
        f.variable < 0 || f.variable >= num_free || !std::isfinite(f.value)) {
      throw std::invalid_argument("bad free-variable entry");
    }
  }
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Diagonal blocks are held as n x 1 columns.
using Blocks = std::vector<MatrixXd>;

struct Term {
  int row;
  int col;
  double value;
};

struct BlockRow {
  int constraint;
  std::vector<Term> terms;  // symmetric expansion
};

class Model {
 public:
  explicit Model(const SdpStandardForm& p) : p_(p) {
    const int nb = static_cast<int>(p.block_sizes.size());
    rows_.resize(nb);
    for (std::size_t i = 0; i < p.constraints.size(); ++i) {
      std::vector<std::vector<Term>> per(nb);
      for (const auto& e : p.constraints[i]) {
        per[e.block].push_back({e.row, e.col, e.value});
        if (e.row != e.col) per[e.block].push_back({e.col, e.row, e.value});
      }
      for (int k = 0; k < nb; ++k) {
        if (!per[k].empty()) rows_[k].push_back({static_cast<int>(i), std::move(per[k])});
      }
    }
    cost_ = zeros();
    for (const auto& e : p.cost) add_entry(cost_, e, 1.0);
    free_ = MatrixXd::Zero(static_cast<Eigen::Index>(p.constraints.size()), p.num_free);
    for (const auto& f : p.free_entries) free_(f.constraint, f.variable) += f.value;
    total_dim_ = 0;
    for (int k = 0; k < nb; ++k) total_dim_ += p.block_dim(k);
  }

  const SdpStandardForm& problem() const { return p_; }
  const Blocks& cost() const { return cost_; }
  const MatrixXd& free() const { return free_; }
  int total_dim() const { return total_dim_; }
  Eigen::Index m() const { return static_cast<Eigen::Index>(p_.constraints.size()); }
  bool diag(int k) const { return p_.is_diagonal(k); }

  Blocks zeros() const {
    Blocks z;
    for (std::size_t k = 0; k < p_.block_sizes.size(); ++k) {
      const int d = p_.block_dim(static_cast<int>(k));
      z.push_back(diag(static_cast<int>(k)) ? MatrixXd::Zero(d, 1) : MatrixXd::Zero(d, d));
    }
    return z;
  }
  Blocks identity(double s) const {
    Blocks z = zeros();
    for (std::size_t k = 0; k < z.size(); ++k) {
      if (diag(static_cast<int>(k))) {
        z[k].setConstant(s);
      } else {
        z[k] = s * MatrixXd::Identity(z[k].rows(), z[k].cols());
      }
    }
    return z;
  }

  // A(Z)_i = tr(A_i Z).
  VectorXd apply(const Blocks& z) const {
    VectorXd out = VectorXd::Zero(m());
    for (std::size_t k = 0; k < rows_.size(); ++k) {
      const bool d = diag(static_cast<int>(k));
      for (const auto& br : rows_[k]) {
        double s = 0.0;
        for (const auto& t : br.terms) s += t.value * (d ? z[k](t.row, 0) : z[k](t.row, t.col));
        out(br.constraint) += s;
      }
    }
    return out;
  }

  Blocks adjoint(const VectorXd& y) const {
    Blocks z = zeros();
    for (std::size_t k = 0; k < rows_.size(); ++k) {
      const bool d = diag(static_cast<int>(k));
      for (const auto& br : rows_[k]) {
        const double w = y(br.constraint);
        if (w == 0.0) continue;
        for (const auto& t : br.terms) {
          if (d) {
            z[k](t.row, 0) += w * t.value;
          } else {
            z[k](t.row, t.col) += w * t.value;
          }
        }
      }
    }
    return z;
  }

  // M_ij = tr(A_i X A_j S^-1).
  MatrixXd schur(const Blocks& x, const Blocks& sinv) const {
    MatrixXd mm = MatrixXd::Zero(m(), m());
    for (std::size_t k = 0; k < rows_.size(); ++k) {
      const auto& rows = rows_[k];
      if (diag(static_cast<int>(k))) {
        for (std::size_t a = 0; a < rows.size(); ++a) {
          for (std::size_t b = a; b < rows.size(); ++b) {
            double s = 0.0;
            for (const auto& ta : rows[a].terms) {
              for (const auto& tb : rows[b].terms) {
                if (ta.row == tb.row) s += ta.value * tb.value * x[k](ta.row, 0) * sinv[k](ta.row, 0);
              }
            }
            mm(rows[a].constraint, rows[b].constraint) += s;
          }
        }
        continue;
      }
      const MatrixXd& xk = x[k];
      const MatrixXd& sk = sinv[k];
      for (std::size_t a = 0; a < rows.size(); ++a) {
        for (std::size_t b = a; b < rows.size(); ++b) {
          double s = 0.0;
          for (const auto& ta : rows[a].terms) {
            for (const auto& tb : rows[b].terms) {
              s += ta.value * tb.value * xk(ta.col, tb.row) * sk(tb.col, ta.row);
            }
          }
          mm(rows[a].constraint, rows[b].constraint) += s;
        }
      }
    }
    // Only one triangle was filled per pair; pairs are ordered by block
    // position, so fold both triangles together.
    MatrixXd sym = mm + mm.transpose();
    sym.diagonal() = mm.diagonal();
    return sym;
  }

 private:
  void add_entry(Blocks& z, const SdpEntry& e, double s) const {
    if (diag(e.block)) {
      z[e.block](e.row, 0) += s * e.value;
    } else {
      z[e.block](e.row, e.col) += s * e.value;
      if (e.row != e.col) z[e.block](e.col, e.row) += s * e.value;
    }
  }

  const SdpStandardForm& p_;
  std::vector<std::vector<BlockRow>> rows_;
  Blocks cost_;
  MatrixXd free_;
  int total_dim_ = 0;
};

double inner(const Blocks& a, const Blocks& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k].cwiseProduct(b[k]).sum();
  return s;
}

double frob(const Blocks& a) { return std::sqrt(inner(a, a)); }

Blocks axpy(const Blocks& x, double alpha, const Blocks& d) {
  Blocks out = x;
  for (std::size_t k = 0; k < x.size(); ++k) out[k] += alpha * d[k];
  return out;
}

// Largest alpha with x + alpha d psd (infinity if unbounded).
double max_step(const MatrixXd& x, const MatrixXd& d, bool diagonal) {
  if (diagonal) {
    double a = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (d(i, 0) < 0) a = std::min(a, -x(i, 0) / d(i, 0));
    }
    return a;
  }
  Eigen::LLT<MatrixXd> llt(x);
  if (llt.info() != Eigen::Success) return 0.0;
  const MatrixXd l = llt.matrixL();
  MatrixXd z = l.triangularView<Eigen::Lower>().solve(d);
  z = l.triangularView<Eigen::Lower>().solve(MatrixXd(z.transpose())).transpose().eval();
  z = 0.5 * (z + z.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(z, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  return lmin >= 0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

double max_step(const Blocks& x, const Blocks& d, const Model& model) {
  double a = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < x.size(); ++k) {
    a = std::min(a, max_step(x[k], d[k], model.diag(static_cast<int>(k))));
  }
  return a;
}

bool positive_definite(const Blocks& z, const Model& model) {
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (model.diag(static_cast<int>(k))) {
      if (!(z[k].array() > 0).all()) return false;
      continue;
    }
    Eigen::LLT<MatrixXd> llt(z[k]);
    if (llt.info() != Eigen::Success) return false;
  }
  return true;
}

bool invert_blocks(const Blocks& s, const Model& model, Blocks& out) {
  out.resize(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (model.diag(static_cast<int>(k))) {
      if ((s[k].array() <= 0).any()) return false;
      out[k] = s[k].cwiseInverse();
      continue;
    }
    Eigen::LLT<MatrixXd> llt(s[k]);
    if (llt.info() != Eigen::Success) return false;
    out[k] = llt.solve(MatrixXd::Identity(s[k].rows(), s[k].cols()));
    out[k] = (0.5 * (out[k] + out[k].transpose())).eval();
  }
  return true;
}

// a * b * c per block (elementwise for diagonal blocks).
Blocks triple(const Blocks& a, const Blocks& b, const Blocks& c, const Model& model) {
  Blocks out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (model.diag(static_cast<int>(k))) {
      out[k] = a[k].cwiseProduct(b[k]).cwiseProduct(c[k]);
    } else {
      out[k] = a[k] * b[k] * c[k];
    }
  }
  return out;
}

void symmetrize(Blocks& z, const Model& model) {
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (!model.diag(static_cast<int>(k))) z[k] = (0.5 * (z[k] + z[k].transpose())).eval();
  }
}

// Factorization of [M A_f; A_f' 0].
class KktSolver {
 public:
  bool factor(const MatrixXd& m, const MatrixXd& af) {
    m_ = m;
    af_ = af;
    const Eigen::Index nm = m.rows();
    const Eigen::Index nf = af.cols();
    if (nf == 0) {
      const double scale = std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
      double reg = 0.0;
      for (int attempt = 0; attempt < 6; ++attempt) {
        MatrixXd mr = m;
        mr.diagonal().array() += reg;
        llt_.compute(mr);
        if (llt_.info() == Eigen::Success) return true;
        reg = reg == 0.0 ? 1e-12 * scale : reg * 100.0;
      }
      return false;
    }
    // [M Af; Af' 0]. Eliminating the free block through M^{-1} loses too
    // much once M is ill conditioned.
    MatrixXd k(nm + nf, nm + nf);
    k.topLeftCorner(nm, nm) = m;
    k.topRightCorner(nm, nf) = af;
    k.bottomLeftCorner(nf, nm) = af.transpose();
    k.bottomRightCorner(nf, nf).setZero();
    // Ruiz equilibration; M grows like 1/mu while Af stays O(1).
    d_ = VectorXd::Ones(nm + nf);
    for (int pass = 0; pass < 8; ++pass) {
      VectorXd r = k.cwiseAbs().rowwise().maxCoeff();
      for (Eigen::Index i = 0; i < r.size(); ++i) r(i) = r(i) > 0 ? 1.0 / std::sqrt(r(i)) : 1.0;
      k = r.asDiagonal() * k * r.asDiagonal();
      d_.array() *= r.array();
    }
    lu_.compute(k);
    const double piv = lu_.matrixLU().diagonal().cwiseAbs().minCoeff();
    return std::isfinite(piv) && piv > 0.0;
  }

  void solve(const VectorXd& h, const VectorXd& rf, VectorXd& dy, VectorXd& dxf) const {
    raw_solve(h, rf, dy, dxf);
    for (int it = 0; it < 3; ++it) {
      const VectorXd r1 = h - m_ * dy - af_ * dxf;
      const VectorXd r2 = rf - af_.transpose() * dy;
      VectorXd cy, cx;
      raw_solve(r1, r2, cy, cx);
      dy += cy;
      dxf += cx;
    }
  }

 private:
  void raw_solve(const VectorXd& h, const VectorXd& rf, VectorXd& dy, VectorXd& dxf) const {
    if (af_.cols() == 0) {
      dy = llt_.solve(h);
      dxf = VectorXd::Zero(0);
      return;
    }
    VectorXd rhs(h.size() + rf.size());
    rhs << h, rf;
    const VectorXd z = d_.cwiseProduct(lu_.solve(d_.cwiseProduct(rhs)));
    dy = z.head(h.size());
    dxf = z.tail(rf.size());
  }

  MatrixXd m_, af_;
  VectorXd d_;
  Eigen::LLT<MatrixXd> llt_;
  Eigen::PartialPivLU<MatrixXd> lu_;
};

Blocks to_dense_output(const Blocks& z, const Model& model) {
  Blocks out(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    out[k] = model.diag(static_cast<int>(k)) ? MatrixXd(z[k].col(0).asDiagonal()) : z[k];
  }
  return out;
}

}  // namespace

KktResiduals compute_residuals(const SdpStandardForm& p, const std::vector<MatrixXd>& X,
                               const VectorXd& y, const std::vector<MatrixXd>& S,
                               const VectorXd& x_free) {
  const auto m = static_cast<Eigen::Index>(p.constraints.size());
  // Everything is evaluated straight from the entry lists.
  auto sym_get = [](const MatrixXd& z, int r, int c) { return z(r, c); };
  VectorXd ax = VectorXd::Zero(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (const auto& e : p.constraints[i]) {
      const double f = e.row == e.col ? 1.0 : 2.0;
      ax(i) += f * e.value * sym_get(X[e.block], e.row, e.col);
    }
  }
  for (const auto& f : p.free_entries) ax(f.constraint) += f.value * x_free(f.variable);
  const VectorXd rp = p.b - ax;

  std::vector<MatrixXd> rd(S.size());
  double cnorm2 = 0.0;
  for (std::size_t k = 0; k < S.size(); ++k) rd[k] = -S[k];
  auto add_sym = [&](std::vector<MatrixXd>& z, const SdpEntry& e, double w) {
    z[e.block](e.row, e.col) += w * e.value;
    if (e.row != e.col) z[e.block](e.col, e.row) += w * e.value;
  };
  std::vector<MatrixXd> cmat(S.size());
  for (std::size_t k = 0; k < S.size(); ++k) cmat[k] = MatrixXd::Zero(S[k].rows(), S[k].cols());
  for (const auto& e : p.cost) {
    add_sym(rd, e, 1.0);
    add_sym(cmat, e, 1.0);
  }
  for (const auto& c : cmat) cnorm2 += c.squaredNorm();
  for (Eigen::Index i = 0; i < m; ++i) {
    for (const auto& e : p.constraints[i]) add_sym(rd, e, -y(i));
  }
  double rd2 = 0.0;
  for (const auto& r : rd) rd2 += r.squaredNorm();
  VectorXd rf = p.free_cost;
  for (const auto& f : p.free_entries) rf(f.variable) -= f.value * y(f.constraint);

  KktResiduals out;
  double pobj = p.free_cost.dot(x_free);
  for (std::size_t k = 0; k < X.size(); ++k) pobj += cmat[k].cwiseProduct(X[k]).sum();
  const double dobj = p.b.dot(y);
  out.primal_objective = pobj;
  out.dual_objective = dobj;
  out.primal = rp.norm() / (1.0 + p.b.norm());
  out.dual = (std::sqrt(rd2) + rf.norm()) / (1.0 + std::sqrt(cnorm2) + p.free_cost.norm());
  out.gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
  return out;
}

namespace {

SdpSolution solve_core(const SdpStandardForm& problem, const SolverConfig& cfg,
                       double cost_norm) {
  const Model model(problem);
  const auto m = model.m();
  const int nf = problem.num_free;
  const VectorXd& b = problem.b;
  const VectorXd& cf = problem.free_cost;
  const MatrixXd& af = model.free();
  const double cnorm = cost_norm;

  const double xi = cfg.initial_scale *
                    std::max({b.size() > 0 ? b.cwiseAbs().maxCoeff() : 0.0, cnorm, 1.0});
  Blocks X = model.identity(xi);
  Blocks S = model.identity(xi);
  VectorXd y = VectorXd::Zero(m);
  VectorXd xf = VectorXd::Zero(nf);

  SdpSolution sol;
  int stalls = 0;
  double mu0 = 0.0;
  double infeas0 = 0.0;
  // Best KKT merit seen; max_iter and numerical failures hand this back.
  struct Snapshot {
    Blocks X, S;
    VectorXd y, xf;
    KktResiduals lr;
    int iter = -1;
    double merit = std::numeric_limits<double>::infinity();
  } best;
  auto finish = [&](SdpStatus st, std::string msg) {
    if ((st == SdpStatus::kMaxIter || st == SdpStatus::kNumericalFailure) && best.iter >= 0) {
      X = best.X;
      S = best.S;
      y = best.y;
      xf = best.xf;
      sol.loop_residuals = best.lr;
      msg += "; best iterate " + std::to_string(best.iter);
    }
    sol.status = st;
    sol.message = std::move(msg);
    sol.X = to_dense_output(X, model);
    sol.S = to_dense_output(S, model);
    sol.y = y;
    sol.x_free = xf;
    sol.residuals = compute_residuals(problem, sol.X, sol.y, sol.S, sol.x_free);
    return sol;
  };

  for (int iter = 0;; ++iter) {
    const VectorXd rp = b - model.apply(X) - af * xf;
    Blocks rd = model.adjoint(y);
    for (std::size_t k = 0; k < rd.size(); ++k) rd[k] = model.cost()[k] - rd[k] - S[k];
    const VectorXd rf = cf - af.transpose() * y;
    const double pobj = inner(model.cost(), X) + cf.dot(xf);
    const double dobj = b.dot(y);
    const double xs = inner(X, S);
    const double mu = xs / model.total_dim();

    KktResiduals& lr = sol.loop_residuals;
    lr.primal_objective = pobj;
    lr.dual_objective = dobj;
    lr.primal = rp.norm() / (1.0 + b.norm());
    lr.dual = (frob(rd) + rf.norm()) / (1.0 + cnorm + cf.norm());
    lr.gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    sol.iterations = iter;
    if (iter == 0) {
      mu0 = mu;
      infeas0 = std::max(lr.primal, lr.dual);
    }

    const double merit = std::max({lr.primal, lr.dual, lr.gap});
    if (std::isfinite(merit) && merit < best.merit) {
      best = {X, S, y, xf, lr, iter, merit};
    }
    if (lr.primal <= cfg.primal_tolerance && lr.dual <= cfg.dual_tolerance &&
        lr.gap <= cfg.gap_tolerance) {
      return finish(SdpStatus::kOptimal, "converged");
    }
    // Infeasibility rays.
    if (dobj > 0) {
      Blocks ray = model.adjoint(y);
      for (std::size_t k = 0; k < ray.size(); ++k) ray[k] += S[k];
      const double r = (frob(ray) + (af.transpose() * y).norm()) / dobj;
      if (r * cfg.infeasibility_ratio < 1.0) {
        return finish(SdpStatus::kPrimalInfeasible, "dual ray found: b'y > 0, A*(y) <= 0");
      }
    }
    if (pobj < 0) {
      const double r = (model.apply(X) + af * xf).norm() / (-pobj);
      if (r * cfg.infeasibility_ratio < 1.0) {
        return finish(SdpStatus::kDualInfeasible, "primal ray found: C.X < 0, A(X) = 0");
      }
    }
    if (iter >= cfg.max_iter) return finish(SdpStatus::kMaxIter, "iteration limit");
    if (iter - best.iter >= 30) return finish(SdpStatus::kNumericalFailure, "no progress");

    Blocks sinv;
    if (!invert_blocks(S, model, sinv)) {
      return finish(SdpStatus::kNumericalFailure, "dual slack lost definiteness");
    }
    KktSolver kkt;
    if (!kkt.factor(model.schur(X, sinv), af)) {
      return finish(SdpStatus::kNumericalFailure,
                    "Schur complement not positive definite after regularization");
    }
    const Blocks x_rd_sinv = triple(X, rd, sinv, model);
    const VectorXd a_xrs = model.apply(x_rd_sinv);

    auto direction = [&](const Blocks& rc, Blocks& dX, VectorXd& dy, Blocks& dS,
                         VectorXd& dxf) {
      const VectorXd h = rp - model.apply(rc) + a_xrs;
      kkt.solve(h, rf, dy, dxf);
      const Blocks ady = model.adjoint(dy);
      dS = rd;
      for (std::size_t k = 0; k < dS.size(); ++k) dS[k] -= ady[k];
      const Blocks xdss = triple(X, dS, sinv, model);
      dX = rc;
      for (std::size_t k = 0; k < dX.size(); ++k) dX[k] -= xdss[k];
      symmetrize(dX, model);
    };

    // Predictor.
    Blocks rc(X.size());
    for (std::size_t k = 0; k < X.size(); ++k) rc[k] = -X[k];
    Blocks dXa, dSa;
    VectorXd dya, dxfa;
    direction(rc, dXa, dya, dSa, dxfa);
    const double ap_a = std::min(1.0, max_step(X, dXa, model));
    const double ad_a = std::min(1.0, max_step(S, dSa, model));
    const double mu_aff =
        inner(axpy(X, ap_a, dXa), axpy(S, ad_a, dSa)) / model.total_dim();
    double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);
    // Complementarity may not outrun feasibility, or X hits the boundary
    // with A(X) != b and the primal step collapses.
    if (infeas0 > 0) {
      const double floor = cfg.centrality_floor * mu0 * std::max(lr.primal, lr.dual) / infeas0;
      sigma = std::clamp(std::max(sigma, floor / mu), 0.0, 1.0);
    }

    // Corrector.
    const Blocks second = triple(dXa, dSa, sinv, model);
    for (std::size_t k = 0; k < X.size(); ++k) {
      rc[k] = sigma * mu * sinv[k] - X[k] - second[k];
    }
    Blocks dX, dS;
    VectorXd dy, dxf;
    direction(rc, dX, dy, dS, dxf);
    const double ap = std::min(1.0, cfg.step_fraction * max_step(X, dX, model));
    const double ad = std::min(1.0, cfg.step_fraction * max_step(S, dS, model));
    if (!std::isfinite(ap) || !std::isfinite(ad) || !dy.allFinite() || !dxf.allFinite()) {
      return finish(SdpStatus::kNumericalFailure, "non-finite search direction");
    }
    // Rounding can still leave a nearly singular iterate outside the cone.
    double ap_ok = ap;
    double ad_ok = ad;
    Blocks Xn = axpy(X, ap_ok, dX);
    for (int bt = 0; bt < 40 && !positive_definite(Xn, model); ++bt) {
      ap_ok *= 0.8;
      Xn = axpy(X, ap_ok, dX);
    }
    Blocks Sn = axpy(S, ad_ok, dS);
    for (int bt = 0; bt < 40 && !positive_definite(Sn, model); ++bt) {
      ad_ok *= 0.8;
      Sn = axpy(S, ad_ok, dS);
    }
    if (!positive_definite(Xn, model) || !positive_definite(Sn, model)) {
      return finish(SdpStatus::kNumericalFailure, "no step keeps the iterates definite");
    }
    X = std::move(Xn);
    xf += ap_ok * dxf;
    S = std::move(Sn);
    y += ad_ok * dy;

    if (cfg.keep_history) {
      sol.history.push_back({iter, pobj, dobj, lr.primal, lr.dual, xs, ap, ad});
    }
    stalls = (ap < 1e-8 && ad < 1e-8) ? stalls + 1 : 0;
    if (stalls >= 3) return finish(SdpStatus::kNumericalFailure, "step lengths stalled");
  }
}

// A row that reads a * X_ii = 0 with nothing else live forces row and column i
// of that block to vanish. Such rows are common in Gram lowerings (a monomial
// whose square never appears) and leave the primal without an interior.
struct Pin {
  int block;
  int index;
  int row;
  double coef;
};

struct Reduction {
  SdpStandardForm reduced;
  std::vector<std::vector<int>> kept;
  std::vector<int> block_map;
  std::vector<int> row_map;
  std::vector<Pin> pins;
  int bad_row = -1;
};

Reduction presolve(const SdpStandardForm& p) {
  Reduction red;
  const int nb = static_cast<int>(p.block_sizes.size());
  const int m = static_cast<int>(p.constraints.size());
  std::vector<std::vector<char>> gone(static_cast<std::size_t>(nb));
  for (int k = 0; k < nb; ++k) gone[k].assign(static_cast<std::size_t>(p.block_dim(k)), 0);
  std::vector<char> row_gone(static_cast<std::size_t>(m), 0);
  std::vector<char> has_free(static_cast<std::size_t>(m), 0);
  for (const auto& f : p.free_entries) {
    if (f.value != 0.0) has_free[f.constraint] = 1;
  }

  for (bool changed = true; changed;) {
    changed = false;
    for (int r = 0; r < m; ++r) {
      if (row_gone[r] || has_free[r]) continue;
      std::map<std::tuple<int, int, int>, double> live;
      for (const auto& e : p.constraints[r]) {
        if (gone[e.block][e.row] || gone[e.block][e.col]) continue;
        live[{e.block, e.row, e.col}] += e.value;
      }
      std::erase_if(live, [](const auto& kv) { return kv.second == 0.0; });
      if (live.empty()) {
        if (p.b(r) != 0.0) {
          red.bad_row = r;
          return red;
        }
        row_gone[r] = 1;
        changed = true;
      } else if (live.size() == 1 && p.b(r) == 0.0) {
        const auto& [key, v] = *live.begin();
        const auto [blk, i, j] = key;
        if (i != j) continue;
        gone[blk][i] = 1;
        row_gone[r] = 1;
        red.pins.push_back({blk, i, r, v});
        changed = true;
      }
    }
  }
  if (red.pins.empty()) return red;

  SdpStandardForm& q = red.reduced;
  red.kept.resize(static_cast<std::size_t>(nb));
  red.block_map.assign(static_cast<std::size_t>(nb), -1);
  std::vector<std::vector<int>> index_map(static_cast<std::size_t>(nb));
  for (int k = 0; k < nb; ++k) {
    index_map[k].assign(gone[k].size(), -1);
    for (std::size_t i = 0; i < gone[k].size(); ++i) {
      if (gone[k][i]) continue;
      index_map[k][i] = static_cast<int>(red.kept[k].size());
      red.kept[k].push_back(static_cast<int>(i));
    }
    if (red.kept[k].empty()) continue;
    red.block_map[k] = static_cast<int>(q.block_sizes.size());
    const int n = static_cast<int>(red.kept[k].size());
    q.block_sizes.push_back(p.is_diagonal(k) ? -n : n);
  }
  auto map_entry = [&](const SdpEntry& e, SdpEntry& out) {
    const int nbk = red.block_map[e.block];
    if (nbk < 0) return false;
    const int i = index_map[e.block][e.row];
    const int j = index_map[e.block][e.col];
    if (i < 0 || j < 0) return false;
    out = {nbk, i, j, e.value};
    return true;
  };
  SdpEntry t{};
  for (const auto& e : p.cost) {
    if (map_entry(e, t)) q.cost.push_back(t);
  }
  red.row_map.assign(static_cast<std::size_t>(m), -1);
  std::vector<double> b;
  for (int r = 0; r < m; ++r) {
    if (row_gone[r]) continue;
    red.row_map[r] = static_cast<int>(q.constraints.size());
    q.constraints.emplace_back();
    for (const auto& e : p.constraints[r]) {
      if (map_entry(e, t)) q.constraints.back().push_back(t);
    }
    b.push_back(p.b(r));
  }
  q.b = Eigen::Map<VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
  q.num_free = p.num_free;
  q.free_cost = p.free_cost;
  for (const auto& f : p.free_entries) {
    if (red.row_map[f.constraint] >= 0) {
      q.free_entries.push_back({red.row_map[f.constraint], f.variable, f.value});
    }
  }
  return red;
}

// C - A*(y), dense per block.
std::vector<MatrixXd> dual_slack(const SdpStandardForm& p, const VectorXd& y) {
  std::vector<MatrixXd> s;
  for (std::size_t k = 0; k < p.block_sizes.size(); ++k) {
    const int d = p.block_dim(static_cast<int>(k));
    s.push_back(MatrixXd::Zero(d, d));
  }
  auto add = [&](const SdpEntry& e, double w) {
    s[e.block](e.row, e.col) += w * e.value;
    if (e.row != e.col) s[e.block](e.col, e.row) += w * e.value;
  };
  for (const auto& e : p.cost) add(e, 1.0);
  for (std::size_t r = 0; r < p.constraints.size(); ++r) {
    const double w = y(static_cast<Eigen::Index>(r));
    if (w == 0.0) continue;
    for (const auto& e : p.constraints[r]) add(e, -w);
  }
  return s;
}

// Pads the reduced solution with zero rows in X and picks the multipliers of
// the pinning rows so that S stays positive definite. Pins are revisited in
// reverse order: the matrix of a later pin only touches indices removed
// before it, so each step has exactly one adjustable diagonal.
SdpSolution lift(const SdpStandardForm& p, const Reduction& red, const SdpSolution& rs) {
  SdpSolution out = rs;
  const int nb = static_cast<int>(p.block_sizes.size());
  out.X.clear();
  for (int k = 0; k < nb; ++k) {
    const int d = p.block_dim(k);
    MatrixXd x = MatrixXd::Zero(d, d);
    const int nk = red.block_map[k];
    const auto& kept = red.kept[k];
    if (nk >= 0) {
      for (std::size_t a = 0; a < kept.size(); ++a) {
        for (std::size_t c = 0; c < kept.size(); ++c) {
          x(kept[a], kept[c]) = rs.X[nk](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c));
        }
      }
    }
    out.X.push_back(std::move(x));
  }
  out.y = VectorXd::Zero(static_cast<Eigen::Index>(p.constraints.size()));
  for (std::size_t r = 0; r < red.row_map.size(); ++r) {
    if (red.row_map[r] >= 0) out.y(static_cast<Eigen::Index>(r)) = rs.y(red.row_map[r]);
  }

  auto slack = [&]() {
    std::vector<MatrixXd> s = dual_slack(p, out.y);
    for (int k = 0; k < nb; ++k) {
      const int nk = red.block_map[k];
      if (nk < 0) continue;
      const auto& kept = red.kept[k];
      for (std::size_t a = 0; a < kept.size(); ++a) {
        for (std::size_t c = 0; c < kept.size(); ++c) {
          s[k](kept[a], kept[c]) = rs.S[nk](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c));
        }
      }
    }
    return s;
  };

  std::vector<std::vector<int>> active = red.kept;
  std::vector<double> margin(static_cast<std::size_t>(nb), 1.0);
  for (int k = 0; k < nb; ++k) {
    const int nk = red.block_map[k];
    if (nk < 0) continue;
    const double lo = Eigen::SelfAdjointEigenSolver<MatrixXd>(rs.S[nk], Eigen::EigenvaluesOnly)
                          .eigenvalues()
                          .minCoeff();
    margin[k] = std::max(lo, 1e-12);
  }
  for (auto it = red.pins.rbegin(); it != red.pins.rend(); ++it) {
    const std::vector<MatrixXd> s = slack();
    const MatrixXd& sk = s[it->block];
    const auto& act = active[it->block];
    const auto n = static_cast<Eigen::Index>(act.size());
    double need = margin[it->block];
    if (n > 0) {
      MatrixXd si(n, n);
      VectorXd v(n);
      for (Eigen::Index a = 0; a < n; ++a) {
        v(a) = sk(act[a], it->index);
        for (Eigen::Index c = 0; c < n; ++c) si(a, c) = sk(act[a], act[c]);
      }
      // Relative headroom or rounding eats the margin when si is nearly singular.
      need += v.dot(si.ldlt().solve(v)) * (1.0 + 1e-8);
    }
    const double cur = sk(it->index, it->index);
    if (cur < need) out.y(it->row) = (cur - need) / it->coef;
    active[it->block].push_back(it->index);
  }
  out.S = slack();
  out.residuals = compute_residuals(p, out.X, out.y, out.S, out.x_free);
  return out;
}

}  // namespace

SdpSolution solve_sdp(const SdpStandardForm& problem, const SolverConfig& cfg) {
  problem.validate();
  cfg.validate();
  const double cnorm = frob(Model(problem).cost());
  const Reduction red = presolve(problem);
  if (red.bad_row >= 0) {
    SdpSolution sol;
    sol.status = SdpStatus::kPrimalInfeasible;
    sol.message = "constraint " + std::to_string(red.bad_row) + " reduces to 0 = b with b != 0";
    sol.y = VectorXd::Zero(static_cast<Eigen::Index>(problem.constraints.size()));
    sol.x_free = VectorXd::Zero(problem.num_free);
    sol.S = dual_slack(problem, sol.y);
    for (const auto& s : sol.S) sol.X.push_back(MatrixXd::Zero(s.rows(), s.cols()));
    sol.residuals = compute_residuals(problem, sol.X, sol.y, sol.S, sol.x_free);
    sol.loop_residuals = sol.residuals;
    return sol;
  }
  if (red.pins.empty() || red.reduced.block_sizes.empty()) {
    return solve_core(problem, cfg, cnorm);
  }
  return lift(problem, red, solve_core(red.reduced, cfg, cnorm));
}

}  // namespace inclusioncert
