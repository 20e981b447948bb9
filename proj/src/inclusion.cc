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

#include "inclusioncert/inclusion.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "inclusioncert/sos.h"

namespace inclusioncert {

namespace {

constexpr double kBlowup = 1e12;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool only_var(const Polynomial& p, const std::string& name) {
  const Polynomial c = p.compact();
  return c.vars().empty() || (c.vars().size() == 1 && c.vars()[0] == name);
}

double eval_t(const Polynomial& p, double t) {
  const Polynomial c = p.compact();
  if (c.vars().empty()) return c.coefficient(Monomial::one(0));
  const double pt[1] = {t};
  return c.evaluate(pt);
}

// argmin of a univariate polynomial over [a, b] on a uniform grid.
std::pair<double, double> grid_min(const Polynomial& p, double a, double b, int n) {
  std::pair<double, double> best{a, eval_t(p, a)};
  for (int k = 1; k < n; ++k) {
    const double t = a + (b - a) * k / (n - 1);
    const double v = eval_t(p, t);
    if (v < best.second) best = {t, v};
  }
  return best;
}

}  // namespace

void RegularityInfo::validate(double t0, double t1) const {
  if (!std::isfinite(M) || M < 0) throw InclusionError("M must be finite and >= 0");
  if (!only_var(sigma, "t")) throw InclusionError("sigma must be a polynomial in t only");
  if (t1 > t0) {
    const auto [tm, vm] = grid_min(sigma, t0, t1, 1000);
    if (vm < 0) {
      throw InclusionError("sigma(" + fmt(tm) + ") = " + fmt(vm) + " < 0 on the horizon");
    }
  }
  const Polynomial s = sigma.compact();
  if (s.degree() <= 0) {
    if (s.coefficient(Monomial::one(s.vars().size())) < 0) {
      throw InclusionError("sigma is a negative constant");
    }
    return;
  }
  SosProgram prog;
  prog.add_sos_constraint(SymPoly(s), "sigma");
  const SosSolution sol = solve_sos(prog);
  if (sol.status == SdpStatus::kOptimal && sol.all_pass) return;
  // Univariate: not SOS means negative somewhere; look for the witness
  // inside the Cauchy root bound.
  double lead = 0.0;
  double rest = 0.0;
  for (const auto& [m, c] : s.terms()) {
    if (m.total_degree() == s.degree()) lead = c;
  }
  for (const auto& [m, c] : s.terms()) {
    if (m.total_degree() < s.degree()) rest = std::max(rest, std::abs(c / lead));
  }
  const double r = 1.0 + rest;
  const auto [tm, vm] = grid_min(s, -r, r, 20001);
  std::string msg = "sigma is not a sum of squares (" + to_string(sol.status) + ")";
  if (vm < 0) msg += "; sigma(" + fmt(tm) + ") = " + fmt(vm);
  throw InclusionError(msg);
}

double DifferentialInclusion::half_width(double t) const {
  return reg.M == 0.0 ? 0.0 : reg.M * eval_t(reg.sigma, t);
}

Eigen::VectorXd DifferentialInclusion::nominal(double t, const Eigen::VectorXd& u) const {
  Eigen::VectorXd f = model.drift_at(t);
  if (model.num_inputs() > 0 && u.size() > 0) f += model.input_map_at(t) * u;
  return f;
}

Eigen::VectorXd DifferentialInclusion::lower(double t, const Eigen::VectorXd& u) const {
  return nominal(t, u).array() - half_width(t);
}

Eigen::VectorXd DifferentialInclusion::upper(double t, const Eigen::VectorXd& u) const {
  return nominal(t, u).array() + half_width(t);
}

bool DifferentialInclusion::contains(double t, const Eigen::VectorXd& u,
                                     const Eigen::VectorXd& v, double tol) const {
  const Eigen::VectorXd lo = lower(t, u);
  const Eigen::VectorXd hi = upper(t, u);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v(i) < lo(i) - tol || v(i) > hi(i) + tol) return false;
  }
  return true;
}

Polynomial DifferentialInclusion::vertex(std::size_t comp, int sign) const {
  const Polynomial w = reg.sigma.embed(union_vars({"t"}, reg.sigma.vars())).scale(reg.M);
  const Polynomial& f = model.drift.at(comp);
  return sign < 0 ? f - w : f + w;
}

DifferentialInclusion build_inclusion(const ControlAffineModel& model, const RegularityInfo& reg,
                                      const Eigen::VectorXd& x_N, VarList state_names) {
  if (static_cast<std::size_t>(x_N.size()) != model.num_states()) {
    throw InclusionError("x_N has " + std::to_string(x_N.size()) + " entries, model has " +
                         std::to_string(model.num_states()) + " states");
  }
  if (!(model.t_end > model.t_start)) throw InclusionError("empty horizon");
  if (!x_N.allFinite()) throw InclusionError("x_N is not finite");
  if (state_names.empty()) {
    for (std::size_t i = 0; i < model.num_states(); ++i) {
      state_names.push_back("x" + std::to_string(i + 1));
    }
  }
  if (state_names.size() != model.num_states()) throw InclusionError("state name count");
  for (const auto& n : state_names) {
    if (n == "t") throw InclusionError("'t' is reserved for time");
  }
  reg.validate(model.t_start, model.t_end);
  DifferentialInclusion di;
  di.model = model;
  di.reg = reg;
  di.state_names = std::move(state_names);
  di.x_N = x_N;
  di.t_N = model.t_start;
  di.T = model.t_end;
  return di;
}

void UnsafeSet::validate(const VarList& state_names) const {
  if (constraints.empty()) throw std::invalid_argument("unsafe set needs at least one l_i");
  for (const auto& l : constraints) {
    const Polynomial c = l.compact();
    for (const auto& v : c.vars()) {
      if (std::find(state_names.begin(), state_names.end(), v) == state_names.end()) {
        throw std::invalid_argument("unsafe set uses unknown variable '" + v + "'");
      }
    }
  }
}

bool UnsafeSet::contains(const VarList& state_names, const Eigen::VectorXd& x) const {
  for (const auto& l : constraints) {
    const Polynomial e = l.embed(state_names);
    if (e.evaluate(std::span<const double>(x.data(), static_cast<std::size_t>(x.size()))) > 0) {
      return false;
    }
  }
  return true;
}

void SideInfo::add_equality(const Polynomial& phi) {
  algebraic.push_back(phi);
  algebraic.push_back(-phi);
}

std::vector<Polynomial> SideInfo::equalities() const {
  std::vector<Polynomial> out;
  std::vector<bool> used(algebraic.size(), false);
  for (std::size_t i = 0; i < algebraic.size(); ++i) {
    if (used[i]) continue;
    for (std::size_t j = i + 1; j < algebraic.size(); ++j) {
      if (!used[j] && (algebraic[i] + algebraic[j]).compact().is_zero()) {
        used[i] = used[j] = true;
        out.push_back(algebraic[i]);
        break;
      }
    }
  }
  return out;
}

namespace {

// Flattened right-hand side for the inner loops.
class Dynamics {
 public:
  explicit Dynamics(const DifferentialInclusion& di) : di_(di) {
    const VarList tv{"t"};
    for (const auto& f : di.model.drift) drift_.emplace_back(f.embed(union_vars(tv, f.vars())));
    for (const auto& row : di.model.input_map) {
      std::vector<PolyEvaluator> r;
      for (const auto& g : row) r.emplace_back(g.embed(union_vars(tv, g.vars())));
      input_.push_back(std::move(r));
    }
    sigma_ = PolyEvaluator(di.reg.sigma.embed(union_vars(tv, di.reg.sigma.vars())));
  }

  double half_width(double t) const {
    const double p[1] = {t};
    return di_.reg.M == 0.0 ? 0.0 : di_.reg.M * sigma_(p);
  }

  // Returns F + G u and fills u.
  Eigen::VectorXd nominal(double t, const Eigen::VectorXd& x, const Feedback& ctrl,
                          Eigen::VectorXd& u) const {
    const double p[1] = {t};
    const auto n = static_cast<Eigen::Index>(drift_.size());
    Eigen::VectorXd f(n);
    for (Eigen::Index i = 0; i < n; ++i) f(i) = drift_[static_cast<std::size_t>(i)](p);
    const std::size_t m = di_.model.num_inputs();
    if (ctrl && m > 0) {
      u = ctrl(t, x);
      if (static_cast<std::size_t>(u.size()) != m) {
        throw InclusionError("controller returned " + std::to_string(u.size()) +
                             " inputs, model has " + std::to_string(m));
      }
      for (Eigen::Index i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
          f(i) += input_[static_cast<std::size_t>(i)][j](p) * u(static_cast<Eigen::Index>(j));
        }
      }
    } else {
      u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
    }
    return f;
  }

 private:
  const DifferentialInclusion& di_;
  std::vector<PolyEvaluator> drift_;
  std::vector<std::vector<PolyEvaluator>> input_;
  PolyEvaluator sigma_;
};

// h(t, x) = 0 with gradients, for tangent selections and state projection.
class Manifold {
 public:
  Manifold(const std::vector<Polynomial>& hs, const VarList& states) {
    vars_ = {"t"};
    vars_.insert(vars_.end(), states.begin(), states.end());
    for (const auto& h : hs) {
      const Polynomial hc = h.compact();
      for (const auto& v : hc.vars()) {
        if (std::find(vars_.begin(), vars_.end(), v) == vars_.end()) {
          throw InclusionError("equality constraint uses unknown variable '" + v + "'");
        }
      }
      const Polynomial e = h.embed(vars_);
      h_.emplace_back(e);
      dt_.emplace_back(e.differentiate("t"));
      std::vector<PolyEvaluator> g;
      for (const auto& x : states) g.emplace_back(e.differentiate(x));
      grad_.push_back(std::move(g));
    }
  }

  bool empty() const { return h_.empty(); }

  void eval(double t, const Eigen::VectorXd& x, Eigen::VectorXd& h, Eigen::MatrixXd& J,
            Eigen::VectorXd& ht) const {
    std::vector<double> p(static_cast<std::size_t>(x.size()) + 1);
    p[0] = t;
    for (Eigen::Index i = 0; i < x.size(); ++i) p[static_cast<std::size_t>(i) + 1] = x(i);
    const auto k = static_cast<Eigen::Index>(h_.size());
    h.resize(k);
    ht.resize(k);
    J.resize(k, x.size());
    for (Eigen::Index i = 0; i < k; ++i) {
      const auto ii = static_cast<std::size_t>(i);
      h(i) = h_[ii](p);
      ht(i) = dt_[ii](p);
      for (Eigen::Index c = 0; c < x.size(); ++c) J(i, c) = grad_[ii][static_cast<std::size_t>(c)](p);
    }
  }

  // Selection in [-1, 1]^n closest in direction to alpha0 with
  // J (f + w alpha) = -h_t. Returns false when none exists.
  bool tangent_alpha(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& f, double w,
                     const Eigen::VectorXd& alpha0, Eigen::VectorXd& alpha) const {
    Eigen::VectorXd h;
    Eigen::VectorXd ht;
    Eigen::MatrixXd J;
    eval(t, x, h, J, ht);
    if (w <= 0.0) {
      alpha = alpha0;
      return (J * f + ht).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + f.norm());
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(w * J);
    const Eigen::VectorXd star = cod.solve(Eigen::VectorXd(-ht - J * f));
    if (star.cwiseAbs().maxCoeff() > 1.0) {
      alpha = star.cwiseMax(-1.0).cwiseMin(1.0);
      return false;
    }
    Eigen::VectorXd dir = alpha0 - star;
    dir -= cod.pseudoInverse() * (w * J * dir);
    double lam = 1.0;
    for (Eigen::Index i = 0; i < dir.size(); ++i) {
      if (dir(i) > 0) lam = std::min(lam, (1.0 - star(i)) / dir(i));
      if (dir(i) < 0) lam = std::min(lam, (-1.0 - star(i)) / dir(i));
    }
    alpha = (star + std::max(0.0, lam) * dir).cwiseMax(-1.0).cwiseMin(1.0);
    return true;
  }

  void project(double t, Eigen::VectorXd& x) const {
    for (int it = 0; it < 3; ++it) {
      Eigen::VectorXd h;
      Eigen::VectorXd ht;
      Eigen::MatrixXd J;
      eval(t, x, h, J, ht);
      if (h.cwiseAbs().maxCoeff() <= 1e-15) return;
      x -= J.completeOrthogonalDecomposition().solve(h);
    }
  }

 private:
  VarList vars_;
  std::vector<PolyEvaluator> h_;
  std::vector<PolyEvaluator> dt_;
  std::vector<std::vector<PolyEvaluator>> grad_;
};

Trajectory run(const DifferentialInclusion& di, const Dynamics& dyn, const Feedback& ctrl,
               std::uint64_t seed, std::uint64_t index, const SimulationOptions& opts) {
  if (!(opts.dt > 0) || !std::isfinite(opts.dt)) throw InclusionError("dt must be > 0");
  if (opts.switch_every < 1) throw InclusionError("switch interval must be >= 1 step");
  const double t0 = di.t_N;
  const double t1 = opts.t_end.value_or(di.T);
  if (!(t1 > t0) || !std::isfinite(t1)) throw InclusionError("simulation horizon is empty");
  const auto n = static_cast<Eigen::Index>(di.num_states());
  if (opts.fixed_alpha && opts.fixed_alpha->size() != n) {
    throw InclusionError("fixed selection has the wrong size");
  }
  const long steps = std::max(1L, static_cast<long>(std::ceil((t1 - t0) / opts.dt - 1e-9)));
  const double h = (t1 - t0) / static_cast<double>(steps);

  std::seed_seq sq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                   static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(sq);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);

  Trajectory tr;
  tr.times.reserve(static_cast<std::size_t>(steps + 1));
  tr.states.resize(steps + 1, n);
  Eigen::VectorXd x = di.x_N;
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd u;
  tr.times.push_back(t0);
  tr.states.row(0) = x.transpose();

  const Manifold manifold(opts.equalities, di.state_names);
  long conflicts = 0;
  auto rhs = [&](double t, const Eigen::VectorXd& z, Eigen::VectorXd& uu) {
    Eigen::VectorXd f = dyn.nominal(t, z, ctrl, uu);
    const double w = dyn.half_width(t);
    if (manifold.empty()) return Eigen::VectorXd(f + w * alpha);
    Eigen::VectorXd a;
    if (!manifold.tangent_alpha(t, z, f, w, alpha, a)) ++conflicts;
    return Eigen::VectorXd(f + w * a);
  };

  long k = 0;
  for (; k < steps; ++k) {
    const double t = t0 + h * static_cast<double>(k);
    if (k % opts.switch_every == 0) {
      if (opts.fixed_alpha) {
        alpha = *opts.fixed_alpha;
      } else {
        for (Eigen::Index i = 0; i < n; ++i) alpha(i) = unif(rng);
      }
    }
    const Eigen::VectorXd k1 = rhs(t, x, u);
    if (opts.record_derivatives && k % opts.switch_every == 0) {
      tr.sample_times.push_back(t);
      tr.sample_derivatives.push_back(k1);
      tr.sample_inputs.push_back(u);
      tr.alphas.push_back(alpha);
    }
    Eigen::VectorXd scratch;
    const Eigen::VectorXd k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1, scratch);
    const Eigen::VectorXd k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2, scratch);
    const Eigen::VectorXd k4 = rhs(t + h, x + h * k3, scratch);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double tn = k + 1 == steps ? t1 : t0 + h * static_cast<double>(k + 1);
    if (!manifold.empty() && x.allFinite()) manifold.project(tn, x);
    tr.times.push_back(tn);
    tr.states.row(k + 1) = x.transpose();
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kBlowup) {
      tr.blew_up = true;
      tr.blowup_time = tn;
      break;
    }
  }
  tr.states.conservativeResize(static_cast<Eigen::Index>(tr.times.size()), n);
  tr.hull_conflicts = conflicts;
  return tr;
}

}  // namespace

Trajectory simulate_selection(const DifferentialInclusion& di, const Feedback& controller,
                              std::uint64_t seed, std::uint64_t index,
                              const SimulationOptions& opts) {
  const Dynamics dyn(di);
  return run(di, dyn, controller, seed, index, opts);
}

std::optional<double> first_unsafe_time(const Trajectory& traj, const UnsafeSet& unsafe,
                                        const VarList& state_names) {
  std::vector<PolyEvaluator> ls;
  for (const auto& l : unsafe.constraints) ls.emplace_back(l.embed(state_names));
  auto inside = [&](Eigen::Index r) {
    const Eigen::VectorXd x = traj.states.row(r).transpose();
    const std::span<const double> p(x.data(), static_cast<std::size_t>(x.size()));
    for (const auto& l : ls) {
      if (l(p) > 0) return false;
    }
    return true;
  };
  const auto rows = traj.states.rows();
  if (rows == 0) return std::nullopt;
  if (unsafe.gate == TimeGate::kTerminal) {
    if (traj.blew_up) return std::nullopt;
    if (inside(rows - 1)) return traj.times.back();
    return std::nullopt;
  }
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (inside(r)) return traj.times[static_cast<std::size_t>(r)];
  }
  return std::nullopt;
}

Envelope monte_carlo_envelope(const DifferentialInclusion& di, const Feedback& controller,
                              const UnsafeSet* unsafe, std::size_t n_traj,
                              const EnvelopeOptions& opts) {
  if (n_traj < 1) throw InclusionError("n_traj must be >= 1");
  if (unsafe) unsafe->validate(di.state_names);
  const Dynamics dyn(di);
  const auto n = static_cast<Eigen::Index>(di.num_states());
  Envelope env;

  auto absorb = [&](const Trajectory& tr, std::uint64_t index) {
    if (env.times.empty()) {
      env.times = tr.times;
      const auto rows = static_cast<Eigen::Index>(tr.times.size());
      env.min = Eigen::MatrixXd::Constant(rows, n, std::numeric_limits<double>::infinity());
      env.max = Eigen::MatrixXd::Constant(rows, n, -std::numeric_limits<double>::infinity());
    }
    const Eigen::Index rows = std::min(tr.states.rows(), env.min.rows());
    env.min.topRows(rows) = env.min.topRows(rows).cwiseMin(tr.states.topRows(rows));
    env.max.topRows(rows) = env.max.topRows(rows).cwiseMax(tr.states.topRows(rows));
    ++env.num_trajectories;
    if (tr.blew_up) env.blowups.push_back({opts.seed, index, tr.blowup_time});
    if (unsafe) {
      if (const auto hit = first_unsafe_time(tr, *unsafe, di.state_names)) {
        env.hits.push_back({opts.seed, index, *hit});
      }
    }
  };

  for (std::size_t i = 0; i < n_traj; ++i) {
    absorb(run(di, dyn, controller, opts.seed, i, opts.sim), i);
  }
  if (opts.force_extremes) {
    for (double s : {-1.0, 1.0}) {
      SimulationOptions so = opts.sim;
      so.fixed_alpha = Eigen::VectorXd::Constant(n, s);
      // Indices past the random range mark the forced runs.
      const std::uint64_t idx = n_traj + (s < 0 ? 0 : 1);
      absorb(run(di, dyn, controller, opts.seed, idx, so), idx);
    }
  }
  return env;
}

void write_envelope_csv(std::ostream& out, const Envelope& env) {
  out << "t,comp,min,max,width\n";
  for (std::size_t r = 0; r < env.times.size(); ++r) {
    for (Eigen::Index c = 0; c < env.min.cols(); ++c) {
      const auto rr = static_cast<Eigen::Index>(r);
      out << fmt(env.times[r]) << ',' << c << ',' << fmt(env.min(rr, c)) << ','
          << fmt(env.max(rr, c)) << ',' << fmt(env.max(rr, c) - env.min(rr, c)) << '\n';
    }
  }
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj,
                          const VarList& state_names) {
  out << 't';
  for (const auto& n : state_names) out << ',' << n;
  out << '\n';
  for (std::size_t r = 0; r < traj.times.size(); ++r) {
    out << fmt(traj.times[r]);
    for (Eigen::Index c = 0; c < traj.states.cols(); ++c) {
      out << ',' << fmt(traj.states(static_cast<Eigen::Index>(r), c));
    }
    out << '\n';
  }
}

nlohmann::json to_json(const UnsafeHit& hit) {
  return {{"seed", hit.seed}, {"index", hit.index}, {"first_hit_time", hit.first_hit_time}};
}

nlohmann::json to_json(const RegularityInfo& reg) {
  return {{"M", reg.M}, {"sigma", to_json(reg.sigma)}};
}

}  // namespace inclusioncert
