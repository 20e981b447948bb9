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

#include "inclusioncert/certify.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace inclusioncert {

namespace {

constexpr int kBoxGrid = 2001;

VarList with_time(const VarList& states) {
  VarList v{"t"};
  v.insert(v.end(), states.begin(), states.end());
  return v;
}

bool uses(const Polynomial& p, const std::string& var) {
  const auto i = p.var_index(var);
  if (!i) return false;
  for (const auto& [m, c] : p.terms()) {
    if (m[*i] != 0) return true;
  }
  return false;
}

// int_{a}^{t} p, p in t only.
Polynomial antiderivative_t(const Polynomial& p, double a) {
  const Polynomial c = p.compact();
  if (c.vars().empty()) {
    const double v = c.is_zero() ? 0.0 : c.coefficient(Monomial::one(0));
    return Polynomial::parse("t") * v - a * v;
  }
  Polynomial::TermMap terms;
  for (const auto& [m, coef] : c.terms()) terms[Monomial({m[0] + 1})] = coef / (m[0] + 1);
  const Polynomial F(VarList{"t"}, terms);
  const double at[1] = {a};
  return F - F.evaluate(at);
}

double eval_t(const Polynomial& p, double t) {
  const Polynomial c = p.compact();
  if (c.vars().empty()) return c.is_zero() ? 0.0 : c.coefficient(Monomial::one(0));
  const double pt[1] = {t};
  return c.evaluate(pt);
}

Polynomial normalized(const Polynomial& p) {
  const double s = p.max_abs_coefficient();
  return s > 0 ? p.scale(1.0 / s) : p;
}

std::vector<double> point(double t, const Eigen::VectorXd& x) {
  std::vector<double> p(static_cast<std::size_t>(x.size()) + 1);
  p[0] = t;
  for (Eigen::Index i = 0; i < x.size(); ++i) p[static_cast<std::size_t>(i) + 1] = x(i);
  return p;
}

int worker_count(int requested, std::size_t jobs) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  n = std::max(1, n);
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(n), std::max<std::size_t>(jobs, 1)));
}

// Runs f(i) for i in [0, n) on a small pool; f must be thread safe.
template <typename F>
void parallel_for(std::size_t n, int threads, F f) {
  const int w = worker_count(threads, n);
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex err_mu;
  for (int k = 0; k < w; ++k) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

void check_common(const DifferentialInclusion& di, const UnsafeSet& unsafe, double T,
                  int degree) {
  if (!std::isfinite(T) || !(T > di.t_N)) throw CertifyError("horizon T must exceed t_N");
  if (degree < 1) throw CertifyError("certificate degree must be >= 1");
  if (di.num_states() == 0) throw CertifyError("inclusion has no states");
  try {
    unsafe.validate(di.state_names);
  } catch (const std::invalid_argument& e) {
    throw CertifyError(e.what());
  }
}

// Constraints listed as both p and -p describe p = 0. Two Sos multipliers on
// such a pair can grow together without bound, so a pair gets one free
// multiplier instead. Returns, per entry, whether it starts a pair, and
// marks the partner as taken.
std::vector<int> pair_roles(const std::vector<Polynomial>& ps) {
  // 0 single, 1 first of a pair, 2 partner
  std::vector<int> role(ps.size(), 0);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (role[i] != 0) continue;
    for (std::size_t j = i + 1; j < ps.size(); ++j) {
      if (role[j] == 0 && (ps[i] + ps[j]).compact().is_zero()) {
        role[i] = 1;
        role[j] = 2;
        break;
      }
    }
  }
  return role;
}

DifferentialInclusion at_horizon(const DifferentialInclusion& di, double T) {
  DifferentialInclusion d = di;
  d.T = T;
  return d;
}

}  // namespace

Polynomial Scaling::to_scaled(const Polynomial& p, const VarList& states) const {
  Polynomial out = p;
  if (uses(out, "t")) {
    out = out.substitute("t", Polynomial::parse("t") * t_half + t_mid);
  }
  for (std::size_t k = 0; k < states.size(); ++k) {
    if (!uses(out, states[k])) continue;
    const auto kk = static_cast<Eigen::Index>(k);
    out = out.substitute(states[k], Polynomial::variable(states[k]) * half(kk) + center(kk));
  }
  return out;
}

Polynomial Scaling::to_original(const Polynomial& p, const VarList& states) const {
  Polynomial out = p;
  if (uses(out, "t")) {
    out = out.substitute("t", (Polynomial::parse("t") - t_mid) * (1.0 / t_half));
  }
  for (std::size_t k = 0; k < states.size(); ++k) {
    if (!uses(out, states[k])) continue;
    const auto kk = static_cast<Eigen::Index>(k);
    out = out.substitute(states[k], (Polynomial::variable(states[k]) - center(kk)) * (1.0 / half(kk)));
  }
  return out;
}

WorkingBox working_box(const DifferentialInclusion& di) {
  const auto n = static_cast<Eigen::Index>(di.num_states());
  WorkingBox box{di.x_N, di.x_N};
  for (Eigen::Index k = 0; k < n; ++k) {
    const Polynomial lo = antiderivative_t(di.vertex(static_cast<std::size_t>(k), -1), di.t_N);
    const Polynomial hi = antiderivative_t(di.vertex(static_cast<std::size_t>(k), +1), di.t_N);
    for (int i = 0; i < kBoxGrid; ++i) {
      const double t = di.t_N + (di.T - di.t_N) * i / (kBoxGrid - 1);
      box.lo(k) = std::min(box.lo(k), di.x_N(k) + eval_t(lo, t));
      box.hi(k) = std::max(box.hi(k), di.x_N(k) + eval_t(hi, t));
    }
  }
  return box;
}

Scaling default_scaling(const DifferentialInclusion& di) {
  const WorkingBox box = working_box(di);
  Scaling s;
  s.t_mid = 0.5 * (di.t_N + di.T);
  s.t_half = 0.5 * (di.T - di.t_N);
  s.center = 0.5 * (box.lo + box.hi);
  s.half = 0.5 * (box.hi - box.lo);
  for (Eigen::Index k = 0; k < s.half.size(); ++k) {
    const double c = std::abs(s.center(k));
    if (!(s.half(k) > 1e-9 * std::max(1.0, c))) s.half(k) = std::max(1.0, c);
  }
  return s;
}

SafetyProgram build_safety_program(const DifferentialInclusion& di, const UnsafeSet& unsafe,
                                   double T, int degree, const SideInfo* side,
                                   const CertifyOptions& opts, bool synthesis, double q1) {
  check_common(di, unsafe, T, degree);
  const DifferentialInclusion dT = at_horizon(di, T);
  SafetyProgram sp;
  sp.scaling = opts.scaling ? *opts.scaling : default_scaling(dT);
  sp.state_names = di.state_names;
  sp.degree = degree;
  sp.multiplier_degree =
      opts.multiplier_degree >= 0 ? opts.multiplier_degree : degree + (degree % 2);
  if (sp.multiplier_degree % 2 != 0) throw CertifyError("multiplier degree must be even");
  const Scaling& sc = sp.scaling;
  if (sc.center.size() != static_cast<Eigen::Index>(di.num_states()) ||
      sc.half.size() != sc.center.size() || !(sc.t_half > 0) || (sc.half.array() <= 0).any()) {
    throw CertifyError("invalid scaling");
  }
  const VarList& xs = di.state_names;
  const VarList all = with_time(xs);
  const int md = sp.multiplier_degree;
  SosProgram& prog = sp.program;
  auto mult = [&](const std::string& name, const VarList& vars) -> const SymPoly& {
    sp.multiplier_names.push_back(name);
    return prog.declare_unknown(name, vars, md, UnknownKind::kSos).poly;
  };
  auto free_mult = [&](const std::string& name, const VarList& vars) -> const SymPoly& {
    sp.multiplier_names.push_back(name);
    const SymPoly& poly = prog.declare_unknown(name, vars, md, UnknownKind::kFree).poly;
    // Unbounded, the pair still trades against the Sos part and the optimal
    // face has no analytic center.
    prog.bound_coefficients(name, opts.equality_multiplier_bound);
    return poly;
  };

  prog.declare_unknown("B", all, degree, UnknownKind::kFree);
  prog.bound_coefficients("B", opts.coefficient_bound);
  prog.declare_unknown("c", {}, 0, UnknownKind::kFree);
  prog.maximize(prog.poly("c"));
  if (opts.margin_cap > 0) prog.add_upper_bound(prog.poly("c"), opts.margin_cap);
  const SymPoly Bs = prog.poly("B");
  const SymPoly cs = prog.poly("c");

  // B at (t_N, x_N) as a scalar.
  SymPoly BN = Bs.substitute("t", -1.0);
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    BN = BN.substitute(xs[k], (di.x_N(kk) - sc.center(kk)) / sc.half(kk));
  }
  const Polynomial g_interval = Polynomial::parse("1 - t^2");

  const bool strict = opts.strict || unsafe.gate == TimeGate::kWholeHorizon;
  {
    SymPoly E = strict ? Bs - BN - cs : Bs.substitute("t", 1.0) - BN - cs;
    const VarList& mv = strict ? all : xs;
    const std::vector<int> roles = pair_roles(unsafe.constraints);
    for (std::size_t i = 0; i < unsafe.constraints.size(); ++i) {
      if (roles[i] == 2) continue;
      const Polynomial l = normalized(sc.to_scaled(unsafe.constraints[i], xs));
      const std::string name = "s" + std::to_string(i + 1);
      E += (roles[i] == 1 ? free_mult(name, mv) : mult(name, mv)) * SymPoly(l);
    }
    if (strict) E -= mult("m_b", all) * SymPoly(g_interval);
    prog.add_sos_constraint(E, "boundary");
  }

  std::vector<SymPoly> dBx;
  for (const auto& x : xs) dBx.push_back(Bs.differentiate(x));
  const SymPoly dBs = Bs.differentiate("t");

  std::vector<Polynomial> phis;
  std::vector<bool> phi_pair;
  std::vector<Polynomial> psis;
  if (side) {
    const std::vector<int> roles = pair_roles(side->algebraic);
    for (std::size_t i = 0; i < side->algebraic.size(); ++i) {
      if (roles[i] == 2) continue;
      phis.push_back(normalized(sc.to_scaled(side->algebraic[i], xs)));
      phi_pair.push_back(roles[i] == 1);
    }
    for (const auto& p : side->integral) psis.push_back(normalized(sc.to_scaled(p, xs)));
  }

  // The hull is the box F + [-1, 1]^n M sigma, so every corner gets a
  // decrease condition; with one state these are the two vertex fields.
  const std::size_t n = xs.size();
  if (n > 12) throw CertifyError("too many states for the corner conditions");
  const std::size_t corners = std::size_t{1} << n;
  for (std::size_t mask = 0; mask < corners; ++mask) {
    std::string tag;
    for (std::size_t k = 0; k < n; ++k) tag += (mask >> k) & 1 ? '+' : '-';
    SymPoly E = -dBs;
    for (std::size_t k = 0; k < n; ++k) {
      const int sign = (mask >> k) & 1 ? +1 : -1;
      const Polynomial f = sc.to_scaled(di.vertex(k, sign), xs)
                               .scale(sc.t_half / sc.half(static_cast<Eigen::Index>(k)));
      E -= SymPoly(f) * dBx[k];
    }
    std::string wname = "W";
    if (!synthesis) {
      wname = mask == 0 ? "W_minus" : mask + 1 == corners ? "W_plus" : "W_" + tag;
    }
    const bool controlled = synthesis && opts.form == SynthesisForm::kControlled;
    if (!synthesis || mask == 0) {
      if (controlled) {
        // A free W would make the decrease conditions vacuous; bounding it
        // bounds the input the controller has to supply.
        sp.multiplier_names.push_back(wname);
        prog.declare_unknown(wname, all, md, UnknownKind::kFree);
        prog.bound_coefficients(wname, opts.coefficient_bound);
        if (opts.w_epsilon <= 0) prog.add_sos_constraint(prog.poly(wname), wname + "-positivity");
        // Mean of W over the scaled box; a light penalty keeps W, and so u,
        // from growing where the conditions do not ask for it.
        SymExpr mean;
        for (const auto& [mono, e] : prog.poly(wname).terms()) {
          double w = 1.0;
          for (std::size_t v = 0; v < mono.size(); ++v) w *= mono[v] % 2 ? 0.0 : 1.0 / (mono[v] + 1);
          if (w != 0.0) mean += e.scaled(w);
        }
        prog.maximize(cs - SymPoly::scalar(mean).scaled(opts.w_penalty));
      } else {
        mult(wname, all);
      }
      if (opts.w_epsilon > 0) {
        Polynomial r = Polynomial::constant(0.0, all);
        for (const auto& x : xs) r += Polynomial::variable(x, all).pow(2);
        prog.add_sos_constraint(prog.poly(wname) - SymPoly(r.scale(opts.w_epsilon)),
                                wname + "-positivity");
      }
    }
    if (controlled) {
      E += prog.poly(wname);
    } else {
      E -= prog.poly(wname);
    }
    E -= mult("m" + tag, all) * SymPoly(g_interval);
    for (std::size_t i = 0; i < phis.size(); ++i) {
      const std::string name = "p" + tag + std::to_string(i + 1);
      E -= (phi_pair[i] ? free_mult(name, all) : mult(name, all)) * SymPoly(phis[i]);
    }
    for (std::size_t j = 0; j < psis.size(); ++j) {
      const std::string qn = "q" + tag + std::to_string(j + 1);
      sp.multiplier_names.push_back(qn);
      E -= prog.declare_unknown(qn, {}, 0, UnknownKind::kNonnegativeScalar).poly * SymPoly(psis[j]);
    }
    prog.add_sos_constraint(E, "decrease" + tag);
  }

  if (synthesis) {
    for (std::size_t j = 0; j < di.num_inputs(); ++j) {
      std::vector<Polynomial> gs;
      double scale = 0.0;
      for (std::size_t k = 0; k < xs.size(); ++k) {
        gs.push_back(sc.to_scaled(di.model.input_map[k][j], xs)
                         .scale(1.0 / sc.half(static_cast<Eigen::Index>(k))));
        scale = std::max(scale, gs.back().max_abs_coefficient());
      }
      if (scale == 0.0) continue;
      SymPoly L(all);
      for (std::size_t k = 0; k < xs.size(); ++k) L += SymPoly(gs[k].scale(1.0 / scale)) * dBx[k];
      const std::string tag = std::to_string(j + 1);
      const SymPoly& q2 = mult("q2_" + tag, all);
      prog.add_sos_constraint(L.scaled(-q1) - q2, "controllability" + tag);
      // Keeps dB/dx^T g away from zero so the input stays bounded.
      if (opts.form == SynthesisForm::kControlled) {
        prog.add_sos_constraint(q2 - cs, "controllability-margin" + tag);
      }
    }
  }
  return sp;
}

double BarrierCertificate::eval_B(double t, const Eigen::VectorXd& x) const {
  const std::vector<double> p = point(t, x);
  return B.embed(with_time(state_names)).evaluate(p);
}

namespace {

struct Solved {
  ProbeRecord probe;
  std::optional<BarrierCertificate> cert;
};

Solved solve_program(const SafetyProgram& sp, const DifferentialInclusion& di, double T,
                     const CertifyOptions& opts, bool synthesis, double q1, bool strict) {
  Solved out;
  out.probe.T = T;
  out.probe.degree = sp.degree;
  const CompiledSos compiled = sp.program.compile();
  const SdpSolution sdp = solve_sdp(compiled.sdp, opts.solver);
  out.probe.status = to_string(sdp.status);
  out.probe.iterations = sdp.iterations;
  out.probe.message = sdp.message;
  if (sdp.X.empty()) return out;
  const SosSolution sol =
      recover_solution(sp.program, compiled, sdp, false, opts.eps_psd, opts.posthoc_tol);
  out.probe.margin = sol.values.at("c").is_zero()
                         ? 0.0
                         : sol.values.at("c").coefficient(Monomial::one(sol.values.at("c").vars().size()));
  out.probe.eig_min = sol.worst_eig_min;
  out.probe.residual = sol.worst_residual;
  // A stalled solve still certifies when its best iterate passes post-hoc;
  // soundness rests on the SOS identities, not on dual convergence.
  const bool usable = sdp.status == SdpStatus::kOptimal || sdp.status == SdpStatus::kMaxIter ||
                      sdp.status == SdpStatus::kNumericalFailure;
  const bool ok = usable && sol.all_pass && out.probe.margin >= opts.min_margin;
  if (!ok) {
    if (usable && !sol.all_pass) {
      out.probe.message += "; post-hoc SOS check failed";
    } else if (usable) {
      out.probe.message += "; margin below threshold";
    }
    return out;
  }
  if (sdp.status != SdpStatus::kOptimal) out.probe.message += "; feasible iterate accepted";
  out.probe.feasible = true;
  BarrierCertificate cert;
  const VarList& xs = di.state_names;
  cert.state_names = xs;
  cert.B_scaled = sol.values.at("B");
  cert.B = sp.scaling.to_original(cert.B_scaled, xs).embed(with_time(xs));
  auto w_orig = [&](const std::string& name) {
    return sp.scaling.to_original(sol.values.at(name), xs).scale(1.0 / sp.scaling.t_half).embed(with_time(xs));
  };
  if (synthesis) {
    cert.W_minus = cert.W_plus = w_orig("W");
  } else {
    cert.W_minus = w_orig("W_minus");
    cert.W_plus = w_orig("W_plus");
  }
  for (const auto& name : sp.multiplier_names) cert.multipliers[name] = sol.values.at(name);
  cert.scaling = sp.scaling;
  cert.margin = out.probe.margin;
  cert.degree = sp.degree;
  cert.t_N = di.t_N;
  cert.T = T;
  cert.x_N = di.x_N;
  cert.gate = strict ? TimeGate::kWholeHorizon : TimeGate::kTerminal;
  cert.synthesized = synthesis;
  cert.q1 = synthesis ? q1 : 0.0;
  cert.form = opts.form;
  cert.eig_min = sol.worst_eig_min;
  cert.residual = sol.worst_residual;
  out.cert = std::move(cert);
  return out;
}

}  // namespace

VerifyResult verify_safety(const DifferentialInclusion& di, const UnsafeSet& unsafe, double T,
                           int degree, const SideInfo* side, const CertifyOptions& opts) {
  const SafetyProgram sp = build_safety_program(di, unsafe, T, degree, side, opts);
  const bool strict = opts.strict || unsafe.gate == TimeGate::kWholeHorizon;
  Solved s = solve_program(sp, di, T, opts, false, 0.0, strict);
  VerifyResult r;
  r.feasible = s.probe.feasible;
  r.probe = std::move(s.probe);
  r.certificate = std::move(s.cert);
  return r;
}

SafeController::SafeController(VarList state_names, Polynomial B, Polynomial W,
                               std::vector<std::vector<Polynomial>> G)
    : names_(std::move(state_names)), B_(std::move(B)), W_(std::move(W)), G_(std::move(G)) {
  if (G_.size() != names_.size()) throw CertifyError("input map must have one row per state");
  const VarList all = with_time(names_);
  const Polynomial Be = B_.embed(union_vars(all, B_.vars()));
  for (const auto& x : names_) dB_.emplace_back(Be.differentiate(x).embed(all));
  W_eval_ = PolyEvaluator(W_.embed(union_vars(all, W_.vars())).embed(all));
  for (const auto& row : G_) {
    if (row.size() != num_inputs()) throw CertifyError("ragged input map");
    std::vector<PolyEvaluator> r;
    for (const auto& g : row) r.emplace_back(g.embed(union_vars(all, g.vars())).embed(all));
    G_eval_.push_back(std::move(r));
  }
}

Eigen::VectorXd SafeController::lie_row(double t, const Eigen::VectorXd& x) const {
  const std::vector<double> p = point(t, x);
  const auto m = static_cast<Eigen::Index>(num_inputs());
  Eigen::VectorXd r = Eigen::VectorXd::Zero(m);
  for (std::size_t k = 0; k < names_.size(); ++k) {
    const double d = dB_[k](p);
    for (Eigen::Index j = 0; j < m; ++j) r(j) += d * G_eval_[k][static_cast<std::size_t>(j)](p);
  }
  return r;
}

double SafeController::eval_W(double t, const Eigen::VectorXd& x) const {
  return W_eval_(point(t, x));
}

Eigen::VectorXd SafeController::evaluate(double t, const Eigen::VectorXd& x) const {
  const Eigen::VectorXd r = lie_row(t, x);
  const double w = eval_W(t, x);
  const double s = r.squaredNorm();
  Eigen::VectorXd u = Eigen::VectorXd::Zero(r.size());
  bool singular = false;
  if (s < delta * delta) {
    singular = true;
    if (u_max) {
      const Eigen::VectorXd v = r * w;
      for (Eigen::Index j = 0; j < v.size(); ++j) {
        u(j) = v(j) > 0 ? *u_max : (v(j) < 0 ? -*u_max : 0.0);
      }
    }
  } else {
    u = r * (w / s);
  }
  if (flip_sign) u = -u;
  if (u_max && !singular) u = u.cwiseMax(-*u_max).cwiseMin(*u_max);
  std::lock_guard<std::mutex> lock(log_->mu);
  ++log_->evaluations;
  if (u.size() > 0) log_->max_abs = std::max(log_->max_abs, u.cwiseAbs().maxCoeff());
  if (singular) log_->events.push_back({t, x, std::sqrt(s)});
  return u;
}

std::vector<SingularityEvent> SafeController::singularities() const {
  std::lock_guard<std::mutex> lock(log_->mu);
  return log_->events;
}

std::size_t SafeController::num_evaluations() const {
  std::lock_guard<std::mutex> lock(log_->mu);
  return log_->evaluations;
}

double SafeController::max_abs_input() const {
  std::lock_guard<std::mutex> lock(log_->mu);
  return log_->max_abs;
}

Eigen::VectorXd controller_eval(const SafeController& ctrl, double t, const Eigen::VectorXd& x) {
  return ctrl.evaluate(t, x);
}

GridCheck controllability_grid_check(const SafeController& ctrl, double t0, double t1,
                                     const WorkingBox& box, int per_axis, double threshold) {
  const auto n = box.lo.size();
  int px = per_axis;
  if (n > 0) {
    const double cap = std::pow(1e6 / per_axis, 1.0 / static_cast<double>(n));
    px = std::max(2, std::min(per_axis, static_cast<int>(cap)));
  }
  GridCheck g;
  g.min_abs = std::numeric_limits<double>::infinity();
  double lo_val = std::numeric_limits<double>::infinity();
  double hi_val = -std::numeric_limits<double>::infinity();
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd x(n);
  for (int it = 0; it < per_axis; ++it) {
    const double t = t0 + (t1 - t0) * it / std::max(1, per_axis - 1);
    std::fill(idx.begin(), idx.end(), 0);
    while (true) {
      for (Eigen::Index k = 0; k < n; ++k) {
        x(k) = box.lo(k) + (box.hi(k) - box.lo(k)) * idx[static_cast<std::size_t>(k)] / std::max(1, px - 1);
      }
      const Eigen::VectorXd r = ctrl.lie_row(t, x);
      const double a = r.norm();
      ++g.points;
      if (a < g.min_abs) {
        g.min_abs = a;
        g.t_at = t;
        g.x_at = x;
      }
      if (r.size() == 1) {
        lo_val = std::min(lo_val, r(0));
        hi_val = std::max(hi_val, r(0));
      }
      std::size_t k = 0;
      while (k < idx.size() && ++idx[k] == px) idx[k++] = 0;
      if (k == idx.size()) break;
    }
  }
  const bool sign_change = lo_val < 0 && hi_val > 0;
  g.pass = g.min_abs > threshold && !sign_change;
  return g;
}

SynthesisResult synthesize_controller(const DifferentialInclusion& di, const UnsafeSet& unsafe,
                                      double T, int degree, std::optional<double> q1,
                                      const SideInfo* side, const CertifyOptions& opts) {
  if (di.num_inputs() == 0 || !di.model.has_input_map()) {
    throw CertifyError("input map G is identically zero: nothing to synthesize");
  }
  check_common(di, unsafe, T, degree);
  const std::vector<double> tries = q1 ? std::vector<double>{*q1} : std::vector<double>{1.0, -1.0};
  const bool strict = opts.strict || unsafe.gate == TimeGate::kWholeHorizon;
  SynthesisResult res;
  for (double q : tries) {
    const SafetyProgram sp = build_safety_program(di, unsafe, T, degree, side, opts, true, q);
    Solved s = solve_program(sp, di, T, opts, true, q, strict);
    res.probes.push_back(s.probe);
    if (!s.probe.feasible) continue;
    res.feasible = true;
    SafeController ctrl(di.state_names, s.cert->B, s.cert->W_minus, di.model.input_map);
    ctrl.flip_sign = opts.form == SynthesisForm::kControlled;
    res.grid = controllability_grid_check(ctrl, di.t_N, T, working_box(at_horizon(di, T)));
    res.controller_sound = res.grid.pass;
    res.certificate = std::move(s.cert);
    res.controller = std::move(ctrl);
    break;
  }
  return res;
}

double default_sweep_lower(const DifferentialInclusion& di, double data_span) {
  return di.t_N + 0.05 * data_span;
}

HorizonSweepResult sweep_horizon(const DifferentialInclusion& di, const UnsafeSet& unsafe,
                                 const std::vector<int>& degrees, double T_lo, double T_hi,
                                 const SweepOptions& opts) {
  if (!(T_lo > di.t_N)) throw CertifyError("sweep lower end must exceed t_N");
  if (!(T_hi >= T_lo)) throw CertifyError("sweep upper end must be >= lower end");
  if (!(opts.tol > 0)) throw CertifyError("bisection tolerance must be > 0");
  if (degrees.empty()) throw CertifyError("no degrees to sweep");
  HorizonSweepResult res;
  res.degrees.resize(degrees.size());
  parallel_for(degrees.size(), opts.threads, [&](std::size_t i) {
    DegreeSweep& ds = res.degrees[i];
    ds.degree = degrees[i];
    auto probe = [&](double T) {
      VerifyResult v = verify_safety(di, unsafe, T, ds.degree, opts.side, opts.certify);
      ds.probes.push_back(v.probe);
      return v;
    };
    VerifyResult lo = probe(T_lo);
    if (!lo.feasible) return;
    double a = T_lo;
    std::optional<BarrierCertificate> best = lo.certificate;
    VerifyResult hi = probe(T_hi);
    if (hi.feasible) {
      a = T_hi;
      best = hi.certificate;
    } else {
      double b = T_hi;
      while (b - a > opts.tol) {
        const double mid = 0.5 * (a + b);
        VerifyResult v = probe(mid);
        if (v.feasible) {
          a = mid;
          best = v.certificate;
        } else {
          b = mid;
        }
      }
    }
    ds.verified_T = a;
    ds.certificate = std::move(best);
    for (const auto& p2 : ds.probes) {
      if (!p2.feasible) continue;
      for (const auto& p1 : ds.probes) {
        if (!p1.feasible && p1.T < p2.T) ++ds.monotonicity_violations;
      }
    }
  });
  for (const auto& ds : res.degrees) {
    if (ds.monotonicity_violations > 0) {
      res.warnings.push_back("degree " + std::to_string(ds.degree) + ": " +
                             std::to_string(ds.monotonicity_violations) +
                             " probe(s) infeasible below a feasible horizon (solver noise)");
    }
  }
  for (std::size_t i = 1; i < res.degrees.size(); ++i) {
    const auto& p = res.degrees[i - 1];
    const auto& q = res.degrees[i];
    if (q.degree <= p.degree) continue;
    const double a = p.verified_T.value_or(-std::numeric_limits<double>::infinity());
    const double b = q.verified_T.value_or(-std::numeric_limits<double>::infinity());
    if (b < a) {
      res.warnings.push_back("verified horizon decreases from degree " + std::to_string(p.degree) +
                             " to " + std::to_string(q.degree));
    }
  }
  return res;
}

AuditReport falsify_certificate(const BarrierCertificate& cert, const DifferentialInclusion& di,
                                const UnsafeSet& unsafe, std::size_t n_traj, std::uint64_t seed,
                                const Feedback& controller, const AuditOptions& opts) {
  DifferentialInclusion d = di;
  d.x_N = cert.x_N;
  d.t_N = cert.t_N;
  d.T = cert.T;
  SimulationOptions sim = opts.sim;
  sim.t_end = cert.T;
  if (opts.side) {
    for (const auto& h : opts.side->equalities()) sim.equalities.push_back(h);
  }
  const std::size_t total = n_traj + (opts.force_extremes ? 2 : 0);
  const auto n = static_cast<Eigen::Index>(d.num_states());
  std::vector<Trajectory> trajs(total);
  parallel_for(total, opts.threads, [&](std::size_t i) {
    SimulationOptions so = sim;
    if (i >= n_traj) so.fixed_alpha = Eigen::VectorXd::Constant(n, i == n_traj ? -1.0 : 1.0);
    trajs[i] = simulate_selection(d, controller, seed, i, so);
  });

  const VarList all = with_time(cert.state_names);
  const PolyEvaluator B(cert.B.embed(all));
  WorkingBox box = working_box(d);
  for (const auto& tr : trajs) {
    for (Eigen::Index k = 0; k < n; ++k) {
      box.lo(k) = std::min(box.lo(k), tr.states.col(k).minCoeff());
      box.hi(k) = std::max(box.hi(k), tr.states.col(k).maxCoeff());
    }
  }
  // span(B) over a grid of [t_N, T] x box.
  const int per = std::clamp(static_cast<int>(std::pow(2e5, 1.0 / static_cast<double>(n + 1))), 3, 200);
  double bmin = std::numeric_limits<double>::infinity();
  double bmax = -bmin;
  {
    std::vector<int> idx(static_cast<std::size_t>(n + 1), 0);
    std::vector<double> p(static_cast<std::size_t>(n + 1));
    while (true) {
      p[0] = d.t_N + (d.T - d.t_N) * idx[0] / (per - 1);
      for (Eigen::Index k = 0; k < n; ++k) {
        const auto kk = static_cast<std::size_t>(k) + 1;
        p[kk] = box.lo(k) + (box.hi(k) - box.lo(k)) * idx[kk] / (per - 1);
      }
      const double v = B(p);
      bmin = std::min(bmin, v);
      bmax = std::max(bmax, v);
      std::size_t k = 0;
      while (k < idx.size() && ++idx[k] == per) idx[k++] = 0;
      if (k == idx.size()) break;
    }
  }
  AuditReport rep;
  rep.trajectories = total;
  rep.span_B = bmax - bmin;
  rep.slack = opts.slack_fraction * rep.span_B;
  std::size_t shown_unsafe = 0;
  std::size_t shown_decrease = 0;
  for (std::size_t i = 0; i < total; ++i) {
    const Trajectory& tr = trajs[i];
    rep.hull_conflicts += tr.hull_conflicts;
    if (tr.blew_up) ++rep.blowups;
    double run_min = std::numeric_limits<double>::infinity();
    bool flagged = false;
    for (Eigen::Index r = 0; r < tr.states.rows(); ++r) {
      const Eigen::VectorXd x = tr.states.row(r).transpose();
      const double v = B(point(tr.times[static_cast<std::size_t>(r)], x));
      if (r > 0) {
        const double excess = v - run_min;
        rep.max_increase = std::max(rep.max_increase, excess);
        if (excess > rep.slack && !flagged) {
          flagged = true;
          ++rep.decrease_violations;
          if (shown_decrease++ < 5) {
            rep.counterexamples.push_back({"decrease", seed, i, tr.times[static_cast<std::size_t>(r)], x, excess});
          }
        }
      }
      run_min = std::min(run_min, v);
    }
    UnsafeSet gate = unsafe;
    gate.gate = cert.gate;
    const auto hit = tr.blew_up ? std::nullopt : first_unsafe_time(tr, gate, cert.state_names);
    if (hit) {
      ++rep.unsafe_hits;
      if (shown_unsafe++ < 5) {
        const auto it = std::lower_bound(tr.times.begin(), tr.times.end(), *hit);
        const auto row = static_cast<Eigen::Index>(std::min<std::ptrdiff_t>(
            it - tr.times.begin(), static_cast<std::ptrdiff_t>(tr.times.size()) - 1));
        rep.counterexamples.push_back({"unsafe", seed, i, *hit, tr.states.row(row).transpose(), 0.0});
      }
    }
  }
  rep.pass = rep.unsafe_hits == 0 && rep.decrease_violations == 0;
  return rep;
}

Eigen::VectorXd open_loop_prediction(const ControlAffineModel& model, const Eigen::VectorXd& x0,
                                     double t0, double t1) {
  if (static_cast<std::size_t>(x0.size()) != model.num_states()) {
    throw CertifyError("state size does not match the model");
  }
  Eigen::VectorXd x = x0;
  for (std::size_t k = 0; k < model.num_states(); ++k) {
    x(static_cast<Eigen::Index>(k)) += eval_t(antiderivative_t(model.drift[k], t0), t1);
  }
  return x;
}

std::string to_string(SynthesisForm f) {
  return f == SynthesisForm::kPrinted ? "printed" : "controlled";
}

nlohmann::json to_json(const Scaling& s) {
  return {{"t_mid", s.t_mid},
          {"t_half", s.t_half},
          {"center", std::vector<double>(s.center.data(), s.center.data() + s.center.size())},
          {"half", std::vector<double>(s.half.data(), s.half.data() + s.half.size())}};
}

nlohmann::json to_json(const BarrierCertificate& c) {
  nlohmann::json mult = nlohmann::json::object();
  for (const auto& [k, v] : c.multipliers) mult[k] = to_json(v);
  nlohmann::json j = {
      {"state_names", c.state_names},
      {"B", to_json(c.B)},
      {"B_text", c.B.to_string(10)},
      {"B_scaled", to_json(c.B_scaled)},
      {"W_minus", to_json(c.W_minus)},
      {"W_plus", to_json(c.W_plus)},
      {"multipliers", mult},
      {"margin", c.margin},
      {"scaling", to_json(c.scaling)},
      {"degree", c.degree},
      {"horizon", {c.t_N, c.T}},
      {"x_N", std::vector<double>(c.x_N.data(), c.x_N.data() + c.x_N.size())},
      {"gate", c.gate == TimeGate::kTerminal ? "terminal" : "whole_horizon"},
      {"posthoc", {{"eig_min", c.eig_min}, {"residual", c.residual}}},
  };
  if (c.synthesized) {
    j["synthesis"] = {{"q1", c.q1}, {"form", to_string(c.form)}};
  }
  return j;
}

nlohmann::json to_json(const ProbeRecord& p) {
  return {{"T", p.T},           {"degree", p.degree},       {"feasible", p.feasible},
          {"status", p.status}, {"margin", p.margin},       {"eig_min", p.eig_min},
          {"residual", p.residual}, {"iterations", p.iterations}, {"message", p.message}};
}

nlohmann::json to_json(const AuditReport& r) {
  nlohmann::json ce = nlohmann::json::array();
  for (const auto& v : r.counterexamples) {
    ce.push_back({{"kind", v.kind},
                  {"seed", v.seed},
                  {"index", v.index},
                  {"time", v.time},
                  {"state", std::vector<double>(v.state.data(), v.state.data() + v.state.size())},
                  {"excess", v.excess}});
  }
  return {{"trajectories", r.trajectories},
          {"unsafe_hits", r.unsafe_hits},
          {"decrease_violations", r.decrease_violations},
          {"blowups", r.blowups},
          {"hull_conflicts", r.hull_conflicts},
          {"span_B", r.span_B},
          {"slack", r.slack},
          {"max_increase", r.max_increase},
          {"counterexamples", ce},
          {"pass", r.pass}};
}

nlohmann::json to_json(const SafeController& c) {
  nlohmann::json G = nlohmann::json::array();
  for (const auto& row : c.G()) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& g : row) r.push_back(to_json(g));
    G.push_back(r);
  }
  nlohmann::json j = {{"state_names", c.state_names()},
                      {"B", to_json(c.B())},
                      {"W", to_json(c.W())},
                      {"G", G},
                      {"flip_sign", c.flip_sign},
                      {"delta", c.delta},
                      {"singular_evaluations", c.singularities().size()},
                      {"max_abs_input", c.max_abs_input()}};
  j["u_max"] = c.u_max ? nlohmann::json(*c.u_max) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const HorizonSweepResult& r) {
  nlohmann::json degs = nlohmann::json::array();
  for (const auto& d : r.degrees) {
    nlohmann::json probes = nlohmann::json::array();
    for (const auto& p : d.probes) probes.push_back(to_json(p));
    degs.push_back({{"degree", d.degree},
                    {"verified_T", d.verified_T ? nlohmann::json(*d.verified_T) : nlohmann::json("none")},
                    {"certificate", d.certificate ? to_json(*d.certificate) : nlohmann::json(nullptr)},
                    {"probes", probes},
                    {"monotonicity_violations", d.monotonicity_violations}});
  }
  return {{"degrees", degs}, {"warnings", r.warnings}};
}

}  // namespace inclusioncert
