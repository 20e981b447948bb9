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

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "inclusioncert/certify.h"
#include "inclusioncert/examples.h"
#include "inclusioncert/inclusion.h"
#include "inclusioncert/poly.h"
#include "inclusioncert/sdp.h"
#include "inclusioncert/sdpa.h"
#include "inclusioncert/sos.h"
#include "inclusioncert/spline.h"

namespace ic = inclusioncert;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Collects the sub-checks of one criterion.
class Criterion {
 public:
  explicit Criterion(std::string name) : name_(std::move(name)), start_(Clock::now()) {}

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass_ = false;
      failures_.push_back(what);
    }
    std::cerr << "  [" << name_ << "] " << (ok ? "ok   " : "FAIL ") << what << "\n";
  }
  void note(const std::string& what) { std::cerr << "  [" << name_ << "] .... " << what << "\n"; }
  double elapsed() const { return seconds_since(start_); }

  bool finish(double budget_s) {
    const double t = elapsed();
    require(t < budget_s, "runtime " + fmt(t) + " s < " + fmt(budget_s) + " s");
    std::cout << (pass_ ? "PASS " : "FAIL ") << name_ << " (" << fmt(t) << " s)";
    if (!pass_) {
      std::cout << ":";
      for (const auto& f : failures_) std::cout << " [" << f << "]";
    }
    std::cout << std::endl;
    return pass_;
  }

  static std::string fmt(double v, int prec = 6) {
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
  }

 private:
  std::string name_;
  Clock::time_point start_;
  bool pass_ = true;
  std::vector<std::string> failures_;
};

std::string fmt(double v, int prec = 6) { return Criterion::fmt(v, prec); }

// Every certificate issued below, audited again under criterion 4.
struct Issued {
  std::string label;
  ic::BarrierCertificate cert;
  ic::DifferentialInclusion di;
  ic::UnsafeSet unsafe;
  ic::Feedback controller;
  const ic::SideInfo* side = nullptr;
};
std::vector<Issued> g_issued;

// Problems exported under criterion 8.
std::vector<std::pair<std::string, ic::SdpStandardForm>> g_sos_suite;

ic::Polynomial P(const std::string& s) { return ic::Polynomial::parse(s); }

// ---------------------------------------------------------------- splines

bool spline_suite() {
  Criterion c("1 spline suite");
  std::mt19937_64 rng(1);

  double pou = 0.0;
  for (int nb : {4, 7, 12, 25}) {
    const auto kv = ic::KnotVector::clamped_uniform(-1.0, 2.5, nb, 3);
    std::uniform_real_distribution<double> u(-1.0, 2.5);
    for (int k = 0; k < 1000; ++k) {
      const double t = u(rng);
      double s = 0.0;
      for (int i = 0; i < nb; ++i) s += ic::basis_eval(kv, i, 3, t);
      pou = std::max(pou, std::abs(s - 1.0));
    }
  }
  c.require(pou <= 1e-10, "partition of unity max err " + fmt(pou) + " <= 1e-10");

  // Central differences on a non-uniform knot vector, away from knots.
  const ic::KnotVector kv({0.0, 0.0, 0.0, 0.0, 0.3, 0.7, 1.1, 1.6, 2.0, 2.0, 2.0, 2.0});
  std::uniform_real_distribution<double> ut(0.0, 2.0);
  const double h = 1e-7;
  double dmax = 0.0;
  int checked = 0;
  while (checked < 1000) {
    const double t = ut(rng);
    bool near_knot = false;
    for (double k : kv.knots()) near_knot |= std::abs(t - k) < 1e-4;
    if (near_knot) continue;
    for (int p = 1; p <= 3; ++p) {
      for (int i = 0; i < kv.num_basis(p); ++i) {
        const double fd =
            (ic::basis_eval(kv, i, p, t + h) - ic::basis_eval(kv, i, p, t - h)) / (2 * h);
        dmax = std::max(dmax, std::abs(fd - ic::basis_derivative(kv, i, p, t)));
      }
    }
    ++checked;
  }
  c.require(dmax <= 1e-6, "derivative vs finite differences max err " + fmt(dmax) + " <= 1e-6");

  ic::TrajectoryData d;
  d.times = {0.0, 0.13, 0.3, 0.5, 0.8, 1.1, 1.4, 1.45, 1.7, 2.0};
  d.states.resize(static_cast<Eigen::Index>(d.times.size()), 1);
  for (std::size_t i = 0; i < d.times.size(); ++i) {
    d.states(static_cast<Eigen::Index>(i), 0) = std::pow(d.times[i], 3);
  }
  d.inputs.resize(static_cast<Eigen::Index>(d.times.size()), 0);
  d.state_names = {"x"};
  const auto m = ic::fit_trajectory_spline(d);
  double cubic = 0.0;
  for (int k = 0; k <= 1000; ++k) {
    const double t = 2.0 * k / 1000.0;
    cubic = std::max(cubic, std::abs(m.value(0, t) - t * t * t));
  }
  c.require(cubic <= 1e-9, "t^3 reproduction max err " + fmt(cubic) + " <= 1e-9");
  c.require(m.interpolation_residual <= 1e-8,
            "t^3 interpolation residual " + fmt(m.interpolation_residual) + " <= 1e-8");

  const auto ex = ic::generate_example(ic::default_example("example1"));
  const auto mx = ic::fit_trajectory_spline(ex);
  c.require(mx.interpolation_residual <= 1e-8,
            "example data interpolation residual " + fmt(mx.interpolation_residual) + " <= 1e-8");
  return c.finish(5.0);
}

// ---------------------------------------------------------------- SOS / SDP

// Random problem with known strictly feasible primal and dual points.
ic::SdpStandardForm random_problem(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dim(2, 6);
  std::normal_distribution<double> g(0.0, 1.0);
  ic::SdpStandardForm p;
  const int nblocks = 1 + static_cast<int>(rng() % 3);
  for (int k = 0; k < nblocks; ++k) p.block_sizes.push_back(dim(rng));
  p.block_sizes.push_back(-dim(rng));
  int total = 0;
  for (int s : p.block_sizes) total += std::abs(s);
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
    Eigen::MatrixXd cm = q * q.transpose() + 0.5 * Eigen::MatrixXd::Identity(d, d);
    if (s < 0) {
      a = Eigen::MatrixXd(a.diagonal().asDiagonal());
      cm = Eigen::MatrixXd(cm.diagonal().asDiagonal());
    }
    x0.push_back(a);
    s0.push_back(cm);
  }
  Eigen::VectorXd y0(m);
  for (int i = 0; i < m; ++i) y0(i) = g(rng);
  p.b = Eigen::VectorXd::Zero(m);
  std::vector<Eigen::MatrixXd> cmat = s0;
  std::uniform_real_distribution<double> keep(0.0, 1.0);
  for (int i = 0; i < m; ++i) {
    std::vector<ic::SdpEntry> row;
    for (std::size_t k = 0; k < p.block_sizes.size(); ++k) {
      const int d = std::abs(p.block_sizes[k]);
      for (int r = 0; r < d; ++r) {
        for (int col = r; col < d; ++col) {
          if (p.block_sizes[k] < 0 && r != col) continue;
          if (keep(rng) > 0.35) continue;
          const double v = g(rng);
          row.push_back({static_cast<int>(k), r, col, v});
          const double f = r == col ? 1.0 : 2.0;
          p.b(i) += f * v * x0[k](r, col);
          cmat[k](r, col) += y0(i) * v;
          if (r != col) cmat[k](col, r) += y0(i) * v;
        }
      }
    }
    p.constraints.push_back(row);
  }
  for (std::size_t k = 0; k < cmat.size(); ++k) {
    const int d = std::abs(p.block_sizes[k]);
    for (int r = 0; r < d; ++r)
      for (int col = r; col < d; ++col)
        if (cmat[k](r, col) != 0.0 && (p.block_sizes[k] > 0 || r == col)) {
          p.cost.push_back({static_cast<int>(k), r, col, cmat[k](r, col)});
        }
  }
  p.free_cost = Eigen::VectorXd(0);
  return p;
}

bool sos_suite() {
  Criterion c("2 SOS/SDP suite");

  {
    ic::SosProgram prog;
    prog.add_sos_constraint(P("x^2 + 2*x + 1"), "square");
    const auto comp = prog.compile();
    g_sos_suite.emplace_back("square", comp.sdp);
    const auto sdp = ic::solve_sdp(comp.sdp);
    const auto r = ic::recover_solution(prog, comp, sdp, false);
    c.require(sdp.status == ic::SdpStatus::kOptimal && r.all_pass,
              "(x+1)^2 status " + ic::to_string(sdp.status));
    const auto squares =
        ic::sos_decomposition(r.grams.at(0), comp.encodings[0].basis, comp.encodings[0].vars);
    ic::Polynomial sum({"x"});
    for (const auto& q : squares) sum += q * q;
    c.require(sum.same_function(P("(x+1)^2"), 1e-6), "sum of squares equals (x+1)^2 within 1e-6");
    double err = 1.0;
    if (!squares.empty()) {
      const auto& q = squares.back();
      const double s = q.coefficient(ic::Monomial({1})) < 0 ? -1.0 : 1.0;
      err = std::abs(s * q.coefficient(ic::Monomial({1})) - 1.0) +
            std::abs(s * q.coefficient(ic::Monomial({0})) - 1.0);
    }
    c.require(err <= 1e-6, "dominant square is x + 1, err " + fmt(err));
  }

  {
    ic::SosProgram prog;
    prog.add_sos_constraint(P("x"), "odd");
    const auto comp = prog.compile();
    g_sos_suite.emplace_back("odd", comp.sdp);
    const auto sdp = ic::solve_sdp(comp.sdp);
    c.require(sdp.status == ic::SdpStatus::kPrimalInfeasible,
              "x in Sigma reports " + ic::to_string(sdp.status));
  }

  {
    ic::SosProgram prog;
    prog.declare_unknown("lambda", {}, 0, ic::UnknownKind::kFree);
    prog.add_sos_constraint(prog.poly("lambda") + ic::SymPoly(P("x^4 - 3*x^2")), "lower");
    prog.minimize(prog.poly("lambda"));
    g_sos_suite.emplace_back("quartic", prog.compile().sdp);
    const auto r = ic::solve_sos(prog);
    // min of x^4 - 3x^2 is at x^2 = 3/2.
    const double oracle = -(1.5 * 1.5 - 3.0 * 1.5);
    c.require(r.status == ic::SdpStatus::kOptimal && r.all_pass &&
                  std::abs(r.objective - oracle) <= 1e-5,
              "lambda* = " + fmt(r.objective, 10) + " vs " + fmt(oracle) + " (tol 1e-5)");
  }

  std::mt19937_64 rng(2026);
  int optimal = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_problem(rng);
    g_sos_suite.emplace_back("random " + std::to_string(trial), p);
    const auto sol = ic::solve_sdp(p);
    const double res =
        std::max({sol.residuals.primal, sol.residuals.dual, sol.residuals.gap});
    worst = std::max(worst, res);
    if (sol.status == ic::SdpStatus::kOptimal && res <= 1e-8) ++optimal;
  }
  c.require(optimal == 50, "random SDPs optimal " + std::to_string(optimal) +
                               "/50, worst KKT residual " + fmt(worst) + " <= 1e-8");
  return c.finish(30.0);
}

// ---------------------------------------------------------------- Example I

// Data on (0, 2] at 0.1 spacing, fitted and extrapolated to T_hi.
ic::DifferentialInclusion example1_inclusion(double T_hi) {
  auto spec = ic::default_example("example1");
  spec.t_first = 0.1;
  spec.t_last = 2.0;
  const auto d = ic::generate_example(spec);
  const auto m = ic::fit_trajectory_spline(d);
  ic::RegularityInfo reg;
  reg.M = 5.0;
  return ic::build_inclusion(ic::extrapolation_model(m, d.times.back(), T_hi), reg, m.x_last,
                             {"x"});
}

// First time x reaches 9 by bisection on dense dopri5 output.
double true_unsafe_time() {
  const ic::OdeRhs rhs = [](const std::vector<double>& x, std::vector<double>& dx, double) {
    dx[0] = 0.5 * x[0] * x[0] - 0.05 * x[0] * x[0] * x[0];
  };
  double lo = 0.0, hi = 5.0;
  for (int k = 0; k < 60; ++k) {
    const double mid = 0.5 * (lo + hi);
    const double x = ic::integrate_dense(rhs, {1.0}, 0.0, {mid}).front().front();
    (x >= 9.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

std::set<std::vector<int>> support(const ic::Polynomial& p, const ic::VarList& order) {
  std::set<std::vector<int>> s;
  const auto q = p.embed(order);
  const double scale = std::max(1.0, q.max_abs_coefficient());
  for (const auto& [mono, coef] : q.terms()) {
    if (std::abs(coef) > 1e-9 * scale) s.insert(mono.exponents());
  }
  return s;
}

bool example1_sweep() {
  Criterion c("3 Example I horizon sweep");
  const double t_true = true_unsafe_time();
  c.note("dense oracle unsafe time " + fmt(t_true, 8));
  c.require(std::abs(t_true - 2.66) < 0.01, "oracle near the reported 2.66");
  const double cap = t_true + 0.02;

  const double T_hi = 2.7;
  const auto di = example1_inclusion(T_hi);
  ic::UnsafeSet u;
  u.constraints = {P("9 - x")};
  ic::SweepOptions so;
  so.tol = 0.01;
  const std::vector<int> degrees = {1, 2, 3, 4, 5, 6};
  const auto r = ic::sweep_horizon(di, u, degrees, ic::default_sweep_lower(di, 1.9), T_hi, so);
  for (const auto& w : r.warnings) c.note("warning: " + w);

  const double target[] = {2.26, 2.34, 2.41, 2.45, 2.46, 2.49};
  double last = 0.0;
  for (std::size_t k = 0; k < r.degrees.size(); ++k) {
    const auto& ds = r.degrees[k];
    const std::string deg = "degree " + std::to_string(ds.degree);
    for (const auto& p : ds.probes) {
      c.note(deg + " probe T=" + fmt(p.T) + " " + (p.feasible ? "feasible" : "infeasible") +
             " " + p.status + " c=" + fmt(p.margin));
    }
    if (!ds.verified_T) {
      c.require(false, deg + " has a verified horizon");
      continue;
    }
    const double T = *ds.verified_T;
    c.require(std::abs(T - target[k]) <= 0.15,
              deg + " T=" + fmt(T) + " within 0.15 of " + fmt(target[k]));
    c.require(T >= last, deg + " non-decreasing");
    c.require(T <= cap, deg + " T <= " + fmt(cap));
    last = T;
    if (ds.certificate) {
      g_issued.push_back({"Example I " + deg, *ds.certificate, di, u, nullptr, nullptr});
    }
  }

  // Support of the degree-3 B reported alongside the sweep.
  const ic::VarList tx = {"t", "x"};
  const auto printed = support(P("-0.496*t^3 + 0.119*t^2*x + 0.0449*t^2 - 0.0383*t*x^2"
                                 " - 0.5855*t*x - 0.8398*t + 0.1063*x^2 + 1.389*x"),
                               tx);
  if (r.degrees.size() > 2 && r.degrees[2].certificate) {
    const auto& B = r.degrees[2].certificate->B;
    const auto ours = support(B, tx);
    const bool covers = std::includes(ours.begin(), ours.end(), printed.begin(), printed.end());
    c.note("degree-3 B = " + B.to_string(4));
    c.require(covers && B.degree() <= 3,
              "degree-3 B support (" + std::to_string(ours.size()) +
                  " monomials, deg <= 3) contains the reported " +
                  std::to_string(printed.size()) + " monomials");
  } else {
    c.require(false, "degree-3 certificate available for support check");
  }
  return c.finish(600.0);
}

// ---------------------------------------------------------------- synthesis

bool example1_synthesis() {
  Criterion c("5 Example I synthesis");
  const auto d = ic::generate_example(ic::default_example("example1_synthesis"));
  const auto m = ic::fit_control_affine(d, ic::fit_trajectory_spline(d));
  auto cam = ic::extrapolation_model(m, d.times.back(), 10.0);
  const Eigen::VectorXd x3 = ic::open_loop_prediction(cam, m.x_last, d.times.back(), 3.0);
  c.note("open-loop prediction x(3) = " + fmt(x3(0)));
  cam.t_start = 3.0;
  ic::RegularityInfo reg;
  reg.M = 5.0;
  const auto di = ic::build_inclusion(cam, reg, x3, {"x"});
  ic::UnsafeSet u;
  u.constraints = {P("10 - x")};

  {
    ic::CertifyOptions printed;
    printed.form = ic::SynthesisForm::kPrinted;
    const auto rp = ic::synthesize_controller(di, u, 10.0, 2, std::nullopt, nullptr, printed);
    c.note(std::string("printed-form synthesis ") + (rp.feasible ? "feasible" : "infeasible"));
  }

  const auto r = ic::synthesize_controller(di, u, 10.0, 2);
  for (const auto& p : r.probes) c.note("probe " + ic::to_json(p).dump());
  c.require(r.feasible && r.controller.has_value(), "degree-2 synthesis feasible");
  if (!r.feasible || !r.controller) return c.finish(300.0);
  c.note("B = " + r.certificate->B.to_string(4));
  c.note("W = " + r.certificate->W_minus.to_string(4));
  c.require(r.controller_sound, "controllability grid check, min |dB/dx G| " + fmt(r.grid.min_abs));

  const ic::SafeController ctrl = *r.controller;
  const ic::Feedback fb = [ctrl](double t, const Eigen::VectorXd& x) { return ctrl.evaluate(t, x); };

  ic::UnsafeSet whole = u;
  whole.gate = ic::TimeGate::kWholeHorizon;
  ic::EnvelopeOptions eo;
  eo.seed = 5;
  const auto env = ic::monte_carlo_envelope(di, fb, &whole, 500, eo);
  const double xmax = env.max.col(0).maxCoeff();
  c.require(env.num_trajectories == 500 && env.hits.empty() && env.blowups.empty() && xmax < 10.0,
            std::to_string(env.num_trajectories) + " controlled trajectories, " +
                std::to_string(env.hits.size()) + " reach x >= 10 on [3, 10], max x " + fmt(xmax));
  c.note("max |u| " + fmt(ctrl.max_abs_input()));
  g_issued.push_back({"Example I synthesis", *r.certificate, di, u, fb, nullptr});
  return c.finish(300.0);
}

// ---------------------------------------------------------------- aircraft

ic::DifferentialInclusion aircraft_inclusion(const std::string& generator, double T) {
  const auto d = ic::generate_example(ic::default_example(generator));
  auto m = ic::fit_trajectory_spline(d);
  if (d.num_inputs() > 0) m = ic::fit_control_affine(d, m);
  ic::RegularityInfo reg;
  reg.M = 10.0;
  return ic::build_inclusion(ic::extrapolation_model(m, d.times.back(), T), reg, m.x_last,
                             {"V", "gamma", "z"});
}

ic::UnsafeSet aircraft_unsafe() {
  const double v_safe = ic::ExampleConstants::kSafeSpeedPlaceholder;
  ic::UnsafeSet u;
  u.constraints = {P(std::to_string(v_safe) + " - V"), P("z"), P("-z")};
  return u;
}

bool aircraft() {
  Criterion c("6 aircraft scenarios");
  const auto u = aircraft_unsafe();
  c.note("V_safe = " + fmt(ic::ExampleConstants::kSafeSpeedPlaceholder));

  const double T_wing = 2.5;
  const auto wing = aircraft_inclusion("aircraft_wing_failure", T_wing);
  int first = -1;
  for (int deg = 1; deg <= 5 && first < 0; ++deg) {
    const auto r = ic::verify_safety(wing, u, T_wing, deg);
    c.note("wing degree " + std::to_string(deg) + " " + ic::to_json(r.probe).dump());
    if (r.feasible) {
      first = deg;
      g_issued.push_back({"wing failure degree " + std::to_string(deg), *r.certificate, wing, u,
                          nullptr, nullptr});
    }
  }
  c.require(first > 0, "wing failure certified at degree " + std::to_string(first) +
                           " <= 5, T = " + fmt(T_wing));

  const double T_engine = 5.0;
  const auto engine = aircraft_inclusion("aircraft_engine_failure", T_engine);
  {
    ic::EnvelopeOptions eo;
    eo.force_extremes = true;
    const auto env = ic::monte_carlo_envelope(engine, nullptr, &u, 100, eo);
    c.note("engine uncontrolled: " + std::to_string(env.hits.size()) +
           " hits, final V in [" + fmt(env.min(env.min.rows() - 1, 0)) + ", " +
           fmt(env.max(env.max.rows() - 1, 0)) + "]");
  }
  const auto r = ic::synthesize_controller(engine, u, T_engine, 3);
  for (const auto& p : r.probes) c.note("engine probe " + ic::to_json(p).dump());
  c.require(r.feasible && r.controller.has_value(), "engine degree-3 synthesis feasible");
  if (r.feasible && r.controller) {
    const ic::SafeController ctrl = *r.controller;
    const ic::Feedback fb = [ctrl](double t, const Eigen::VectorXd& x) {
      return ctrl.evaluate(t, x);
    };
    const auto rep = ic::falsify_certificate(*r.certificate, engine, u, 500, 6, fb);
    c.require(rep.pass && rep.unsafe_hits == 0,
              std::to_string(rep.trajectories) + " controlled engine trajectories, " +
                  std::to_string(rep.unsafe_hits) + " unsafe hits, " +
                  std::to_string(rep.decrease_violations) + " decrease violations");
    c.note("engine max |u| " + fmt(ctrl.max_abs_input()));
    g_issued.push_back({"engine failure synthesis", *r.certificate, engine, u, fb, nullptr});
  }
  return c.finish(900.0);
}

// ---------------------------------------------------------------- side info

ic::SideInfo g_length;

bool pendulum() {
  Criterion c("7 side-information regression");
  const auto d = ic::generate_example(ic::default_example("pendulum"));
  const auto sm = ic::fit_trajectory_spline(d);
  ic::RegularityInfo reg;
  reg.M = 1.0;
  const double tN = d.times.back();
  const double T = tN + 0.5;
  const auto di =
      ic::build_inclusion(ic::extrapolation_model(sm, tN, T), reg, sm.x_last, {"x", "y"});
  ic::UnsafeSet u;
  u.constraints = {P("1.44 - x^2 - y^2")};
  g_length.add_equality(P("x^2 + y^2 - 1"));

  const auto plain = ic::verify_safety(di, u, T, 4);
  c.require(!plain.feasible, "without side information: " + plain.probe.status +
                                 (plain.feasible ? " feasible" : " infeasible"));

  ic::EnvelopeOptions eo;
  eo.force_extremes = true;
  eo.seed = 3;
  const auto off = ic::monte_carlo_envelope(di, nullptr, &u, 200, eo);
  c.require(!off.hits.empty(),
            "unconstrained inclusion reaches r >= 1.2: " + std::to_string(off.hits.size()) + " hits");
  eo.sim.equalities = g_length.equalities();
  const auto on = ic::monte_carlo_envelope(di, nullptr, &u, 200, eo);
  c.require(on.hits.empty(),
            "on the manifold: " + std::to_string(on.hits.size()) + " hits");

  const auto side = ic::verify_safety(di, u, T, 4, &g_length);
  c.require(side.feasible, "with x^2 + y^2 = 1: " + side.probe.status +
                               (side.feasible ? " feasible" : " infeasible") +
                               ", c = " + fmt(side.probe.margin));
  if (side.certificate) {
    g_issued.push_back({"pendulum with length conservation", *side.certificate, di, u, nullptr,
                        &g_length});
  }
  return c.finish(300.0);
}

// ---------------------------------------------------------------- audit

bool audit_all() {
  Criterion c("4 soundness audit");
  c.require(!g_issued.empty(), std::to_string(g_issued.size()) + " certificates issued");
  for (const auto& is : g_issued) {
    const auto t0 = Clock::now();
    ic::AuditOptions ao;
    ao.side = is.side;
    const auto rep = ic::falsify_certificate(is.cert, is.di, is.unsafe, 1000, 20260101,
                                             is.controller, ao);
    const double t = seconds_since(t0);
    c.require(rep.pass && rep.unsafe_hits == 0 && rep.decrease_violations == 0 &&
                  rep.trajectories >= 1000 && t < 120.0,
              is.label + ": " + std::to_string(rep.trajectories) + " trajectories, " +
                  std::to_string(rep.unsafe_hits) + " hits, " +
                  std::to_string(rep.decrease_violations) + " decrease violations, " + fmt(t) +
                  " s");
  }
  return c.finish(120.0 * static_cast<double>(std::max<std::size_t>(1, g_issued.size())));
}

// ---------------------------------------------------------------- SDPA

bool sdpa_round_trip() {
  Criterion c("8 SDPA round-trip");
  // Certificate programs as well as the SOS suite.
  {
    const auto di = example1_inclusion(2.7);
    ic::UnsafeSet u;
    u.constraints = {P("9 - x")};
    for (int deg : {1, 3, 6}) {
      g_sos_suite.emplace_back(
          "Example I degree " + std::to_string(deg),
          ic::build_safety_program(di, u, 2.3, deg, nullptr, {}).program.compile().sdp);
    }
  }
  int same = 0;
  for (const auto& [label, p] : g_sos_suite) {
    const bool ok = ic::identical(ic::parse_sdpa(ic::export_sdpa(p)), ic::canonicalize(p));
    if (ok) {
      ++same;
    } else {
      c.require(false, label + " round-trips identically");
    }
  }
  c.require(same == static_cast<int>(g_sos_suite.size()),
            std::to_string(same) + "/" + std::to_string(g_sos_suite.size()) +
                " problems identical after export and parse");
  return c.finish(60.0);
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, std::function<bool()>>> criteria = {
      {"1", spline_suite},     {"2", sos_suite}, {"3", example1_sweep}, {"5", example1_synthesis},
      {"6", aircraft},         {"7", pendulum},  {"4", audit_all},      {"8", sdpa_round_trip},
  };
  int failed = 0;
  for (const auto& [id, run] : criteria) {
    bool ok = false;
    try {
      ok = run();
    } catch (const std::exception& e) {
      std::cout << "FAIL " << id << " threw: " << e.what() << std::endl;
    }
    if (!ok) ++failed;
  }
  std::cout << (failed == 0 ? "ALL PASS" : std::to_string(failed) + " criteria failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
