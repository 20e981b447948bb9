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

// inclusioncert: fit, verify, synthesize, simulate, sweep, generate.
//
// Exit codes: 0 ok, 1 usage, 2 data, 3 infeasible, 4 solver failure.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Core>

#include "CLI11.hpp"
#include "inclusioncert/certify.h"
#include "inclusioncert/examples.h"
#include "inclusioncert/inclusion.h"
#include "inclusioncert/sdpa.h"
#include "inclusioncert/spline.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace inclusioncert;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kUsage = 1, kData = 2, kInfeasible = 3, kSolver = 4 };

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InfeasibleResult : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Every flag, as the JSON config spells it. Values keep the flag's type.
struct RunConfig {
  std::string subcommand;
  std::string data;
  std::optional<double> horizon;
  std::optional<int> degree;
  std::string degrees;
  double M = 0.0;
  std::string sigma = "1";
  std::string unsafe;
  std::string gate = "terminal";
  std::string side;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::string sdpa_export;
  std::string form = "controlled";
  std::optional<double> q1;
  std::optional<double> t_start;
  bool strict = false;
  int samples = 0;
  int trajectories = 3;
  double tol = 0.01;
  std::optional<double> t_lo;
  int threads = 0;
  int max_iter = 200;
  // generate
  std::string generator = "example1";
  std::optional<int> num_samples;
  std::optional<double> t_first;
  std::optional<double> t_last;
  std::string spacing;
  std::string input;
  std::optional<double> failure_time;

  // Filled in by resolve().
  std::uint64_t seed_value = 0;
  std::string seed_source = "default";
  std::vector<int> degree_list;
};

json to_json(const RunConfig& c) {
  json j;
  auto opt = [&](const char* k, const auto& v) {
    if (v) j[k] = *v;
  };
  j["data"] = c.data;
  opt("horizon", c.horizon);
  opt("degree", c.degree);
  j["degrees"] = c.degrees;
  j["M"] = c.M;
  j["sigma"] = c.sigma;
  j["unsafe"] = c.unsafe;
  j["gate"] = c.gate;
  j["side"] = c.side;
  j["seed"] = c.seed_value;
  j["out"] = c.out;
  j["sdpa_export"] = c.sdpa_export;
  j["form"] = c.form;
  opt("q1", c.q1);
  opt("t_start", c.t_start);
  j["strict"] = c.strict;
  j["samples"] = c.samples;
  j["trajectories"] = c.trajectories;
  j["tol"] = c.tol;
  opt("t_lo", c.t_lo);
  j["threads"] = c.threads;
  j["max_iter"] = c.max_iter;
  j["generator"] = c.generator;
  opt("num_samples", c.num_samples);
  opt("t_first", c.t_first);
  opt("t_last", c.t_last);
  j["spacing"] = c.spacing;
  j["input"] = c.input;
  opt("failure_time", c.failure_time);
  return j;
}

template <typename T>
T config_value(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw UsageError("config key '" + key + "' has the wrong type");
  }
}

void apply_config_file(const std::string& path, RunConfig& c) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("config file '" + path + "': " + e.what());
  }
  if (!j.is_object()) throw UsageError("config file must hold a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (k == "data") c.data = config_value<std::string>(v, k);
    else if (k == "horizon") c.horizon = config_value<double>(v, k);
    else if (k == "degree") c.degree = config_value<int>(v, k);
    else if (k == "degrees") c.degrees = config_value<std::string>(v, k);
    else if (k == "M") c.M = config_value<double>(v, k);
    else if (k == "sigma") c.sigma = config_value<std::string>(v, k);
    else if (k == "unsafe") c.unsafe = config_value<std::string>(v, k);
    else if (k == "gate") c.gate = config_value<std::string>(v, k);
    else if (k == "side") c.side = config_value<std::string>(v, k);
    else if (k == "seed") c.seed = config_value<std::uint64_t>(v, k);
    else if (k == "out") c.out = config_value<std::string>(v, k);
    else if (k == "sdpa_export") c.sdpa_export = config_value<std::string>(v, k);
    else if (k == "form") c.form = config_value<std::string>(v, k);
    else if (k == "q1") c.q1 = config_value<double>(v, k);
    else if (k == "t_start") c.t_start = config_value<double>(v, k);
    else if (k == "strict") c.strict = config_value<bool>(v, k);
    else if (k == "samples") c.samples = config_value<int>(v, k);
    else if (k == "trajectories") c.trajectories = config_value<int>(v, k);
    else if (k == "tol") c.tol = config_value<double>(v, k);
    else if (k == "t_lo") c.t_lo = config_value<double>(v, k);
    else if (k == "threads") c.threads = config_value<int>(v, k);
    else if (k == "max_iter") c.max_iter = config_value<int>(v, k);
    else if (k == "generator") c.generator = config_value<std::string>(v, k);
    else if (k == "num_samples") c.num_samples = config_value<int>(v, k);
    else if (k == "t_first") c.t_first = config_value<double>(v, k);
    else if (k == "t_last") c.t_last = config_value<double>(v, k);
    else if (k == "spacing") c.spacing = config_value<std::string>(v, k);
    else if (k == "input") c.input = config_value<std::string>(v, k);
    else if (k == "failure_time") c.failure_time = config_value<double>(v, k);
    else throw UsageError("unknown config key '" + k + "'");
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    const auto a = cur.find_first_not_of(" \t");
    if (a == std::string::npos) continue;
    const auto b = cur.find_last_not_of(" \t");
    out.push_back(cur.substr(a, b - a + 1));
  }
  return out;
}

std::vector<int> parse_degrees(const RunConfig& c) {
  if (c.degree && !c.degrees.empty()) throw UsageError("give --degree or --degrees, not both");
  if (c.degree) return {*c.degree};
  if (c.degrees.empty()) return {};
  std::vector<int> out;
  const auto dots = c.degrees.find("..");
  try {
    if (dots != std::string::npos) {
      const int a = std::stoi(c.degrees.substr(0, dots));
      const int b = std::stoi(c.degrees.substr(dots + 2));
      if (b < a) throw UsageError("--degrees a..b needs a <= b");
      for (int d = a; d <= b; ++d) out.push_back(d);
    } else {
      for (const auto& p : split(c.degrees, ',')) out.push_back(std::stoi(p));
    }
  } catch (const std::logic_error& e) {
    if (dynamic_cast<const UsageError*>(&e)) throw;
    throw UsageError("malformed --degrees '" + c.degrees + "'");
  }
  for (int d : out) {
    if (d < 1) throw UsageError("degrees must be >= 1");
  }
  return out;
}

void resolve(RunConfig& c) {
  if (c.seed) {
    c.seed_value = *c.seed;
    c.seed_source = "flag";
  } else if (const char* env = std::getenv("INCLUSIONCERT_SEED")) {
    try {
      std::size_t pos = 0;
      c.seed_value = std::stoull(env, &pos);
      if (env[pos] != '\0') throw std::invalid_argument("junk");
    } catch (const std::exception&) {
      throw UsageError(std::string("INCLUSIONCERT_SEED is not an unsigned integer: '") + env + "'");
    }
    c.seed_source = "env";
  }
  c.degree_list = parse_degrees(c);
  if (!(c.M >= 0) || !std::isfinite(c.M)) throw UsageError("--M must be finite and >= 0");
  if (c.gate != "terminal" && c.gate != "whole") throw UsageError("--gate must be terminal or whole");
  if (c.form != "printed" && c.form != "controlled") {
    throw UsageError("--form must be printed or controlled");
  }
  if (c.samples < 0 || c.trajectories < 0) throw UsageError("counts must be >= 0");
  if (!(c.tol > 0)) throw UsageError("--tol must be > 0");
  if (c.max_iter < 1) throw UsageError("--max-iter must be >= 1");
  if (c.out.empty()) throw UsageError("--out must not be empty");
  const bool needs_data = c.subcommand != "generate";
  if (needs_data && c.data.empty()) throw UsageError("--data is required");
  const bool needs_horizon =
      c.subcommand == "verify" || c.subcommand == "synthesize" || c.subcommand == "sweep" ||
      c.subcommand == "simulate";
  if (needs_horizon && !c.horizon) throw UsageError("--horizon is required");
  if ((c.subcommand == "verify" || c.subcommand == "synthesize") && c.degree_list.size() != 1) {
    throw UsageError("--degree (a single degree) is required");
  }
  if (c.subcommand == "sweep" && c.degree_list.empty()) throw UsageError("--degrees is required");
  const bool needs_unsafe = c.subcommand == "verify" || c.subcommand == "synthesize" ||
                            c.subcommand == "sweep";
  if (needs_unsafe && split(c.unsafe, ';').empty()) throw UsageError("--unsafe is required");
}

// ---------------------------------------------------------------------------
// Output.

// Temp file then rename, so a reader never sees a partial artifact.
void write_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class Outputs {
 public:
  explicit Outputs(const RunConfig& c) : cfg_(c), dir_(c.out) {}

  void write(const std::string& name, const std::string& text) {
    write_atomic(dir_ / name, text);
    files_.push_back(name);
  }
  void write(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  void manifest(int exit_code) {
    const json cfg = to_json(cfg_);
    json m;
    m["subcommand"] = cfg_.subcommand;
    m["config"] = cfg;
    json hashed = cfg;
    hashed.erase("out");
    m["config_hash"] = hex(fnv1a(cfg_.subcommand + "\n" + hashed.dump()));
    m["seed"] = cfg_.seed_value;
    m["seed_source"] = cfg_.seed_source;
    m["versions"] = {{"inclusioncert", kVersion},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                   std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                     {"compiler", __VERSION__}};
    m["outputs"] = files_;
    m["exit_code"] = exit_code;
    m["timestamp"] = utc_now();  // not hashed
    write_atomic(dir_ / "manifest.json", m.dump(2) + "\n");
  }

 private:
  const RunConfig& cfg_;
  fs::path dir_;
  std::vector<std::string> files_;
};

// ---------------------------------------------------------------------------
// Pipeline.

struct Pipeline {
  TrajectoryData data;
  SplineModel model;
  ControlAffineModel cam;
  DifferentialInclusion di;
  double t_N = 0.0;
};

SplineModel fit(const TrajectoryData& data) {
  SplineModel m = fit_trajectory_spline(data);
  if (data.num_inputs() > 0) m = fit_control_affine(data, m);
  return m;
}

Pipeline build_pipeline(const RunConfig& c) {
  Pipeline p;
  p.data = read_trajectory_csv_file(c.data);
  p.model = fit(p.data);
  p.t_N = p.data.times.back();
  const double T = *c.horizon;
  if (!(T > p.t_N)) throw UsageError("--horizon must exceed the last sample time");
  p.cam = extrapolation_model(p.model, p.t_N, T);
  Eigen::VectorXd x0 = p.model.x_last;
  if (c.t_start) {
    if (*c.t_start < p.t_N || *c.t_start >= T) {
      throw UsageError("--t-start must lie in [last sample time, horizon)");
    }
    x0 = open_loop_prediction(p.cam, x0, p.t_N, *c.t_start);
    p.cam.t_start = *c.t_start;
  }
  RegularityInfo reg;
  reg.M = c.M;
  reg.sigma = Polynomial::parse(c.sigma, {"t"});
  p.di = build_inclusion(p.cam, reg, x0, p.data.state_names);
  return p;
}

UnsafeSet parse_unsafe(const RunConfig& c, const VarList& states) {
  UnsafeSet u;
  for (const auto& s : split(c.unsafe, ';')) u.constraints.push_back(Polynomial::parse(s, states));
  u.gate = c.gate == "whole" ? TimeGate::kWholeHorizon : TimeGate::kTerminal;
  u.validate(states);
  return u;
}

// "eq: p; phi: q; psi: r". States and t are the admissible variables.
std::optional<SideInfo> parse_side(const RunConfig& c, const VarList& states) {
  const auto items = split(c.side, ';');
  if (items.empty()) return std::nullopt;
  VarList vars{"t"};
  vars.insert(vars.end(), states.begin(), states.end());
  SideInfo side;
  for (const auto& item : items) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw UsageError("side entry '" + item + "' needs eq:, phi: or psi:");
    const auto kind = split(item.substr(0, colon), ' ');
    const std::string body = item.substr(colon + 1);
    const Polynomial p = Polynomial::parse(body, vars);
    if (kind.size() != 1) throw UsageError("side entry '" + item + "' has no kind");
    if (kind[0] == "eq") side.add_equality(p);
    else if (kind[0] == "phi") side.algebraic.push_back(p);
    else if (kind[0] == "psi") side.integral.push_back(p);
    else throw UsageError("side kind must be eq, phi or psi, got '" + kind[0] + "'");
  }
  return side;
}

CertifyOptions certify_options(const RunConfig& c) {
  CertifyOptions o;
  o.solver.max_iter = c.max_iter;
  o.strict = c.strict;
  o.form = c.form == "controlled" ? SynthesisForm::kControlled : SynthesisForm::kPrinted;
  return o;
}

// Infeasible versus solver trouble, from the probe's status.
[[noreturn]] void fail_probe(const ProbeRecord& p) {
  if (p.status == "max_iter" || p.status == "numerical_failure") {
    throw SolverFailure("solver failure at T=" + std::to_string(p.T) + ": " + p.status + " (" +
                        p.message + ")");
  }
  throw InfeasibleResult("no certificate at T=" + std::to_string(p.T) + ", degree " +
                         std::to_string(p.degree) + ": " + p.status + " (" + p.message + ")");
}

void export_program(const RunConfig& c, const Pipeline& p, const UnsafeSet& u,
                    const SideInfo* side, bool synthesis) {
  const SafetyProgram sp = build_safety_program(p.di, u, *c.horizon, c.degree_list.front(), side,
                                                certify_options(c), synthesis, c.q1.value_or(1.0));
  write_atomic(c.sdpa_export, export_sdpa(sp.program.compile().sdp));
}

// ---------------------------------------------------------------------------
// Subcommands.

void run_fit(const RunConfig& c, Outputs& out) {
  const TrajectoryData data = read_trajectory_csv_file(c.data);
  const SplineModel m = fit(data);
  json j;
  j["spline"] = inclusioncert::to_json(m);
  if (c.horizon) {
    if (!(*c.horizon > data.times.back())) {
      throw UsageError("--horizon must exceed the last sample time");
    }
    j["extrapolation"] = inclusioncert::to_json(extrapolation_model(m, data.times.back(), *c.horizon));
  }
  out.write("model.json", j);
  std::ostringstream csv;
  csv << std::setprecision(17) << 't';
  for (const auto& n : data.state_names) csv << ',' << n << ",d" << n;
  csv << '\n';
  constexpr int kPoints = 200;
  const double t0 = data.times.front();
  const double t1 = data.times.back();
  for (int k = 0; k <= kPoints; ++k) {
    const double t = t0 + (t1 - t0) * k / kPoints;
    csv << t;
    for (std::size_t l = 0; l < m.num_states(); ++l) csv << ',' << m.value(l, t) << ',' << m.derivative(l, t);
    csv << '\n';
  }
  out.write("fit.csv", csv.str());
}

void run_verify(const RunConfig& c, Outputs& out) {
  const Pipeline p = build_pipeline(c);
  const UnsafeSet u = parse_unsafe(c, p.di.state_names);
  const auto side = parse_side(c, p.di.state_names);
  const SideInfo* sp = side ? &*side : nullptr;
  if (!c.sdpa_export.empty()) {
    export_program(c, p, u, sp, false);
    return;
  }
  const VerifyResult r = verify_safety(p.di, u, *c.horizon, c.degree_list.front(), sp, certify_options(c));
  json j;
  j["feasible"] = r.feasible;
  j["probe"] = inclusioncert::to_json(r.probe);
  if (r.certificate) {
    j["certificate"] = inclusioncert::to_json(*r.certificate);
    if (c.samples > 0) {
      AuditOptions ao;
      ao.side = sp;
      ao.threads = c.threads;
      j["audit"] = inclusioncert::to_json(falsify_certificate(
          *r.certificate, p.di, u, static_cast<std::size_t>(c.samples), c.seed_value, nullptr, ao));
    }
  }
  out.write("certificate.json", j);
  if (!r.feasible) fail_probe(r.probe);
}

void run_synthesize(const RunConfig& c, Outputs& out) {
  const Pipeline p = build_pipeline(c);
  const UnsafeSet u = parse_unsafe(c, p.di.state_names);
  const auto side = parse_side(c, p.di.state_names);
  const SideInfo* sp = side ? &*side : nullptr;
  if (!c.sdpa_export.empty()) {
    export_program(c, p, u, sp, true);
    return;
  }
  const SynthesisResult r =
      synthesize_controller(p.di, u, *c.horizon, c.degree_list.front(), c.q1, sp, certify_options(c));
  json j;
  j["feasible"] = r.feasible;
  j["probes"] = json::array();
  for (const auto& pr : r.probes) j["probes"].push_back(inclusioncert::to_json(pr));
  if (r.certificate) j["certificate"] = inclusioncert::to_json(*r.certificate);
  out.write("certificate.json", j);
  if (!r.feasible) fail_probe(r.probes.back());
  json cj = inclusioncert::to_json(*r.controller);
  cj["grid_check"] = {{"pass", r.grid.pass}, {"min_abs", r.grid.min_abs}, {"points", r.grid.points}};
  cj["sound"] = r.controller_sound;
  if (c.samples > 0) {
    const SafeController ctrl = *r.controller;
    const Feedback fb = [ctrl](double t, const Eigen::VectorXd& x) { return ctrl.evaluate(t, x); };
    AuditOptions ao;
    ao.side = sp;
    ao.threads = c.threads;
    cj["audit"] = inclusioncert::to_json(falsify_certificate(
        *r.certificate, p.di, u, static_cast<std::size_t>(c.samples), c.seed_value, fb, ao));
  }
  out.write("controller.json", cj);
}

void run_simulate(const RunConfig& c, Outputs& out) {
  const Pipeline p = build_pipeline(c);
  if (p.di.num_inputs() > 0) throw UsageError("simulate runs the uncontrolled inclusion; data has inputs");
  std::optional<UnsafeSet> u;
  if (!split(c.unsafe, ';').empty()) u = parse_unsafe(c, p.di.state_names);
  EnvelopeOptions eo;
  eo.seed = c.seed_value;
  eo.force_extremes = true;
  const std::size_t n = c.samples > 0 ? static_cast<std::size_t>(c.samples) : 200;
  const Envelope env = monte_carlo_envelope(p.di, nullptr, u ? &*u : nullptr, n, eo);
  std::ostringstream csv;
  write_envelope_csv(csv, env);
  out.write("envelope.csv", csv.str());
  for (int k = 0; k < c.trajectories; ++k) {
    const Trajectory tr = simulate_selection(p.di, nullptr, c.seed_value, static_cast<std::uint64_t>(k));
    std::ostringstream ts;
    inclusioncert::write_trajectory_csv(ts, tr, p.di.state_names);
    std::ostringstream name;
    name << "trajectory_" << std::setw(3) << std::setfill('0') << k << ".csv";
    out.write(name.str(), ts.str());
  }
  json j;
  j["trajectories"] = env.num_trajectories;
  j["unsafe_hits"] = json::array();
  for (const auto& h : env.hits) j["unsafe_hits"].push_back(inclusioncert::to_json(h));
  j["blowups"] = json::array();
  for (const auto& h : env.blowups) j["blowups"].push_back(inclusioncert::to_json(h));
  j["regularity"] = inclusioncert::to_json(p.di.reg);
  out.write("simulation.json", j);
}

void run_sweep(const RunConfig& c, Outputs& out) {
  const Pipeline p = build_pipeline(c);
  const UnsafeSet u = parse_unsafe(c, p.di.state_names);
  const auto side = parse_side(c, p.di.state_names);
  SweepOptions so;
  so.tol = c.tol;
  so.certify = certify_options(c);
  so.side = side ? &*side : nullptr;
  so.threads = c.threads;
  const double span = p.data.times.back() - p.data.times.front();
  const double lo = c.t_lo.value_or(default_sweep_lower(p.di, span));
  const HorizonSweepResult r = sweep_horizon(p.di, u, c.degree_list, lo, *c.horizon, so);
  out.write("sweep.json", inclusioncert::to_json(r));
  std::ostringstream csv;
  csv << std::setprecision(17) << "degree,verified_T,probes,monotonicity_violations\n";
  for (const auto& d : r.degrees) {
    csv << d.degree << ',';
    if (d.verified_T) csv << *d.verified_T;
    else csv << "none";
    csv << ',' << d.probes.size() << ',' << d.monotonicity_violations << '\n';
  }
  out.write("sweep.csv", csv.str());
}

void run_generate(const RunConfig& c, Outputs& out) {
  ExampleSpec s;
  try {
    s = default_example(c.generator);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (c.num_samples) s.num_samples = *c.num_samples;
  if (c.t_first) s.t_first = *c.t_first;
  if (c.t_last) s.t_last = *c.t_last;
  if (!c.spacing.empty()) s.spacing = c.spacing;
  if (!c.input.empty()) s.input = c.input;
  if (c.failure_time) s.failure_time = *c.failure_time;
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const TrajectoryData d = generate_example(s);
  std::ostringstream csv;
  inclusioncert::write_trajectory_csv(csv, d);
  out.write("data.csv", csv.str());
}

// ---------------------------------------------------------------------------

struct Flags {
  std::string config;
  RunConfig cfg;
};

void add_flags(CLI::App* sub, Flags& f) {
  RunConfig& c = f.cfg;
  sub->add_option("--config", f.config, "JSON file mirroring the flags");
  sub->add_option("--data", c.data, "trajectory CSV (t, states, u* inputs)");
  sub->add_option("--horizon", c.horizon, "horizon T");
  sub->add_option("--degree", c.degree, "certificate degree");
  sub->add_option("--degrees", c.degrees, "degree range a..b or list a,b,c");
  sub->add_option("--M", c.M, "regularity bound M");
  sub->add_option("--sigma", c.sigma, "sigma(t), polynomial in t");
  sub->add_option("--unsafe", c.unsafe, "unsafe set l_1; l_2; ... (all l_i <= 0)");
  sub->add_option("--gate", c.gate, "terminal | whole");
  sub->add_option("--side", c.side, "side information eq: p; phi: q; psi: r");
  sub->add_option("--seed", c.seed, "RNG seed (else INCLUSIONCERT_SEED, else 0)");
  sub->add_option("--out", c.out, "output directory");
  sub->add_option("--sdpa-export", c.sdpa_export, "write the SDP as .dat-s instead of solving");
  sub->add_option("--form", c.form, "synthesis form: controlled | printed");
  sub->add_option("--q1", c.q1, "fixed q1 (default: try +1 then -1)");
  sub->add_option("--t-start", c.t_start, "start of the certified horizon (default last sample)");
  sub->add_flag("--strict", c.strict, "boundary condition over the whole horizon");
  sub->add_option("--samples", c.samples, "audit or simulation trajectory count");
  sub->add_option("--trajectories", c.trajectories, "trajectory CSVs written by simulate");
  sub->add_option("--tol", c.tol, "sweep bisection tolerance");
  sub->add_option("--t-lo", c.t_lo, "sweep lower end");
  sub->add_option("--threads", c.threads, "worker threads (0 = hardware)");
  sub->add_option("--max-iter", c.max_iter, "SDP iteration limit");
  sub->add_option("--generator", c.generator, "example generator id");
  sub->add_option("--num-samples", c.num_samples, "sample count");
  sub->add_option("--t-first", c.t_first, "first sample time");
  sub->add_option("--t-last", c.t_last, "last sample time");
  sub->add_option("--spacing", c.spacing, "uniform | log");
  sub->add_option("--input", c.input, "zero | sin:A:w | trim | excite");
  sub->add_option("--failure-time", c.failure_time, "aircraft failure time");
}

// Config file first, explicitly given flags on top.
RunConfig merge(const CLI::App* sub, const Flags& f) {
  RunConfig c;
  if (!f.config.empty()) apply_config_file(f.config, c);
  const RunConfig& g = f.cfg;
  auto given = [&](const char* flag) { return sub->count(flag) > 0; };
  if (given("--data")) c.data = g.data;
  if (given("--horizon")) c.horizon = g.horizon;
  if (given("--degree")) c.degree = g.degree;
  if (given("--degrees")) c.degrees = g.degrees;
  if (given("--M")) c.M = g.M;
  if (given("--sigma")) c.sigma = g.sigma;
  if (given("--unsafe")) c.unsafe = g.unsafe;
  if (given("--gate")) c.gate = g.gate;
  if (given("--side")) c.side = g.side;
  if (given("--seed")) c.seed = g.seed;
  if (given("--out")) c.out = g.out;
  if (given("--sdpa-export")) c.sdpa_export = g.sdpa_export;
  if (given("--form")) c.form = g.form;
  if (given("--q1")) c.q1 = g.q1;
  if (given("--t-start")) c.t_start = g.t_start;
  if (given("--strict")) c.strict = g.strict;
  if (given("--samples")) c.samples = g.samples;
  if (given("--trajectories")) c.trajectories = g.trajectories;
  if (given("--tol")) c.tol = g.tol;
  if (given("--t-lo")) c.t_lo = g.t_lo;
  if (given("--threads")) c.threads = g.threads;
  if (given("--max-iter")) c.max_iter = g.max_iter;
  if (given("--generator")) c.generator = g.generator;
  if (given("--num-samples")) c.num_samples = g.num_samples;
  if (given("--t-first")) c.t_first = g.t_first;
  if (given("--t-last")) c.t_last = g.t_last;
  if (given("--spacing")) c.spacing = g.spacing;
  if (given("--input")) c.input = g.input;
  if (given("--failure-time")) c.failure_time = g.failure_time;
  c.subcommand = sub->get_name();
  return c;
}

// Exit code and message for the exception in flight.
std::pair<int, std::string> classify(const std::exception_ptr& ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const InfeasibleResult& e) {
    return {kInfeasible, e.what()};
  } catch (const SolverFailure& e) {
    return {kSolver, e.what()};
  } catch (const DataError& e) {
    return {kData, std::string("data error: ") + e.what()};
  } catch (const fs::filesystem_error& e) {
    return {kData, e.what()};
  } catch (const std::invalid_argument& e) {
    return {kUsage, e.what()};
  } catch (const InclusionError& e) {
    return {kUsage, e.what()};
  } catch (const std::exception& e) {
    return {kSolver, e.what()};
  }
}

int dispatch(RunConfig& c) {
  resolve(c);
  Outputs out(c);
  int code = kOk;
  try {
    if (c.subcommand == "fit") run_fit(c, out);
    else if (c.subcommand == "verify") run_verify(c, out);
    else if (c.subcommand == "synthesize") run_synthesize(c, out);
    else if (c.subcommand == "simulate") run_simulate(c, out);
    else if (c.subcommand == "sweep") run_sweep(c, out);
    else run_generate(c, out);
  } catch (...) {
    const auto [rc, msg] = classify(std::current_exception());
    code = rc;
    std::cerr << "inclusioncert: " << msg << "\n";
  }
  out.manifest(code);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-driven safety certificates for differential inclusions"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Flags flags;
  const std::vector<std::pair<const char*, const char*>> subs = {
      {"fit", "fit the spline and control-affine model"},
      {"verify", "search a barrier certificate"},
      {"synthesize", "synthesize a safe controller"},
      {"simulate", "Monte-Carlo envelope of the inclusion"},
      {"sweep", "largest verified horizon per degree"},
      {"generate", "write example data"},
  };
  for (const auto& [name, help] : subs) add_flags(app.add_subcommand(name, help), flags);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  const CLI::App* sub = app.get_subcommands().front();
  try {
    RunConfig c = merge(sub, flags);
    return dispatch(c);
  } catch (...) {
    const auto [rc, msg] = classify(std::current_exception());
    std::cerr << "inclusioncert: " << msg << "\n";
    return rc;
  }
}
