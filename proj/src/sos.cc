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

#include "inclusioncert/sos.h"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace inclusioncert {

namespace {

constexpr double kDrop = 1e-14;

void scrub(SymExpr& e) {
  if (std::abs(e.constant) < kDrop) e.constant = 0.0;
  for (auto it = e.linear.begin(); it != e.linear.end();) {
    it = std::abs(it->second) < kDrop ? e.linear.erase(it) : std::next(it);
  }
  for (auto it = e.quadratic.begin(); it != e.quadratic.end();) {
    it = std::abs(it->second) < kDrop ? e.quadratic.erase(it) : std::next(it);
  }
}

std::vector<int> positions(const VarList& from, const VarList& to) {
  std::vector<int> where(from.size(), -1);
  for (std::size_t i = 0; i < from.size(); ++i) {
    auto it = std::find(to.begin(), to.end(), from[i]);
    if (it != to.end()) where[i] = static_cast<int>(it - to.begin());
  }
  return where;
}

Monomial remap(const Monomial& m, const std::vector<int>& where, std::size_t n,
               const VarList& from) {
  std::vector<int> e(n, 0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i] == 0) continue;
    if (where[i] < 0) {
      throw std::invalid_argument("embed: variable '" + from[i] + "' missing from target varspace");
    }
    e[where[i]] = m[i];
  }
  return Monomial(std::move(e));
}

}  // namespace

SymExpr& SymExpr::operator+=(const SymExpr& o) {
  constant += o.constant;
  for (const auto& [k, v] : o.linear) linear[k] += v;
  for (const auto& [k, v] : o.quadratic) quadratic[k] += v;
  scrub(*this);
  return *this;
}

SymExpr SymExpr::scaled(double c) const {
  SymExpr r;
  if (c == 0.0) return r;
  r.constant = constant * c;
  for (const auto& [k, v] : linear) r.linear[k] = v * c;
  for (const auto& [k, v] : quadratic) r.quadratic[k] = v * c;
  scrub(r);
  return r;
}

SymExpr SymExpr::product(const SymExpr& a, const SymExpr& b) {
  if ((!a.quadratic.empty() && b.has_symbols()) || (!b.quadratic.empty() && a.has_symbols())) {
    throw std::invalid_argument("symbolic product of degree > 2");
  }
  SymExpr r;
  r.constant = a.constant * b.constant;
  for (const auto& [k, v] : a.linear) r.linear[k] += v * b.constant;
  for (const auto& [k, v] : b.linear) r.linear[k] += v * a.constant;
  for (const auto& [k, v] : a.quadratic) r.quadratic[k] += v * b.constant;
  for (const auto& [k, v] : b.quadratic) r.quadratic[k] += v * a.constant;
  for (const auto& [ka, va] : a.linear) {
    for (const auto& [kb, vb] : b.linear) {
      r.quadratic[{std::min(ka, kb), std::max(ka, kb)}] += va * vb;
    }
  }
  scrub(r);
  return r;
}

double SymExpr::evaluate(const std::vector<double>& values) const {
  double s = constant;
  for (const auto& [k, v] : linear) s += v * values.at(static_cast<std::size_t>(k));
  for (const auto& [k, v] : quadratic) {
    s += v * values.at(static_cast<std::size_t>(k.first)) * values.at(static_cast<std::size_t>(k.second));
  }
  return s;
}

SymPoly::SymPoly(const Polynomial& p) : vars_(p.vars()) {
  for (const auto& [m, c] : p.terms()) terms_[m].constant = c;
}

SymPoly::SymPoly(VarList vars, TermMap terms) : vars_(std::move(vars)) {
  for (auto& [m, e] : terms) {
    if (m.size() != vars_.size()) throw std::invalid_argument("monomial size mismatch");
    add(m, e);
  }
}

SymPoly SymPoly::scalar(const SymExpr& e, VarList vars) {
  SymPoly p(std::move(vars));
  p.add(Monomial::one(p.vars_.size()), e);
  return p;
}

void SymPoly::add(const Monomial& m, const SymExpr& e) {
  auto it = terms_.find(m);
  if (it == terms_.end()) {
    SymExpr c = e;
    scrub(c);
    if (!c.is_zero()) terms_.emplace(m, std::move(c));
    return;
  }
  it->second += e;
  if (it->second.is_zero()) terms_.erase(it);
}

int SymPoly::degree() const {
  int d = 0;
  for (const auto& [m, e] : terms_) d = std::max(d, m.total_degree());
  return d;
}

bool SymPoly::has_quadratic() const {
  for (const auto& [m, e] : terms_) {
    if (!e.quadratic.empty()) return true;
  }
  return false;
}

SymExpr SymPoly::coefficient(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? SymExpr{} : it->second;
}

SymPoly SymPoly::embed(const VarList& vars) const {
  if (vars == vars_) return *this;
  const auto where = positions(vars_, vars);
  SymPoly out(vars);
  for (const auto& [m, e] : terms_) out.add(remap(m, where, vars.size(), vars_), e);
  return out;
}

SymPoly SymPoly::compact() const {
  VarList used;
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    for (const auto& [m, e] : terms_) {
      if (m[i] != 0) {
        used.push_back(vars_[i]);
        break;
      }
    }
  }
  return embed(used);
}

SymPoly SymPoly::differentiate(const std::string& var) const {
  auto it = std::find(vars_.begin(), vars_.end(), var);
  if (it == vars_.end()) throw std::invalid_argument("differentiate: unknown variable '" + var + "'");
  const auto k = static_cast<std::size_t>(it - vars_.begin());
  SymPoly out(vars_);
  for (const auto& [m, e] : terms_) {
    if (m[k] == 0) continue;
    std::vector<int> ex = m.exponents();
    const double f = ex[k];
    --ex[k];
    out.add(Monomial(std::move(ex)), e.scaled(f));
  }
  return out;
}

SymPoly SymPoly::substitute(const std::string& var, double value) const {
  auto it = std::find(vars_.begin(), vars_.end(), var);
  if (it == vars_.end()) throw std::invalid_argument("substitute: unknown variable '" + var + "'");
  const auto k = static_cast<std::size_t>(it - vars_.begin());
  VarList rest = vars_;
  rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(k));
  SymPoly out(rest);
  for (const auto& [m, e] : terms_) {
    std::vector<int> ex = m.exponents();
    const double f = std::pow(value, ex[k]);
    ex.erase(ex.begin() + static_cast<std::ptrdiff_t>(k));
    out.add(Monomial(std::move(ex)), e.scaled(f));
  }
  return out;
}

Polynomial SymPoly::instantiate(const std::vector<double>& values) const {
  Polynomial::TermMap t;
  for (const auto& [m, e] : terms_) {
    const double v = e.evaluate(values);
    if (std::abs(v) >= Polynomial::kScrubTolerance) t[m] = v;
  }
  return Polynomial(vars_, t);
}

SymPoly& SymPoly::operator+=(const SymPoly& o) {
  const VarList u = union_vars(vars_, o.vars_);
  if (u != vars_) *this = embed(u);
  const SymPoly oe = o.embed(u);
  for (const auto& [m, e] : oe.terms_) add(m, e);
  return *this;
}

SymPoly& SymPoly::operator-=(const SymPoly& o) { return *this += o.scaled(-1.0); }

SymPoly operator*(const SymPoly& a, const SymPoly& b) {
  const VarList u = union_vars(a.vars_, b.vars_);
  const SymPoly ae = a.embed(u);
  const SymPoly be = b.embed(u);
  SymPoly out(u);
  for (const auto& [ma, ea] : ae.terms_) {
    for (const auto& [mb, eb] : be.terms_) out.add(ma * mb, SymExpr::product(ea, eb));
  }
  return out;
}

SymPoly SymPoly::scaled(double c) const {
  SymPoly out(vars_);
  for (const auto& [m, e] : terms_) out.add(m, e.scaled(c));
  return out;
}

const PolyUnknown& SosProgram::declare_unknown(const std::string& name, const VarList& vars,
                                               int degree, UnknownKind kind) {
  for (const auto& u : unknowns_) {
    if (u.name == name) throw std::invalid_argument("duplicate unknown '" + name + "'");
  }
  if (degree < 0) throw std::invalid_argument("negative degree for '" + name + "'");
  if (kind == UnknownKind::kSos && degree % 2 != 0) {
    throw std::invalid_argument("sos unknown '" + name + "' needs an even degree");
  }
  if (kind == UnknownKind::kNonnegativeScalar && degree != 0) {
    throw std::invalid_argument("scalar unknown '" + name + "' must have degree 0");
  }
  PolyUnknown u;
  u.name = name;
  u.vars = vars;
  u.degree = degree;
  u.kind = kind;
  u.poly = SymPoly(vars);
  const int owner = static_cast<int>(unknowns_.size());
  auto new_symbol = [&](const SymbolAtom& a) {
    atoms_.push_back(a);
    owner_.push_back(owner);
    u.symbols.push_back(static_cast<int>(atoms_.size()) - 1);
    return u.symbols.back();
  };
  switch (kind) {
    case UnknownKind::kFree: {
      u.basis = monomials_up_to(vars.size(), degree);
      int free_index = 0;
      for (const auto& a : atoms_) free_index += a.free ? 1 : 0;
      for (const auto& m : u.basis) {
        SymbolAtom a;
        a.free = true;
        a.index = free_index++;
        SymExpr e;
        e.linear[new_symbol(a)] = 1.0;
        u.poly.add(m, e);
      }
      break;
    }
    case UnknownKind::kSos:
    case UnknownKind::kNonnegativeScalar: {
      u.basis = monomials_up_to(vars.size(), degree / 2);
      const int n = static_cast<int>(u.basis.size());
      u.block = static_cast<int>(unknown_block_sizes_.size());
      unknown_block_sizes_.push_back(n);
      for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
          SymbolAtom a;
          a.block = u.block;
          a.row = i;
          a.col = j;
          SymExpr e;
          e.linear[new_symbol(a)] = i == j ? 1.0 : 2.0;
          u.poly.add(u.basis[i] * u.basis[j], e);
        }
      }
      break;
    }
  }
  unknowns_.push_back(std::move(u));
  return unknowns_.back();
}

const PolyUnknown& SosProgram::unknown(const std::string& name) const {
  for (const auto& u : unknowns_) {
    if (u.name == name) return u;
  }
  throw std::invalid_argument("unknown '" + name + "' not declared");
}

const std::string& SosProgram::owner_of(int symbol) const {
  return unknowns_.at(static_cast<std::size_t>(owner_.at(static_cast<std::size_t>(symbol)))).name;
}

void SosProgram::add_sos_constraint(SymPoly expression, std::string label) {
  constraints_.emplace_back(std::move(label), std::move(expression));
}

SymExpr SosProgram::scalar_part(const SymPoly& p) {
  SymExpr e;
  for (const auto& [m, c] : p.terms()) {
    if (m.total_degree() != 0) throw std::invalid_argument("expected a scalar expression");
    e += c;
  }
  return e;
}

void SosProgram::add_upper_bound(const SymPoly& scalar, double upper) {
  bounds_.emplace_back(scalar_part(scalar), upper);
}

void SosProgram::bound_coefficients(const std::string& name, double bound) {
  const auto& u = unknown(name);
  if (u.kind != UnknownKind::kFree) throw std::invalid_argument("can only bound free unknowns");
  for (int s : u.symbols) {
    SymExpr e;
    e.linear[s] = 1.0;
    bounds_.emplace_back(e, bound);
    e.linear[s] = -1.0;
    bounds_.emplace_back(e, bound);
  }
}

void SosProgram::minimize(const SymPoly& scalar) {
  objective_ = scalar_part(scalar);
  objective_sign_ = 1.0;
}

void SosProgram::maximize(const SymPoly& scalar) {
  objective_ = scalar_part(scalar);
  objective_sign_ = -1.0;
}

CompiledSos SosProgram::compile() const {
  CompiledSos out;
  out.atoms = atoms_;
  out.objective_sign = objective_sign_;
  SdpStandardForm& sdp = out.sdp;
  sdp.block_sizes = unknown_block_sizes_;
  int num_free = 0;
  for (const auto& a : atoms_) num_free += a.free ? 1 : 0;
  sdp.num_free = num_free;
  sdp.free_cost = Eigen::VectorXd::Zero(num_free);
  std::vector<double> b;

  auto append_linear = [&](int row, const SymExpr& e, double sign) {
    if (!e.quadratic.empty()) {
      const auto& q = e.quadratic.begin()->first;
      throw BilinearityError(owner_of(q.first), owner_of(q.second));
    }
    for (const auto& [s, v] : e.linear) {
      const auto& a = atoms_[static_cast<std::size_t>(s)];
      if (a.free) {
        sdp.free_entries.push_back({row, a.index, sign * v});
      } else {
        const double f = a.row == a.col ? 1.0 : 0.5;
        sdp.constraints[static_cast<std::size_t>(row)].push_back({a.block, a.row, a.col, sign * v * f});
      }
    }
  };

  for (const auto& [label, raw] : constraints_) {
    const SymPoly expr = raw.compact();
    GramEncoding enc;
    enc.label = label;
    enc.vars = expr.vars();
    const int half = (expr.degree() + 1) / 2;
    enc.basis = monomials_up_to(enc.vars.size(), half);
    enc.block = static_cast<int>(sdp.block_sizes.size());
    const int n = static_cast<int>(enc.basis.size());
    sdp.block_sizes.push_back(n);
    std::map<Monomial, std::vector<std::pair<int, int>>, GradedLexLess> pairs;
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) pairs[enc.basis[i] * enc.basis[j]].emplace_back(i, j);
    }
    for (const auto& [m, e] : expr.terms()) {
      if (pairs.find(m) == pairs.end()) pairs[m];  // unreachable by degree count
    }
    for (const auto& [m, ij] : pairs) {
      const int row = static_cast<int>(sdp.constraints.size());
      sdp.constraints.emplace_back();
      const SymExpr e = expr.coefficient(m);
      append_linear(row, e, 1.0);
      for (const auto& [i, j] : ij) sdp.constraints.back().push_back({enc.block, i, j, -1.0});
      b.push_back(-e.constant);
      enc.row_monomials.push_back(m);
      enc.rows.push_back(row);
    }
    out.encodings.push_back(std::move(enc));
  }

  if (!bounds_.empty()) {
    const int blk = static_cast<int>(sdp.block_sizes.size());
    sdp.block_sizes.push_back(-static_cast<int>(bounds_.size()));
    for (std::size_t k = 0; k < bounds_.size(); ++k) {
      const int row = static_cast<int>(sdp.constraints.size());
      sdp.constraints.emplace_back();
      // Rows are scaled to a unit right-hand side so large bounds do not
      // loosen the solver's relative residual.
      const double rhs = bounds_[k].second - bounds_[k].first.constant;
      const double f = 1.0 / std::max(1.0, std::abs(rhs));
      append_linear(row, bounds_[k].first, f);
      sdp.constraints.back().push_back({blk, static_cast<int>(k), static_cast<int>(k), f});
      b.push_back(rhs * f);
    }
  }
  sdp.b = Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));

  if (!objective_.quadratic.empty()) {
    const auto& q = objective_.quadratic.begin()->first;
    throw BilinearityError(owner_of(q.first), owner_of(q.second));
  }
  for (const auto& [s, v] : objective_.linear) {
    const auto& a = atoms_[static_cast<std::size_t>(s)];
    if (a.free) {
      sdp.free_cost(a.index) += objective_sign_ * v;
    } else {
      const double f = a.row == a.col ? 1.0 : 0.5;
      sdp.cost.push_back({a.block, a.row, a.col, objective_sign_ * v * f});
    }
  }
  return out;
}

Polynomial gram_polynomial(const Eigen::MatrixXd& gram, const std::vector<Monomial>& basis,
                           const VarList& vars) {
  Polynomial::TermMap t;
  const auto n = static_cast<Eigen::Index>(basis.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) t[basis[i] * basis[j]] += gram(i, j);
  }
  for (auto it = t.begin(); it != t.end();) {
    it = std::abs(it->second) < Polynomial::kScrubTolerance ? t.erase(it) : std::next(it);
  }
  return Polynomial(vars, t);
}

SosVerdict check_sos_posthoc(const Polynomial& p, const Eigen::MatrixXd& gram,
                             const std::vector<Monomial>& basis, const VarList& vars,
                             double eps_psd, double tol) {
  SosVerdict v;
  const Eigen::MatrixXd g = 0.5 * (gram + gram.transpose());
  if (g.rows() > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
    v.eig_min = es.eigenvalues()(0);
  }
  const Polynomial q = gram_polynomial(g, basis, vars);
  const Polynomial diff = p - q;
  v.residual = diff.max_abs_coefficient() / std::max(1.0, p.max_abs_coefficient());
  v.pass = v.eig_min >= -eps_psd && v.residual <= tol;
  return v;
}

std::vector<Polynomial> sos_decomposition(const Eigen::MatrixXd& gram,
                                          const std::vector<Monomial>& basis,
                                          const VarList& vars) {
  const Eigen::MatrixXd g = 0.5 * (gram + gram.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  std::vector<Polynomial> out;
  for (Eigen::Index k = 0; k < g.rows(); ++k) {
    const double lam = es.eigenvalues()(k);
    if (lam <= 0) continue;
    Polynomial::TermMap t;
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      const double c = std::sqrt(lam) * es.eigenvectors()(i, k);
      if (std::abs(c) >= Polynomial::kScrubTolerance) t[basis[i]] += c;
    }
    if (!t.empty()) out.emplace_back(vars, t);
  }
  return out;
}

SosSolution recover_solution(const SosProgram& program, const CompiledSos& compiled,
                             const SdpSolution& sol, bool strict, double eps_psd, double tol) {
  SosSolution out;
  out.status = sol.status;
  out.message = sol.message;
  if (strict && sol.status != SdpStatus::kOptimal) {
    throw SosError("SDP not solved to optimality: " + to_string(sol.status) + " (" + sol.message + ")",
                   sol.status);
  }
  out.symbol_values.resize(compiled.atoms.size());
  for (std::size_t s = 0; s < compiled.atoms.size(); ++s) {
    const auto& a = compiled.atoms[s];
    out.symbol_values[s] = a.free ? sol.x_free(a.index) : sol.X[static_cast<std::size_t>(a.block)](a.row, a.col);
  }
  for (const auto& u : program.unknowns()) out.values.emplace(u.name, u.poly.instantiate(out.symbol_values));
  out.all_pass = true;
  for (std::size_t c = 0; c < compiled.encodings.size(); ++c) {
    const auto& enc = compiled.encodings[c];
    const Polynomial pe =
        program.constraints()[c].second.instantiate(out.symbol_values).compact().embed(enc.vars);
    const Eigen::MatrixXd& g = sol.X[static_cast<std::size_t>(enc.block)];
    const SosVerdict v = check_sos_posthoc(pe, g, enc.basis, enc.vars, eps_psd, tol);
    out.constraint_polys.push_back(pe);
    out.grams.push_back(g);
    out.verdicts.push_back(v);
    out.all_pass = out.all_pass && v.pass;
    out.worst_eig_min = c == 0 ? v.eig_min : std::min(out.worst_eig_min, v.eig_min);
    out.worst_residual = std::max(out.worst_residual, v.residual);
  }
  out.objective = program.objective().evaluate(out.symbol_values);
  if (strict && !out.all_pass) {
    throw SosError("post-hoc SOS check failed: eig_min " + std::to_string(out.worst_eig_min) +
                       ", residual " + std::to_string(out.worst_residual),
                   sol.status);
  }
  return out;
}

SosSolution solve_sos(const SosProgram& program, const SolverConfig& config) {
  const CompiledSos compiled = program.compile();
  const SdpSolution sol = solve_sdp(compiled.sdp, config);
  return recover_solution(program, compiled, sol, false);
}

}  // namespace inclusioncert
