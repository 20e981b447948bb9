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

#include "inclusioncert/poly.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace inclusioncert {

VarList union_vars(const VarList& a, const VarList& b) {
  VarList out = a;
  for (const auto& name : b) {
    if (std::find(out.begin(), out.end(), name) == out.end()) {
      out.push_back(name);
    }
  }
  return out;
}

Monomial::Monomial(std::vector<int> exponents)
    : exponents_(std::move(exponents)),
      degree_(std::accumulate(exponents_.begin(), exponents_.end(), 0)) {
  for (int e : exponents_) {
    if (e < 0) throw std::invalid_argument("negative monomial exponent");
  }
}

Monomial Monomial::operator*(const Monomial& other) const {
  if (other.size() != size()) {
    throw std::invalid_argument("monomial size mismatch");
  }
  std::vector<int> e(exponents_);
  for (std::size_t i = 0; i < e.size(); ++i) e[i] += other.exponents_[i];
  return Monomial(std::move(e));
}

bool GradedLexLess::operator()(const Monomial& a, const Monomial& b) const {
  if (a.total_degree() != b.total_degree()) {
    return a.total_degree() < b.total_degree();
  }
  // Within a degree, x^2 precedes x*y precedes y^2 (for vars x, y).
  return std::lexicographical_compare(
      b.exponents().begin(), b.exponents().end(), a.exponents().begin(),
      a.exponents().end());
}

std::vector<Monomial> monomials_up_to(std::size_t num_vars, int max_degree) {
  std::vector<Monomial> out;
  if (max_degree < 0) return out;
  std::vector<int> e(num_vars, 0);
  // Enumerate exponent vectors by recursion on the remaining degree.
  auto rec = [&](auto&& self, std::size_t pos, int remaining) -> void {
    if (pos == num_vars) {
      out.emplace_back(e);
      return;
    }
    for (int k = 0; k <= remaining; ++k) {
      e[pos] = k;
      self(self, pos + 1, remaining - k);
    }
    e[pos] = 0;
  };
  rec(rec, 0, max_degree);
  std::sort(out.begin(), out.end(), GradedLexLess{});
  return out;
}

Polynomial::Polynomial(VarList vars, const TermMap& terms)
    : vars_(std::move(vars)) {
  for (const auto& [m, c] : terms) {
    if (m.size() != vars_.size()) {
      throw std::invalid_argument("monomial length does not match varspace");
    }
    add_term(m, c);
  }
  scrub();
}

Polynomial Polynomial::constant(double value, VarList vars) {
  Polynomial p(std::move(vars));
  p.add_term(Monomial::one(p.vars_.size()), value);
  p.scrub();
  return p;
}

Polynomial Polynomial::variable(const std::string& name, VarList vars) {
  if (std::find(vars.begin(), vars.end(), name) == vars.end()) {
    vars.push_back(name);
  }
  Polynomial p(std::move(vars));
  std::vector<int> e(p.vars_.size(), 0);
  e[*p.var_index(name)] = 1;
  p.add_term(Monomial(std::move(e)), 1.0);
  return p;
}

void Polynomial::add_term(const Monomial& m, double c) {
  if (c == 0.0) return;
  auto [it, inserted] = terms_.try_emplace(m, c);
  if (!inserted) it->second += c;
}

void Polynomial::scrub() {
  for (auto it = terms_.begin(); it != terms_.end();) {
    if (!(std::abs(it->second) >= kScrubTolerance)) {
      if (std::isnan(it->second)) {
        throw std::domain_error("NaN polynomial coefficient");
      }
      it = terms_.erase(it);
    } else {
      ++it;
    }
  }
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m.total_degree());
  return d;
}

int Polynomial::degree_in(const std::string& var) const {
  auto idx = var_index(var);
  if (!idx) return 0;
  int d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m[*idx]);
  return d;
}

std::optional<std::size_t> Polynomial::var_index(const std::string& var) const {
  auto it = std::find(vars_.begin(), vars_.end(), var);
  if (it == vars_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - vars_.begin());
}

double Polynomial::coefficient(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

double Polynomial::max_abs_coefficient() const {
  double out = 0.0;
  for (const auto& [m, c] : terms_) out = std::max(out, std::abs(c));
  return out;
}

double Polynomial::evaluate(std::span<const double> point) const {
  if (point.size() != vars_.size()) {
    throw std::invalid_argument("evaluate: point has " +
                                std::to_string(point.size()) +
                                " entries, varspace has " +
                                std::to_string(vars_.size()));
  }
  double sum = 0.0;
  for (const auto& [m, c] : terms_) {
    double v = c;
    for (std::size_t i = 0; i < m.size(); ++i) {
      for (int k = 0; k < m[i]; ++k) v *= point[i];
    }
    sum += v;
  }
  return sum;
}

Polynomial Polynomial::embed(const VarList& vars) const {
  if (vars == vars_) return *this;
  std::vector<int> where(vars_.size(), -1);
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    auto it = std::find(vars.begin(), vars.end(), vars_[i]);
    if (it != vars.end()) where[i] = static_cast<int>(it - vars.begin());
  }
  Polynomial out(vars);
  for (const auto& [m, c] : terms_) {
    std::vector<int> e(vars.size(), 0);
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m[i] == 0) continue;
      if (where[i] < 0) {
        throw std::invalid_argument("embed: variable '" + vars_[i] +
                                    "' missing from target varspace");
      }
      e[where[i]] = m[i];
    }
    out.add_term(Monomial(std::move(e)), c);
  }
  out.scrub();
  return out;
}

Polynomial Polynomial::compact() const {
  VarList used;
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    for (const auto& [m, c] : terms_) {
      if (m[i] > 0) {
        used.push_back(vars_[i]);
        break;
      }
    }
  }
  return embed(used);
}

Polynomial Polynomial::differentiate(const std::string& var) const {
  auto idx = var_index(var);
  if (!idx) {
    throw std::invalid_argument("differentiate: unknown variable '" + var +
                                "'");
  }
  Polynomial out(vars_);
  for (const auto& [m, c] : terms_) {
    if (m[*idx] == 0) continue;
    std::vector<int> e = m.exponents();
    const int k = e[*idx]--;
    out.add_term(Monomial(std::move(e)), c * k);
  }
  out.scrub();
  return out;
}

Polynomial Polynomial::substitute(const std::string& var,
                                  const Polynomial& expr) const {
  auto idx = var_index(var);
  if (!idx) {
    throw std::invalid_argument("substitute: unknown variable '" + var + "'");
  }
  VarList rest;
  for (const auto& v : vars_) {
    if (v != var) rest.push_back(v);
  }
  const VarList target = union_vars(rest, expr.vars());
  const Polynomial e = expr.embed(target);
  std::vector<Polynomial> powers{constant(1.0, target)};
  Polynomial out(target);
  for (const auto& [m, c] : terms_) {
    const int k = m[*idx];
    while (static_cast<int>(powers.size()) <= k) {
      powers.push_back(powers.back() * e);
    }
    std::vector<int> ex(target.size(), 0);
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (i == *idx) continue;
      auto pos = std::find(target.begin(), target.end(), vars_[i]);
      ex[pos - target.begin()] = m[i];
    }
    const Monomial base(std::move(ex));
    for (const auto& [pm, pc] : powers[k].terms_) {
      out.add_term(base * pm, c * pc);
    }
  }
  out.scrub();
  return out;
}

Polynomial Polynomial::pow(int k) const {
  if (k < 0) throw std::invalid_argument("negative polynomial power");
  Polynomial result = constant(1.0, vars_);
  Polynomial base = *this;
  while (k > 0) {
    if (k & 1) result *= base;
    k >>= 1;
    if (k) base *= base;
  }
  return result;
}

Polynomial Polynomial::scale(double c) const {
  Polynomial out(vars_);
  for (const auto& [m, v] : terms_) out.add_term(m, v * c);
  out.scrub();
  return out;
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  if (vars_ != other.vars_) {
    const VarList u = union_vars(vars_, other.vars_);
    *this = embed(u);
    return *this += other.embed(u);
  }
  for (const auto& [m, c] : other.terms_) add_term(m, c);
  scrub();
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) {
  return *this += other.scale(-1.0);
}

Polynomial& Polynomial::operator*=(const Polynomial& other) {
  *this = *this * other;
  return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  if (a.vars_ != b.vars_) {
    const VarList u = union_vars(a.vars_, b.vars_);
    return a.embed(u) * b.embed(u);
  }
  Polynomial out(a.vars_);
  for (const auto& [ma, ca] : a.terms_) {
    for (const auto& [mb, cb] : b.terms_) out.add_term(ma * mb, ca * cb);
  }
  out.scrub();
  return out;
}

bool Polynomial::operator==(const Polynomial& other) const {
  return vars_ == other.vars_ && terms_ == other.terms_;
}

bool Polynomial::same_function(const Polynomial& other, double tol) const {
  const VarList u = union_vars(vars_, other.vars_);
  const Polynomial d = embed(u) - other.embed(u);
  return d.max_abs_coefficient() <= tol;
}

std::string Polynomial::to_string(int precision) const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  os.precision(precision);
  bool first = true;
  // Highest degree first reads more naturally.
  for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
    const auto& [m, c] = *it;
    double mag = c;
    if (first) {
      if (c < 0) os << "-";
    } else {
      os << (c < 0 ? " - " : " + ");
    }
    mag = std::abs(c);
    const bool is_const = m.total_degree() == 0;
    if (is_const || mag != 1.0) {
      os << mag;
      if (!is_const) os << "*";
    }
    bool first_factor = true;
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m[i] == 0) continue;
      if (!first_factor) os << "*";
      os << vars_[i];
      if (m[i] > 1) os << "^" << m[i];
      first_factor = false;
    }
    first = false;
  }
  return os.str();
}

PolyVector::PolyVector(std::vector<Polynomial> entries) {
  for (const auto& p : entries) vars_ = union_vars(vars_, p.vars());
  entries_.reserve(entries.size());
  for (const auto& p : entries) entries_.push_back(p.embed(vars_));
}

std::vector<double> PolyVector::evaluate(std::span<const double> point) const {
  std::vector<double> out;
  out.reserve(entries_.size());
  for (const auto& p : entries_) out.push_back(p.evaluate(point));
  return out;
}

PolyEvaluator::PolyEvaluator(const Polynomial& p)
    : num_vars_(p.vars().size()) {
  for (const auto& [m, c] : p.terms()) {
    for (std::size_t i = 0; i < m.size(); ++i) {
      exps_.push_back(m[i]);
      max_exp_ = std::max(max_exp_, m[i]);
    }
    coefs_.push_back(c);
  }
}

double PolyEvaluator::operator()(std::span<const double> point) const {
  if (point.size() != num_vars_) {
    throw std::invalid_argument("PolyEvaluator: dimension mismatch");
  }
  constexpr int kStackPowers = 256;
  const int stride = max_exp_ + 1;
  double stack[kStackPowers];
  std::vector<double> heap;
  double* pw = stack;
  if (static_cast<int>(num_vars_) * stride > kStackPowers) {
    heap.resize(num_vars_ * stride);
    pw = heap.data();
  }
  for (std::size_t i = 0; i < num_vars_; ++i) {
    double* row = pw + i * stride;
    row[0] = 1.0;
    for (int k = 1; k < stride; ++k) row[k] = row[k - 1] * point[i];
  }
  double sum = 0.0;
  for (std::size_t t = 0; t < coefs_.size(); ++t) {
    double v = coefs_[t];
    const int* e = exps_.data() + t * num_vars_;
    for (std::size_t i = 0; i < num_vars_; ++i) v *= pw[i * stride + e[i]];
    sum += v;
  }
  return sum;
}

namespace {

// Recursive-descent parser over + - * / ^ and parentheses. Division is only
// allowed by constant subexpressions.
class Parser {
 public:
  Parser(std::string_view text, VarList vars)
      : text_(text), vars_(std::move(vars)) {}

  Polynomial run() {
    Polynomial p = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected character");
    return p.embed(union_vars(vars_, p.vars()));
  }

  const VarList& vars() const { return vars_; }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw std::invalid_argument("polynomial parse error at column " +
                                std::to_string(pos_ + 1) + ": " + what +
                                " in \"" + std::string(text_) + "\"");
  }
  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }
  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Polynomial expr() {
    Polynomial acc = term();
    while (true) {
      if (accept('+')) {
        acc += term();
      } else if (accept('-')) {
        acc -= term();
      } else {
        return acc;
      }
    }
  }

  Polynomial term() {
    Polynomial acc = unary();
    while (true) {
      if (accept('*')) {
        acc *= unary();
      } else if (accept('/')) {
        Polynomial d = unary();
        if (d.degree() != 0 || d.is_zero()) fail("division by non-constant");
        acc = acc.scale(1.0 / d.coefficient(Monomial::one(d.vars().size())));
      } else {
        return acc;
      }
    }
  }

  Polynomial unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }

  Polynomial power() {
    Polynomial base = primary();
    if (accept('^')) {
      skip_ws();
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
      }
      if (start == pos_) fail("expected integer exponent");
      base = base.pow(std::stoi(std::string(text_.substr(start, pos_ - start))));
    }
    return base;
  }

  Polynomial primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Polynomial p = expr();
      if (!accept(')')) fail("expected ')'");
      return p;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = text_.data() + pos_;
      char* end = nullptr;
      const std::string copy(text_.substr(pos_));
      const double v = std::strtod(copy.c_str(), &end);
      const std::size_t used = static_cast<std::size_t>(end - copy.c_str());
      (void)begin;
      if (used == 0) fail("bad number");
      pos_ += used;
      return Polynomial::constant(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '_')) {
        ++pos_;
      }
      const std::string name(text_.substr(start, pos_ - start));
      vars_ = union_vars(vars_, {name});
      return Polynomial::variable(name);
    }
    fail(std::string("unexpected '") + c + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  VarList vars_;
};

}  // namespace

Polynomial Polynomial::parse(std::string_view text, const VarList& vars) {
  Parser parser(text, vars);
  return parser.run();
}

nlohmann::json to_json(const Polynomial& p) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& [m, c] : p.terms()) {
    terms.push_back({{"exp", m.exponents()}, {"coef", c}});
  }
  return {{"vars", p.vars()}, {"terms", terms}};
}

Polynomial polynomial_from_json(const nlohmann::json& j) {
  VarList vars = j.at("vars").get<VarList>();
  Polynomial::TermMap terms;
  for (const auto& t : j.at("terms")) {
    Monomial m(t.at("exp").get<std::vector<int>>());
    if (m.size() != vars.size()) {
      throw std::invalid_argument("polynomial JSON: exponent length mismatch");
    }
    terms[m] += t.at("coef").get<double>();
  }
  return Polynomial(std::move(vars), terms);
}

}  // namespace inclusioncert
