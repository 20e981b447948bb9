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

#ifndef INCLUSIONCERT_POLY_H_
#define INCLUSIONCERT_POLY_H_

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace inclusioncert {

/// Ordered list of variable names. Polynomials are combined by matching
/// names, never positions.
using VarList = std::vector<std::string>;

/// Returns `a` followed by the names of `b` that are not already in `a`.
VarList union_vars(const VarList& a, const VarList& b);

class Monomial {
 public:
  Monomial() = default;
  explicit Monomial(std::vector<int> exponents);
  static Monomial one(std::size_t num_vars) {
    return Monomial(std::vector<int>(num_vars, 0));
  }

  const std::vector<int>& exponents() const { return exponents_; }
  int operator[](std::size_t i) const { return exponents_[i]; }
  std::size_t size() const { return exponents_.size(); }
  int total_degree() const { return degree_; }

  Monomial operator*(const Monomial& other) const;
  bool operator==(const Monomial& other) const {
    return exponents_ == other.exponents_;
  }

 private:
  std::vector<int> exponents_;
  int degree_ = 0;
};

/// Graded lexicographic order: lower total degree first, ties broken by
/// comparing exponents left to right (larger leading exponent first).
struct GradedLexLess {
  bool operator()(const Monomial& a, const Monomial& b) const;
};

/// All monomials in `num_vars` variables with total degree <= `max_degree`,
/// in graded lex order.
std::vector<Monomial> monomials_up_to(std::size_t num_vars, int max_degree);

/// Sparse multivariate polynomial with double coefficients over an explicit
/// ordered variable list. Coefficients with magnitude below
/// kScrubTolerance are never stored, so canonical forms compare equal.
class Polynomial {
 public:
  using TermMap = std::map<Monomial, double, GradedLexLess>;
  static constexpr double kScrubTolerance = 1e-14;

  Polynomial() = default;
  explicit Polynomial(VarList vars) : vars_(std::move(vars)) {}
  Polynomial(VarList vars, const TermMap& terms);

  static Polynomial constant(double value, VarList vars = {});
  static Polynomial variable(const std::string& name, VarList vars = {});

  /// Parses expressions such as "0.5*x^2 - 0.05*x^3 + 2*(t-1)*x". The
  /// result's variable list is `vars` followed by any new identifiers in
  /// order of appearance. Throws std::invalid_argument on malformed input.
  static Polynomial parse(std::string_view text, const VarList& vars = {});

  const VarList& vars() const { return vars_; }
  const TermMap& terms() const { return terms_; }
  std::size_t num_terms() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }
  int degree() const;
  int degree_in(const std::string& var) const;
  std::optional<std::size_t> var_index(const std::string& var) const;
  double coefficient(const Monomial& m) const;
  double max_abs_coefficient() const;

  /// `point` is ordered like vars(). Throws std::invalid_argument on a
  /// length mismatch.
  double evaluate(std::span<const double> point) const;

  /// Re-expresses the polynomial over `vars`, which must contain every
  /// variable of this polynomial that appears with a nonzero exponent.
  Polynomial embed(const VarList& vars) const;
  /// Drops variables that no term uses.
  Polynomial compact() const;

  Polynomial differentiate(const std::string& var) const;
  Polynomial substitute(const std::string& var, const Polynomial& expr) const;
  Polynomial substitute(const std::string& var, double value) const {
    return substitute(var, constant(value));
  }
  Polynomial pow(int k) const;
  Polynomial scale(double c) const;

  Polynomial operator-() const { return scale(-1.0); }
  Polynomial& operator+=(const Polynomial& other);
  Polynomial& operator-=(const Polynomial& other);
  Polynomial& operator*=(const Polynomial& other);
  friend Polynomial operator+(Polynomial a, const Polynomial& b) {
    return a += b;
  }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) {
    return a -= b;
  }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(double c, const Polynomial& p) {
    return p.scale(c);
  }
  friend Polynomial operator*(const Polynomial& p, double c) {
    return p.scale(c);
  }
  friend Polynomial operator+(Polynomial p, double c) {
    return p += constant(c);
  }
  friend Polynomial operator-(Polynomial p, double c) {
    return p -= constant(c);
  }
  friend Polynomial operator+(double c, Polynomial p) {
    return p += constant(c);
  }
  friend Polynomial operator-(double c, const Polynomial& p) {
    return constant(c) - p;
  }

  /// Exact equality of variable list and canonical terms.
  bool operator==(const Polynomial& other) const;
  /// Equality after embedding both sides into the union of their variables.
  bool same_function(const Polynomial& other, double tol = 0.0) const;

  std::string to_string(int precision = 6) const;

 private:
  void add_term(const Monomial& m, double c);
  void scrub();

  VarList vars_;
  TermMap terms_;
};

/// Entries share one variable list (the union of the inputs' lists).
class PolyVector {
 public:
  PolyVector() = default;
  explicit PolyVector(std::vector<Polynomial> entries);

  std::size_t size() const { return entries_.size(); }
  const Polynomial& operator[](std::size_t i) const { return entries_[i]; }
  const VarList& vars() const { return vars_; }
  const std::vector<Polynomial>& entries() const { return entries_; }
  std::vector<double> evaluate(std::span<const double> point) const;

 private:
  VarList vars_;
  std::vector<Polynomial> entries_;
};

/// Flattened polynomial for repeated evaluation in inner loops.
class PolyEvaluator {
 public:
  PolyEvaluator() = default;
  explicit PolyEvaluator(const Polynomial& p);
  double operator()(std::span<const double> point) const;
  std::size_t num_vars() const { return num_vars_; }

 private:
  std::size_t num_vars_ = 0;
  int max_exp_ = 0;
  std::vector<int> exps_;
  std::vector<double> coefs_;
};

/// {"vars": [...], "terms": [{"exp": [...], "coef": c}, ...]}
nlohmann::json to_json(const Polynomial& p);
Polynomial polynomial_from_json(const nlohmann::json& j);

}  // namespace inclusioncert

#endif  // INCLUSIONCERT_POLY_H_
