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

#ifndef INCLUSIONCERT_SOS_H_
#define INCLUSIONCERT_SOS_H_

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "inclusioncert/poly.h"
#include "inclusioncert/sdp.h"

namespace inclusioncert {

/// constant + sum a_k s_k + sum a_kl s_k s_l over decision symbols s. The
/// quadratic part only exists so that products of two unknowns survive
/// until compile time, where they are rejected.
struct SymExpr {
  double constant = 0.0;
  std::map<int, double> linear;
  std::map<std::pair<int, int>, double> quadratic;

  bool has_symbols() const { return !linear.empty() || !quadratic.empty(); }
  bool is_zero() const { return constant == 0.0 && !has_symbols(); }
  SymExpr& operator+=(const SymExpr& o);
  SymExpr scaled(double c) const;
  /// Throws std::invalid_argument if the result would be cubic.
  static SymExpr product(const SymExpr& a, const SymExpr& b);
  double evaluate(const std::vector<double>& values) const;
};

/// Polynomial whose coefficients are SymExpr. Variables are matched by name
/// like Polynomial.
class SymPoly {
 public:
  using TermMap = std::map<Monomial, SymExpr, GradedLexLess>;

  SymPoly() = default;
  explicit SymPoly(VarList vars) : vars_(std::move(vars)) {}
  SymPoly(const Polynomial& p);  // NOLINT: implicit on purpose
  SymPoly(VarList vars, TermMap terms);

  static SymPoly scalar(const SymExpr& e, VarList vars = {});

  const VarList& vars() const { return vars_; }
  const TermMap& terms() const { return terms_; }
  int degree() const;
  bool has_quadratic() const;
  SymExpr coefficient(const Monomial& m) const;

  SymPoly embed(const VarList& vars) const;
  SymPoly compact() const;
  SymPoly differentiate(const std::string& var) const;
  /// Fixes `var` to `value` and drops it from the variable list.
  SymPoly substitute(const std::string& var, double value) const;
  /// Replaces symbols by values.
  Polynomial instantiate(const std::vector<double>& values) const;

  SymPoly& operator+=(const SymPoly& o);
  SymPoly& operator-=(const SymPoly& o);
  friend SymPoly operator+(SymPoly a, const SymPoly& b) { return a += b; }
  friend SymPoly operator-(SymPoly a, const SymPoly& b) { return a -= b; }
  friend SymPoly operator*(const SymPoly& a, const SymPoly& b);
  friend SymPoly operator*(double c, const SymPoly& p) { return p.scaled(c); }
  SymPoly scaled(double c) const;
  SymPoly operator-() const { return scaled(-1.0); }
  /// Accumulates e into the coefficient of m (m must match vars()).
  void add(const Monomial& m, const SymExpr& e);

 private:
  VarList vars_;
  TermMap terms_;
};

enum class UnknownKind { kFree, kSos, kNonnegativeScalar };

struct PolyUnknown {
  std::string name;
  VarList vars;
  int degree = 0;
  UnknownKind kind = UnknownKind::kFree;
  /// Coefficient monomials (free) or Gram basis (sos).
  std::vector<Monomial> basis;
  int block = -1;  // Gram or scalar block, -1 for free unknowns
  std::vector<int> symbols;
  SymPoly poly;
};

/// Where a decision symbol lives in the SDP.
struct SymbolAtom {
  bool free = false;
  int index = 0;  // free-variable index
  int block = 0;
  int row = 0;
  int col = 0;
};

struct GramEncoding {
  std::string label;
  VarList vars;
  std::vector<Monomial> basis;
  int block = 0;
  std::vector<Monomial> row_monomials;
  std::vector<int> rows;
};

struct CompiledSos {
  SdpStandardForm sdp;
  std::vector<GramEncoding> encodings;  // one per SOS constraint
  std::vector<SymbolAtom> atoms;
  double objective_sign = 1.0;  // +1 minimize, -1 maximize
};

class BilinearityError : public std::invalid_argument {
 public:
  BilinearityError(const std::string& a, const std::string& b)
      : std::invalid_argument("bilinear term between unknowns '" + a + "' and '" + b + "'"),
        first(a),
        second(b) {}
  std::string first;
  std::string second;
};

class SosProgram {
 public:
  /// Throws std::invalid_argument on a duplicate name, negative degree, odd
  /// sos degree, or a nonzero scalar degree.
  const PolyUnknown& declare_unknown(const std::string& name, const VarList& vars, int degree,
                                     UnknownKind kind);
  const PolyUnknown& unknown(const std::string& name) const;
  const SymPoly& poly(const std::string& name) const { return unknown(name).poly; }
  const std::vector<PolyUnknown>& unknowns() const { return unknowns_; }
  std::size_t num_symbols() const { return atoms_.size(); }
  const std::string& owner_of(int symbol) const;

  void add_sos_constraint(SymPoly expression, std::string label);
  const std::vector<std::pair<std::string, SymPoly>>& constraints() const { return constraints_; }
  /// scalar <= upper, where `scalar` has only a constant monomial.
  void add_upper_bound(const SymPoly& scalar, double upper);
  /// |coefficient| <= bound for every coefficient of a free unknown.
  void bound_coefficients(const std::string& name, double bound);
  const SymExpr& objective() const { return objective_; }
  double objective_sign() const { return objective_sign_; }
  void minimize(const SymPoly& scalar);
  void maximize(const SymPoly& scalar);

  /// Gram lowering. Throws BilinearityError on products of unknowns.
  CompiledSos compile() const;

 private:
  static SymExpr scalar_part(const SymPoly& p);

  std::vector<PolyUnknown> unknowns_;
  std::vector<SymbolAtom> atoms_;
  std::vector<int> owner_;
  std::vector<int> unknown_block_sizes_;
  std::vector<std::pair<std::string, SymPoly>> constraints_;
  std::vector<std::pair<SymExpr, double>> bounds_;
  SymExpr objective_;
  double objective_sign_ = 1.0;
};

struct SosVerdict {
  bool pass = false;
  double eig_min = 0.0;
  double residual = 0.0;  // max coefficient mismatch, scaled by max(1, |p|_inf)
};

/// Pass iff eig_min(gram) >= -eps_psd and |p - z'Gz|_inf <= tol (scaled).
SosVerdict check_sos_posthoc(const Polynomial& p, const Eigen::MatrixXd& gram,
                             const std::vector<Monomial>& basis, const VarList& basis_vars,
                             double eps_psd = 1e-7, double tol = 1e-6);

/// z'Gz as a polynomial.
Polynomial gram_polynomial(const Eigen::MatrixXd& gram, const std::vector<Monomial>& basis,
                           const VarList& basis_vars);
/// Squares q_k with sum q_k^2 = z'Gz (negative eigenvalues clipped).
std::vector<Polynomial> sos_decomposition(const Eigen::MatrixXd& gram,
                                          const std::vector<Monomial>& basis,
                                          const VarList& basis_vars);

struct SosSolution {
  SdpStatus status = SdpStatus::kNumericalFailure;
  std::string message;
  std::vector<double> symbol_values;
  std::map<std::string, Polynomial> values;
  std::vector<Polynomial> constraint_polys;
  std::vector<Eigen::MatrixXd> grams;
  std::vector<SosVerdict> verdicts;
  bool all_pass = false;
  double objective = 0.0;
  double worst_eig_min = 0.0;
  double worst_residual = 0.0;
};

class SosError : public std::runtime_error {
 public:
  SosError(const std::string& what, SdpStatus s) : std::runtime_error(what), status(s) {}
  SdpStatus status;
};

/// Instantiates every unknown and runs the post-hoc check on each
/// constraint. With `strict`, a non-optimal status or a failed verdict
/// throws SosError.
SosSolution recover_solution(const SosProgram& program, const CompiledSos& compiled,
                             const SdpSolution& solution, bool strict = true,
                             double eps_psd = 1e-7, double tol = 1e-6);

/// compile + solve + recover (non-strict).
SosSolution solve_sos(const SosProgram& program, const SolverConfig& config = {});

}  // namespace inclusioncert

#endif  // INCLUSIONCERT_SOS_H_
