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

#include "inclusioncert/spline.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace inclusioncert {

KnotVector::KnotVector(std::vector<double> knots) : knots_(std::move(knots)) {
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (!(knots_[i] >= knots_[i - 1])) {
      throw std::invalid_argument("knot vector must be non-decreasing");
    }
  }
}

KnotVector KnotVector::clamped_uniform(double a, double b, int num_basis,
                                       int degree) {
  if (num_basis < degree + 1 || !(b > a)) {
    throw std::invalid_argument("clamped_uniform: need num_basis > degree, b > a");
  }
  std::vector<double> k;
  for (int i = 0; i <= degree; ++i) k.push_back(a);
  const int interior = num_basis - degree - 1;
  for (int i = 1; i <= interior; ++i) {
    k.push_back(a + (b - a) * i / (interior + 1));
  }
  for (int i = 0; i <= degree; ++i) k.push_back(b);
  return KnotVector(std::move(k));
}

KnotVector KnotVector::not_a_knot(std::span<const double> times) {
  const std::size_t n = times.size();
  if (n < 4) throw std::invalid_argument("not-a-knot cubic needs >= 4 samples");
  std::vector<double> k(4, times.front());
  for (std::size_t i = 2; i + 2 < n; ++i) k.push_back(times[i]);
  for (int i = 0; i < 4; ++i) k.push_back(times.back());
  return KnotVector(std::move(k));
}

int KnotVector::find_span(double t, int degree) const {
  const int n = num_basis(degree);
  if (n <= 0) throw std::invalid_argument("find_span: too few knots");
  int lo = degree;
  int hi = n - 1;
  // Skip empty spans at the ends.
  while (hi > lo && knots_[hi] == knots_[hi + 1]) --hi;
  while (lo < hi && knots_[lo] == knots_[lo + 1]) ++lo;
  if (t >= knots_[hi]) return hi;
  if (t < knots_[lo + 1]) return lo;
  auto it = std::upper_bound(knots_.begin() + lo, knots_.begin() + hi + 1, t);
  return static_cast<int>(it - knots_.begin()) - 1;
}

namespace {

void check_index(const KnotVector& kv, int i, int p) {
  if (p < 0 || i < 0 || i + p + 1 >= static_cast<int>(kv.size())) {
    throw std::out_of_range("basis index " + std::to_string(i) +
                            " out of range for degree " + std::to_string(p) +
                            " and " + std::to_string(kv.size()) + " knots");
  }
}

double cox_de_boor(const KnotVector& k, int i, int p, double t) {
  if (p == 0) {
    if (k[i] <= t && t < k[i + 1]) return 1.0;
    // The right end of the knot range belongs to the last non-empty span.
    if (t == k.back() && k[i] < k[i + 1] && k[i + 1] == k.back()) return 1.0;
    return 0.0;
  }
  double v = 0.0;
  const double left_gap = k[i + p] - k[i];
  const double right_gap = k[i + p + 1] - k[i + 1];
  if (left_gap > 0.0) v += (t - k[i]) / left_gap * cox_de_boor(k, i, p - 1, t);
  if (right_gap > 0.0) {
    v += (k[i + p + 1] - t) / right_gap * cox_de_boor(k, i + 1, p - 1, t);
  }
  return v;
}

Polynomial cox_de_boor_poly(const KnotVector& k, int i, int p, int span,
                            const std::string& var) {
  const VarList vars{var};
  if (p == 0) {
    return Polynomial::constant(i == span && k[i] < k[i + 1] ? 1.0 : 0.0, vars);
  }
  const Polynomial t = Polynomial::variable(var, vars);
  Polynomial v(vars);
  const double left_gap = k[i + p] - k[i];
  const double right_gap = k[i + p + 1] - k[i + 1];
  if (left_gap > 0.0) {
    v += ((t - k[i]) * (1.0 / left_gap)) * cox_de_boor_poly(k, i, p - 1, span, var);
  }
  if (right_gap > 0.0) {
    v += ((k[i + p + 1] - t) * (1.0 / right_gap)) *
         cox_de_boor_poly(k, i + 1, p - 1, span, var);
  }
  return v;
}

}  // namespace

double basis_eval(const KnotVector& kv, int i, int p, double t) {
  check_index(kv, i, p);
  return cox_de_boor(kv, i, p, t);
}

double basis_derivative(const KnotVector& kv, int i, int p, double t) {
  check_index(kv, i, p);
  if (p == 0) return 0.0;
  double v = 0.0;
  const double left_gap = kv[i + p] - kv[i];
  const double right_gap = kv[i + p + 1] - kv[i + 1];
  if (left_gap > 0.0) v += cox_de_boor(kv, i, p - 1, t) / left_gap;
  if (right_gap > 0.0) v -= cox_de_boor(kv, i + 1, p - 1, t) / right_gap;
  return p * v;
}

Polynomial basis_polynomial(const KnotVector& kv, int i, int p, int span,
                            const std::string& var) {
  check_index(kv, i, p);
  if (span < 0 || span + 1 >= static_cast<int>(kv.size())) {
    throw std::out_of_range("span index out of range");
  }
  return cox_de_boor_poly(kv, i, p, span, var);
}

bool TrajectoryData::inputs_all_zero() const {
  return inputs.size() == 0 || inputs.cwiseAbs().maxCoeff() == 0.0;
}

void TrajectoryData::validate() const {
  const auto n = static_cast<Eigen::Index>(times.size());
  if (states.rows() != n) throw DataError("states row count != sample count");
  if (inputs.cols() > 0 && inputs.rows() != n) {
    throw DataError("inputs row count != sample count");
  }
  if (!states.allFinite() || (inputs.size() > 0 && !inputs.allFinite())) {
    throw DataError("non-finite entry in trajectory data");
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i])) throw DataError("non-finite sample time");
    if (i > 0 && !(times[i] > times[i - 1])) {
      throw DataError("sample times must be strictly increasing (sample " +
                      std::to_string(i + 1) + ")");
    }
  }
}

TrajectoryData dedup_samples(const TrajectoryData& data) {
  TrajectoryData out;
  out.state_names = data.state_names;
  out.input_names = data.input_names;
  const auto n = data.states.cols();
  const auto m = data.inputs.cols();
  std::vector<Eigen::VectorXd> xs, us;
  for (std::size_t i = 0; i < data.times.size();) {
    if (i > 0 && data.times[i] < data.times[i - 1]) {
      throw DataError("sample times decrease at sample " + std::to_string(i + 1));
    }
    std::size_t j = i;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(m);
    while (j < data.times.size() && data.times[j] == data.times[i]) {
      x += data.states.row(static_cast<Eigen::Index>(j)).transpose();
      if (m > 0) u += data.inputs.row(static_cast<Eigen::Index>(j)).transpose();
      ++j;
    }
    const double count = static_cast<double>(j - i);
    out.times.push_back(data.times[i]);
    xs.push_back(x / count);
    us.push_back(u / count);
    i = j;
  }
  out.states.resize(static_cast<Eigen::Index>(xs.size()), n);
  out.inputs.resize(static_cast<Eigen::Index>(xs.size()), m);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out.states.row(static_cast<Eigen::Index>(i)) = xs[i].transpose();
    if (m > 0) out.inputs.row(static_cast<Eigen::Index>(i)) = us[i].transpose();
  }
  return out;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

TrajectoryData read_trajectory_csv(std::istream& in, int num_inputs) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    header = split_csv(line);
    break;
  }
  if (header.empty() || header.front() != "t") {
    throw DataError("line " + std::to_string(line_no) +
                    ": header must start with column 't'");
  }
  const std::size_t cols = header.size() - 1;
  std::size_t m = 0;
  if (num_inputs >= 0) {
    m = static_cast<std::size_t>(num_inputs);
  } else {
    while (m < cols && !header[header.size() - 1 - m].empty() &&
           header[header.size() - 1 - m][0] == 'u') {
      ++m;
    }
  }
  if (m >= cols + 1 || cols - m == 0) {
    throw DataError("line " + std::to_string(line_no) + ": no state columns");
  }
  const std::size_t n = cols - m;
  TrajectoryData data;
  data.state_names.assign(header.begin() + 1, header.begin() + 1 + n);
  data.input_names.assign(header.begin() + 1 + n, header.end());
  std::vector<std::vector<double>> rows;
  std::vector<double> times;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " columns, got " +
                      std::to_string(cells.size()));
    }
    std::vector<double> vals;
    for (const auto& c : cells) {
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (c.empty() || end != c.c_str() + c.size() || !std::isfinite(v)) {
        throw DataError("line " + std::to_string(line_no) + ": bad number '" +
                        c + "'");
      }
      vals.push_back(v);
    }
    if (!times.empty() && vals[0] < times.back()) {
      throw DataError("line " + std::to_string(line_no) +
                      ": time is not monotone (" + cells[0] + " after " +
                      std::to_string(times.back()) + ")");
    }
    times.push_back(vals[0]);
    rows.push_back(std::move(vals));
  }
  data.times = times;
  data.states.resize(static_cast<Eigen::Index>(rows.size()),
                     static_cast<Eigen::Index>(n));
  data.inputs.resize(static_cast<Eigen::Index>(rows.size()),
                     static_cast<Eigen::Index>(m));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      data.states(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          rows[r][1 + c];
    }
    for (std::size_t c = 0; c < m; ++c) {
      data.inputs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          rows[r][1 + n + c];
    }
  }
  return data;
}

TrajectoryData read_trajectory_csv_file(const std::string& path,
                                        int num_inputs) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trajectory file '" + path + "'");
  return read_trajectory_csv(in, num_inputs);
}

void write_trajectory_csv(std::ostream& out, const TrajectoryData& data) {
  out << "t";
  for (std::size_t l = 0; l < data.num_states(); ++l) {
    out << ","
        << (l < data.state_names.size() ? data.state_names[l]
                                        : "x" + std::to_string(l + 1));
  }
  for (std::size_t j = 0; j < data.num_inputs(); ++j) {
    out << ","
        << (j < data.input_names.size() ? data.input_names[j]
                                        : "u" + std::to_string(j + 1));
  }
  out << "\n";
  char buf[64];
  for (std::size_t i = 0; i < data.num_samples(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", data.times[i]);
    out << buf;
    for (Eigen::Index l = 0; l < data.states.cols(); ++l) {
      std::snprintf(buf, sizeof buf, ",%.17g",
                    data.states(static_cast<Eigen::Index>(i), l));
      out << buf;
    }
    for (Eigen::Index j = 0; j < data.inputs.cols(); ++j) {
      std::snprintf(buf, sizeof buf, ",%.17g",
                    data.inputs(static_cast<Eigen::Index>(i), j));
      out << buf;
    }
    out << "\n";
  }
}

double SplineModel::value(std::size_t state, double t) const {
  const int nb = knots.num_basis(degree);
  if (t >= knots.front() && t <= knots.back()) {
    double v = 0.0;
    for (int i = 0; i < nb; ++i) {
      v += coefs(i, static_cast<Eigen::Index>(state)) * basis_eval(knots, i, degree, t);
    }
    return v;
  }
  const int span = knots.find_span(t, degree);
  Polynomial p({"t"});
  for (int i = span - degree; i <= span; ++i) {
    p += coefs(i, static_cast<Eigen::Index>(state)) *
         basis_polynomial(knots, i, degree, span);
  }
  const double pt[] = {t};
  return p.evaluate(pt);
}

double SplineModel::derivative(std::size_t state, double t) const {
  const int nb = knots.num_basis(degree);
  if (t >= knots.front() && t <= knots.back()) {
    double v = 0.0;
    for (int i = 0; i < nb; ++i) {
      v += coefs(i, static_cast<Eigen::Index>(state)) *
           basis_derivative(knots, i, degree, t);
    }
    return v;
  }
  const double pt[] = {t};
  return derivative_polynomial(state, knots.find_span(t, degree)).evaluate(pt);
}

Polynomial SplineModel::derivative_polynomial(std::size_t state, int span) const {
  Polynomial p({"t"});
  for (int i = std::max(0, span - degree); i <= span; ++i) {
    p += coefs(i, static_cast<Eigen::Index>(state)) *
         basis_polynomial(knots, i, degree, span);
  }
  return p.differentiate("t");
}

SplineModel fit_trajectory_spline(const TrajectoryData& raw) {
  const TrajectoryData data = dedup_samples(raw);
  data.validate();
  const std::size_t n_samples = data.num_samples();
  if (n_samples < 4) {
    throw DataError("cubic fitting needs at least 4 distinct samples, got " +
                    std::to_string(n_samples));
  }
  SplineModel model;
  model.degree = 3;
  model.knots = KnotVector::not_a_knot(data.times);
  const int nb = model.knots.num_basis(3);
  Eigen::MatrixXd colloc(static_cast<Eigen::Index>(n_samples), nb);
  for (std::size_t k = 0; k < n_samples; ++k) {
    for (int i = 0; i < nb; ++i) {
      colloc(static_cast<Eigen::Index>(k), i) =
          basis_eval(model.knots, i, 3, data.times[k]);
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(colloc);
  if (!lu.isInvertible()) throw DataError("degenerate sample times");
  model.coefs = lu.solve(data.states);
  const Eigen::MatrixXd resid = colloc * model.coefs - data.states;
  double worst = 0.0;
  for (Eigen::Index l = 0; l < data.states.cols(); ++l) {
    const double scale = std::max(1.0, data.states.col(l).cwiseAbs().maxCoeff());
    worst = std::max(worst, resid.col(l).cwiseAbs().maxCoeff() / scale);
  }
  model.interpolation_residual = worst;
  model.reconstruction_residual = worst;
  if (worst > 1e-8) {
    model.warnings.push_back("interpolation residual " + std::to_string(worst) +
                             " exceeds 1e-8");
  }
  model.t_first = data.times.front();
  model.t_last = data.times.back();
  model.x_last = data.states.row(data.states.rows() - 1).transpose();
  model.num_inputs = data.num_inputs();
  model.affine_knots = model.knots;
  model.drift_products = model.coefs;
  model.input_products.assign(data.num_states(),
                              Eigen::MatrixXd::Zero(nb, static_cast<Eigen::Index>(model.num_inputs)));
  return model;
}

SplineModel fit_control_affine(const TrajectoryData& raw, SplineModel model) {
  const TrajectoryData data = dedup_samples(raw);
  data.validate();
  const std::size_t n_samples = data.num_samples();
  const std::size_t m = data.num_inputs();
  const std::size_t n = data.num_states();
  model.num_inputs = m;
  if (m == 0 || data.inputs_all_zero()) {
    // Zero regressors: the drift is the interpolant and the input map is 0.
    model.has_inputs = false;
    model.affine_knots = model.knots;
    model.drift_products = model.coefs;
    model.input_products.assign(
        n, Eigen::MatrixXd::Zero(model.coefs.rows(), static_cast<Eigen::Index>(m)));
    model.reconstruction_residual = model.interpolation_residual;
    return model;
  }
  // Coarse space: (K-1)(m+1) identifiable parameters per state, about half
  // the sample count.
  const int k_minus_1 = std::max<int>(
      3, static_cast<int>(n_samples / (2 * (m + 1))));
  const int num_basis = k_minus_1 + 1;
  model.has_inputs = true;
  model.affine_knots = KnotVector::clamped_uniform(
      data.times.front(), data.times.back(), num_basis, 3);
  const auto rows = static_cast<Eigen::Index>(n_samples);
  const Eigen::Index cols = static_cast<Eigen::Index>(num_basis * (m + 1));
  Eigen::MatrixXd design(rows, cols);
  for (std::size_t k = 0; k < n_samples; ++k) {
    for (int i = 0; i < num_basis; ++i) {
      const double dq = basis_derivative(model.affine_knots, i, 3, data.times[k]);
      design(static_cast<Eigen::Index>(k), i) = dq;
      for (std::size_t j = 0; j < m; ++j) {
        design(static_cast<Eigen::Index>(k),
               static_cast<Eigen::Index>(num_basis * (j + 1) + i)) =
            dq * data.inputs(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j));
      }
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    const auto col = data.inputs.col(static_cast<Eigen::Index>(j));
    const double spread = col.maxCoeff() - col.minCoeff();
    if (spread <= 1e-12 * std::max(1.0, col.cwiseAbs().maxCoeff())) {
      model.warnings.push_back("input channel " + std::to_string(j + 1) +
                               " is constant: input map is unidentifiable");
    }
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
  cod.setThreshold(1e-10);
  cod.compute(design);
  const Eigen::Index expected_rank = static_cast<Eigen::Index>(k_minus_1 * (m + 1));
  if (cod.rank() < expected_rank) {
    model.warnings.push_back("rank-deficient control-affine regression (rank " +
                             std::to_string(cod.rank()) + " of " +
                             std::to_string(expected_rank) +
                             "); using the minimum-norm solution");
  }
  if (expected_rank > rows) {
    model.warnings.push_back("more regression parameters than samples");
  }
  model.drift_products.resize(num_basis, static_cast<Eigen::Index>(n));
  model.input_products.assign(n, Eigen::MatrixXd(num_basis, static_cast<Eigen::Index>(m)));
  double worst = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    Eigen::VectorXd rhs(rows);
    for (std::size_t k = 0; k < n_samples; ++k) {
      rhs(static_cast<Eigen::Index>(k)) = model.derivative(l, data.times[k]);
    }
    const Eigen::VectorXd beta = cod.solve(rhs);
    model.drift_products.col(static_cast<Eigen::Index>(l)) = beta.head(num_basis);
    for (std::size_t j = 0; j < m; ++j) {
      model.input_products[l].col(static_cast<Eigen::Index>(j)) =
          beta.segment(static_cast<Eigen::Index>(num_basis * (j + 1)), num_basis);
    }
    const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
    worst = std::max(worst, (design * beta - rhs).cwiseAbs().maxCoeff() / scale);
  }
  model.reconstruction_residual = worst;
  return model;
}

bool ControlAffineModel::has_input_map() const {
  for (const auto& row : input_map) {
    for (const auto& g : row) {
      if (!g.is_zero()) return true;
    }
  }
  return false;
}

Eigen::VectorXd ControlAffineModel::drift_at(double t) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(drift.size()));
  const double pt[] = {t};
  for (std::size_t l = 0; l < drift.size(); ++l) {
    out(static_cast<Eigen::Index>(l)) = drift[l].evaluate(pt);
  }
  return out;
}

Eigen::MatrixXd ControlAffineModel::input_map_at(double t) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(num_states()),
                      static_cast<Eigen::Index>(num_inputs()));
  const double pt[] = {t};
  for (std::size_t l = 0; l < num_states(); ++l) {
    for (std::size_t j = 0; j < num_inputs(); ++j) {
      out(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(j)) =
          input_map[l][j].evaluate(pt);
    }
  }
  return out;
}

ControlAffineModel extrapolation_model(const SplineModel& model, double t_start,
                                       double t_end) {
  if (!(t_end > t_start)) {
    throw std::invalid_argument("extrapolation horizon needs T > t_N");
  }
  ControlAffineModel out;
  out.t_start = t_start;
  out.t_end = t_end;
  const std::size_t n = model.num_states();
  const std::size_t m = model.num_inputs;
  const KnotVector& kv = model.affine_knots;
  const int span = kv.find_span(model.t_last, 3);
  std::vector<Polynomial> dq;
  for (int i = span - 3; i <= span; ++i) {
    dq.push_back(basis_polynomial(kv, i, 3, span).differentiate("t"));
  }
  for (std::size_t l = 0; l < n; ++l) {
    Polynomial f({"t"});
    for (int i = span - 3; i <= span; ++i) {
      f += model.drift_products(i, static_cast<Eigen::Index>(l)) * dq[i - (span - 3)];
    }
    out.drift.push_back(f);
    std::vector<Polynomial> row;
    for (std::size_t j = 0; j < m; ++j) {
      Polynomial g({"t"});
      if (model.has_inputs) {
        for (int i = span - 3; i <= span; ++i) {
          g += model.input_products[l](i, static_cast<Eigen::Index>(j)) *
               dq[i - (span - 3)];
        }
      }
      row.push_back(g);
    }
    out.input_map.push_back(std::move(row));
  }
  return out;
}

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[c] = m(r, c);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

nlohmann::json to_json(const SplineModel& model) {
  nlohmann::json j;
  j["degree"] = model.degree;
  j["knots"] = model.knots.knots();
  j["coefs"] = matrix_json(model.coefs);
  j["has_inputs"] = model.has_inputs;
  j["affine_knots"] = model.affine_knots.knots();
  j["drift_products"] = matrix_json(model.drift_products);
  nlohmann::json ip = nlohmann::json::array();
  for (const auto& b : model.input_products) ip.push_back(matrix_json(b));
  j["input_products"] = ip;
  j["t_first"] = model.t_first;
  j["t_last"] = model.t_last;
  j["interpolation_residual"] = model.interpolation_residual;
  j["reconstruction_residual"] = model.reconstruction_residual;
  j["warnings"] = model.warnings;
  return j;
}

nlohmann::json to_json(const ControlAffineModel& model) {
  nlohmann::json j;
  j["t_start"] = model.t_start;
  j["t_end"] = model.t_end;
  nlohmann::json f = nlohmann::json::array();
  for (const auto& p : model.drift) f.push_back(to_json(p));
  j["F"] = f;
  nlohmann::json g = nlohmann::json::array();
  for (const auto& row : model.input_map) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& p : row) r.push_back(to_json(p));
    g.push_back(r);
  }
  j["G"] = g;
  return j;
}

ControlAffineModel control_affine_model_from_json(const nlohmann::json& j) {
  ControlAffineModel m;
  m.t_start = j.at("t_start").get<double>();
  m.t_end = j.at("t_end").get<double>();
  for (const auto& p : j.at("F")) m.drift.push_back(polynomial_from_json(p));
  for (const auto& row : j.at("G")) {
    std::vector<Polynomial> r;
    for (const auto& p : row) r.push_back(polynomial_from_json(p));
    m.input_map.push_back(std::move(r));
  }
  return m;
}

}  // namespace inclusioncert
