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

#include "inclusioncert/sdpa.h"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>
#include <tuple>

namespace inclusioncert {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw SdpaParseError("line " + std::to_string(line) + ": " + what);
}

bool is_comment(const std::string& line) {
  const auto p = line.find_first_not_of(" \t\r");
  return p != std::string::npos && (line[p] == '"' || line[p] == '*');
}

std::vector<std::string> tokens(std::string line) {
  for (char& c : line) {
    if (c == ',' || c == '{' || c == '}' || c == '(' || c == ')' || c == '\t' || c == '\r') c = ' ';
  }
  std::istringstream is(line);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

double number(const std::string& tok, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (tok.empty() || end != tok.c_str() + tok.size()) fail(line, "expected a number, got '" + tok + "'");
  return v;
}

long integer(const std::string& tok, std::size_t line) {
  char* end = nullptr;
  const long v = std::strtol(tok.c_str(), &end, 10);
  if (tok.empty() || end != tok.c_str() + tok.size()) fail(line, "expected an integer, got '" + tok + "'");
  return v;
}

}  // namespace

SdpStandardForm canonicalize(const SdpStandardForm& p) {
  SdpStandardForm out;
  out.block_sizes = p.block_sizes;
  out.b = p.b;
  out.num_free = p.num_free;
  out.free_cost = p.free_cost;
  auto canon = [](const std::vector<SdpEntry>& es) {
    std::map<std::tuple<int, int, int>, double> acc;
    for (const auto& e : es) acc[{e.block, e.row, e.col}] += e.value;
    std::vector<SdpEntry> r;
    for (const auto& [k, v] : acc) {
      if (v != 0.0) r.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), v});
    }
    return r;
  };
  out.cost = canon(p.cost);
  for (const auto& row : p.constraints) out.constraints.push_back(canon(row));
  std::map<std::pair<int, int>, double> acc;
  for (const auto& f : p.free_entries) acc[{f.constraint, f.variable}] += f.value;
  for (const auto& [k, v] : acc) {
    if (v != 0.0) out.free_entries.push_back({k.first, k.second, v});
  }
  return out;
}

bool identical(const SdpStandardForm& a, const SdpStandardForm& b) {
  auto same = [](const std::vector<SdpEntry>& x, const std::vector<SdpEntry>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i].block != y[i].block || x[i].row != y[i].row || x[i].col != y[i].col ||
          x[i].value != y[i].value) {
        return false;
      }
    }
    return true;
  };
  if (a.block_sizes != b.block_sizes || a.num_free != b.num_free) return false;
  if (a.b.size() != b.b.size() || a.b != b.b) return false;
  if (a.free_cost.size() != b.free_cost.size() || a.free_cost != b.free_cost) return false;
  if (!same(a.cost, b.cost) || a.constraints.size() != b.constraints.size()) return false;
  for (std::size_t i = 0; i < a.constraints.size(); ++i) {
    if (!same(a.constraints[i], b.constraints[i])) return false;
  }
  if (a.free_entries.size() != b.free_entries.size()) return false;
  for (std::size_t i = 0; i < a.free_entries.size(); ++i) {
    const auto& x = a.free_entries[i];
    const auto& y = b.free_entries[i];
    if (x.constraint != y.constraint || x.variable != y.variable || x.value != y.value) return false;
  }
  return true;
}

std::string export_sdpa(const SdpStandardForm& raw) {
  raw.validate();
  const SdpStandardForm p = canonicalize(raw);
  const int nb = static_cast<int>(p.block_sizes.size());
  const bool split = p.num_free > 0;
  std::ostringstream os;
  os << "\"inclusioncert SDP: min C.X s.t. A_i.X = b_i, exported as the SDPA dual\n";
  if (split) os << "* free-pairs " << nb + 1 << " " << p.num_free << "\n";
  os << p.num_constraints() << "\n";
  os << nb + (split ? 1 : 0) << "\n";
  for (int k = 0; k < nb; ++k) os << (k ? " " : "") << p.block_sizes[k];
  if (split) os << (nb ? " " : "") << -2 * p.num_free;
  os << "\n";
  for (Eigen::Index i = 0; i < p.b.size(); ++i) os << (i ? " " : "") << fmt17(p.b(i));
  os << "\n";
  auto entry = [&](std::size_t mat, int blk, int r, int c, double v) {
    os << mat << " " << blk + 1 << " " << r + 1 << " " << c + 1 << " " << fmt17(v) << "\n";
  };
  for (const auto& e : p.cost) entry(0, e.block, e.row, e.col, -e.value);
  for (int k = 0; k < p.num_free; ++k) {
    if (p.free_cost(k) != 0.0) {
      entry(0, nb, 2 * k, 2 * k, -p.free_cost(k));
      entry(0, nb, 2 * k + 1, 2 * k + 1, p.free_cost(k));
    }
  }
  std::vector<std::vector<FreeEntry>> by_row(p.num_constraints());
  for (const auto& f : p.free_entries) by_row[f.constraint].push_back(f);
  for (std::size_t i = 0; i < p.num_constraints(); ++i) {
    for (const auto& e : p.constraints[i]) entry(i + 1, e.block, e.row, e.col, e.value);
    for (const auto& f : by_row[i]) {
      entry(i + 1, nb, 2 * f.variable, 2 * f.variable, f.value);
      entry(i + 1, nb, 2 * f.variable + 1, 2 * f.variable + 1, -f.value);
    }
  }
  return os.str();
}

SdpStandardForm parse_sdpa(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  int free_block = -1;
  int num_free = 0;
  // Header: comment lines, then m, nblocks, sizes, b.
  std::vector<std::pair<std::size_t, std::string>> body;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_comment(line)) {
      const auto t = tokens(line);
      if (t.size() == 4 && t[0] == "*" && t[1] == "free-pairs") {
        free_block = static_cast<int>(integer(t[2], line_no)) - 1;
        num_free = static_cast<int>(integer(t[3], line_no));
      }
      continue;
    }
    if (tokens(line).empty()) continue;
    body.emplace_back(line_no, line);
  }
  std::size_t pos = 0;
  auto next_line = [&](const char* what) -> const std::pair<std::size_t, std::string>& {
    if (pos >= body.size()) fail(line_no, std::string("unexpected end of file, expected ") + what);
    return body[pos++];
  };
  const auto& mline = next_line("m");
  const long m = integer(tokens(mline.second).front(), mline.first);
  const auto& nline = next_line("number of blocks");
  const long nblocks = integer(tokens(nline.second).front(), nline.first);
  if (m < 0 || nblocks <= 0) fail(nline.first, "invalid m or block count");
  std::vector<int> sizes;
  while (static_cast<long>(sizes.size()) < nblocks) {
    const auto& l = next_line("block sizes");
    for (const auto& t : tokens(l.second)) {
      if (static_cast<long>(sizes.size()) == nblocks) fail(l.first, "too many block sizes");
      sizes.push_back(static_cast<int>(integer(t, l.first)));
      if (sizes.back() == 0) fail(l.first, "block size 0");
    }
  }
  std::vector<double> bvals;
  while (static_cast<long>(bvals.size()) < m) {
    const auto& l = next_line("right-hand side");
    for (const auto& t : tokens(l.second)) {
      if (static_cast<long>(bvals.size()) == m) fail(l.first, "too many b entries");
      bvals.push_back(number(t, l.first));
    }
  }
  if (free_block >= 0 &&
      (free_block >= nblocks || sizes[free_block] != -2 * num_free || num_free <= 0)) {
    fail(1, "free-pairs comment does not match the block structure");
  }
  SdpStandardForm p;
  auto remap = [&](int blk) { return (free_block >= 0 && blk > free_block) ? blk - 1 : blk; };
  for (int k = 0; k < nblocks; ++k) {
    if (k != free_block) p.block_sizes.push_back(sizes[k]);
  }
  p.b = Eigen::Map<const Eigen::VectorXd>(bvals.data(), static_cast<Eigen::Index>(bvals.size()));
  p.constraints.resize(static_cast<std::size_t>(m));
  p.num_free = free_block >= 0 ? num_free : 0;
  p.free_cost = Eigen::VectorXd::Zero(p.num_free);
  std::map<std::pair<long, int>, double> minus;  // (matno, var) -> x- coefficient
  std::map<std::pair<long, int>, double> plus;
  for (; pos < body.size(); ++pos) {
    const auto& [ln, text_line] = body[pos];
    const auto t = tokens(text_line);
    if (t.size() != 5) fail(ln, "expected 'matno blkno i j value'");
    const long mat = integer(t[0], ln);
    const long blk = integer(t[1], ln) - 1;
    long r = integer(t[2], ln) - 1;
    long c = integer(t[3], ln) - 1;
    const double v = number(t[4], ln);
    if (mat < 0 || mat > m) fail(ln, "matrix number out of range");
    if (blk < 0 || blk >= nblocks) fail(ln, "block number out of range");
    const int dim = std::abs(sizes[blk]);
    if (r < 0 || c < 0 || r >= dim || c >= dim) fail(ln, "index outside block");
    if (r > c) std::swap(r, c);
    if (sizes[blk] < 0 && r != c) fail(ln, "off-diagonal entry in a diagonal block");
    if (blk == free_block) {
      auto& dst = (r % 2 == 0) ? plus : minus;
      dst[{mat, static_cast<int>(r / 2)}] += v;
      continue;
    }
    SdpEntry e{remap(static_cast<int>(blk)), static_cast<int>(r), static_cast<int>(c), v};
    if (mat == 0) {
      e.value = -v;
      p.cost.push_back(e);
    } else {
      p.constraints[mat - 1].push_back(e);
    }
  }
  for (const auto& [key, v] : plus) {
    const auto it = minus.find(key);
    if (it == minus.end() || it->second != -v) {
      fail(line_no, "free-pair block entries are not antisymmetric");
    }
    if (key.first == 0) {
      p.free_cost(key.second) = -v;
    } else {
      p.free_entries.push_back({static_cast<int>(key.first - 1), key.second, v});
    }
  }
  if (minus.size() != plus.size()) fail(line_no, "free-pair block entries are not antisymmetric");
  SdpStandardForm out = canonicalize(p);
  out.validate();
  return out;
}

namespace {

struct BraceNode {
  bool leaf = false;
  double value = 0.0;
  std::vector<BraceNode> kids;
};

class BraceParser {
 public:
  BraceParser(const std::string& s, std::size_t pos, std::size_t base_line)
      : s_(s), pos_(pos), line_(base_line) {}

  BraceNode parse() {
    skip();
    if (pos_ >= s_.size() || s_[pos_] != '{') fail(line_, "expected '{'");
    ++pos_;
    BraceNode node;
    for (;;) {
      skip();
      if (pos_ >= s_.size()) fail(line_, "unterminated '{'");
      if (s_[pos_] == '}') {
        ++pos_;
        return node;
      }
      if (s_[pos_] == '{') {
        node.kids.push_back(parse());
        continue;
      }
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail(line_, std::string("unexpected character '") + s_[pos_] + "'");
      BraceNode leaf;
      leaf.leaf = true;
      leaf.value = v;
      node.kids.push_back(leaf);
      pos_ += static_cast<std::size_t>(end - begin);
    }
  }

 private:
  void skip() {
    while (pos_ < s_.size() && (std::isspace(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == ',')) {
      if (s_[pos_] == '\n') ++line_;
      ++pos_;
    }
  }

  const std::string& s_;
  std::size_t pos_;
  std::size_t line_;
};

BraceNode section(const std::string& text, const std::string& key) {
  auto at = text.find(key);
  // Keys must start a line ("xVec =").
  while (at != std::string::npos && at > 0 && text[at - 1] != '\n') at = text.find(key, at + 1);
  if (at == std::string::npos) throw SdpaParseError("missing section '" + key + "'");
  const auto eq = text.find('=', at);
  if (eq == std::string::npos) throw SdpaParseError("missing '=' after '" + key + "'");
  const auto line = static_cast<std::size_t>(std::count(text.begin(), text.begin() + eq, '\n')) + 1;
  return BraceParser(text, eq + 1, line).parse();
}

Eigen::MatrixXd block_from(const BraceNode& n, int size) {
  const int d = std::abs(size);
  if (size < 0) {
    if (static_cast<int>(n.kids.size()) != d) throw SdpaParseError("diagonal block has wrong length");
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i) m(i, i) = n.kids[i].value;
    return m;
  }
  if (static_cast<int>(n.kids.size()) != d) throw SdpaParseError("dense block has wrong row count");
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i) {
    if (static_cast<int>(n.kids[i].kids.size()) != d) throw SdpaParseError("dense block row has wrong length");
    for (int j = 0; j < d; ++j) m(i, j) = n.kids[i].kids[j].value;
  }
  return m;
}

}  // namespace

SdpSolution import_sdpa_solution(const std::string& text, const SdpStandardForm& problem) {
  const int nb = static_cast<int>(problem.block_sizes.size());
  const bool split = problem.num_free > 0;
  std::vector<int> sizes = problem.block_sizes;
  if (split) sizes.push_back(-2 * problem.num_free);
  SdpSolution sol;
  const BraceNode xvec = section(text, "xVec");
  if (xvec.kids.size() != problem.num_constraints()) throw SdpaParseError("xVec has wrong length");
  sol.y.resize(static_cast<Eigen::Index>(xvec.kids.size()));
  for (std::size_t i = 0; i < xvec.kids.size(); ++i) sol.y(static_cast<Eigen::Index>(i)) = -xvec.kids[i].value;
  const BraceNode xmat = section(text, "xMat");
  const BraceNode ymat = section(text, "yMat");
  if (xmat.kids.size() != sizes.size() || ymat.kids.size() != sizes.size()) {
    throw SdpaParseError("matrix dump has wrong block count");
  }
  for (int k = 0; k < nb; ++k) {
    sol.S.push_back(block_from(xmat.kids[k], sizes[k]));
    sol.X.push_back(block_from(ymat.kids[k], sizes[k]));
  }
  sol.x_free = Eigen::VectorXd::Zero(problem.num_free);
  if (split) {
    const Eigen::MatrixXd pairs = block_from(ymat.kids[nb], sizes[nb]);
    for (int k = 0; k < problem.num_free; ++k) {
      sol.x_free(k) = pairs(2 * k, 2 * k) - pairs(2 * k + 1, 2 * k + 1);
    }
  }
  sol.status = SdpStatus::kNumericalFailure;
  const auto ph = text.find("phase.value");
  if (ph != std::string::npos) {
    const std::string rest = text.substr(ph, text.find('\n', ph) - ph);
    if (rest.find("pdOPT") != std::string::npos) {
      sol.status = SdpStatus::kOptimal;
    } else if (rest.find("pFEAS_dINF") != std::string::npos || rest.find("pUNBD") != std::string::npos) {
      sol.status = SdpStatus::kPrimalInfeasible;
    } else if (rest.find("pINF_dFEAS") != std::string::npos || rest.find("dUNBD") != std::string::npos) {
      sol.status = SdpStatus::kDualInfeasible;
    }
  }
  sol.residuals = compute_residuals(problem, sol.X, sol.y, sol.S, sol.x_free);
  sol.loop_residuals = sol.residuals;
  sol.message = "imported from SDPA output";
  return sol;
}

}  // namespace inclusioncert
