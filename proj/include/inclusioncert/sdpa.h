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

#ifndef INCLUSIONCERT_SDPA_H_
#define INCLUSIONCERT_SDPA_H_

#include <stdexcept>
#include <string>

#include "inclusioncert/sdp.h"

namespace inclusioncert {

class SdpaParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// SDPA sparse format (.dat-s). The problem is written as the SDPA dual
/// (max F0.Y, Fi.Y = ci) with F0 = -C, Fi = A_i, c = b. Free variables are
/// split into an extra diagonal block of (x+, x-) pairs, announced by a
/// comment line "* free-pairs <block> <count>" so that parse_sdpa can merge
/// them back. Values use 17 significant digits.
std::string export_sdpa(const SdpStandardForm& problem);

/// Comment lines start with '"' or '*'; separators may be any mix of
/// spaces, tabs, commas and braces. Throws SdpaParseError with a line number.
SdpStandardForm parse_sdpa(const std::string& text);

/// Reads an SDPA result file (xVec, xMat, yMat dumps) for `problem`.
/// xVec = -y, xMat = S, yMat = X in this library's convention.
SdpSolution import_sdpa_solution(const std::string& text,
                                 const SdpStandardForm& problem);

/// Sorted by (constraint, block, row, col), duplicates summed, zeros dropped.
SdpStandardForm canonicalize(const SdpStandardForm& problem);
bool identical(const SdpStandardForm& a, const SdpStandardForm& b);

}  // namespace inclusioncert

#endif  // INCLUSIONCERT_SDPA_H_
