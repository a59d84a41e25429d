// Copyright 2026 The certgrad Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CERTGRAD_LP_FORMAT_HPP_
#define CERTGRAD_LP_FORMAT_HPP_

#include <string>

#include "certgrad/constraint_system.hpp"

namespace certgrad {

// CPLEX LP text: objective, named rows with quadratic parts in brackets,
// explicit bounds for every continuous variable, binaries, End. Numbers use
// 17 significant digits so that parsing restores them exactly.
std::string emit_lp(const ConstraintSystem& cs);

// Reads the subset written by emit_lp, plus continuation lines and the
// default [0, inf) bound for variables without a bounds entry.
ConstraintSystem parse_lp(const std::string& text);

std::string format_number(double v);

}  // namespace certgrad

#endif  // CERTGRAD_LP_FORMAT_HPP_
