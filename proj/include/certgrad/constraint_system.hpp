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

#ifndef CERTGRAD_CONSTRAINT_SYSTEM_HPP_
#define CERTGRAD_CONSTRAINT_SYSTEM_HPP_

#include <array>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "certgrad/interval.hpp"

namespace certgrad {

enum class VarType { kContinuous, kBinary };

struct Variable {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  VarType type = VarType::kContinuous;
};

struct LinearTerm {
  int var = 0;
  double coef = 0.0;
};

struct QuadTerm {
  int var1 = 0;
  int var2 = 0;
  double coef = 0.0;
};

enum class Sense { kLe, kGe, kEq };

struct Constraint {
  std::string name;
  std::vector<LinearTerm> linear;
  std::vector<QuadTerm> quad;
  Sense sense = Sense::kEq;
  double rhs = 0.0;

  bool is_quadratic() const { return !quad.empty(); }
};

struct Objective {
  bool maximize = false;
  std::vector<LinearTerm> terms;
};

enum class Relaxation { kMiqcp, kMilp, kQcp, kLp };

Relaxation parse_relaxation(const std::string& tag);
std::string relaxation_tag(Relaxation r);

// aux = a * b, introduced by a McCormick relaxation.
struct ProductDef {
  int aux = 0;
  int a = 0;
  int b = 0;
};

class ConstraintSystem {
 public:
  int add_variable(const std::string& name, double lo, double hi,
                   VarType type = VarType::kContinuous);
  int index_of(const std::string& name) const;
  bool has_variable(const std::string& name) const;

  // Merges repeated variables within a row and drops zero coefficients.
  void add_constraint(Constraint c);
  void set_objective(Objective obj);

  const std::vector<Variable>& variables() const { return vars_; }
  std::vector<Variable>& mutable_variables() { return vars_; }
  const std::vector<Constraint>& constraints() const { return cons_; }
  const Objective& objective() const { return obj_; }
  const std::vector<ProductDef>& products() const { return products_; }
  void add_product(ProductDef p) { products_.push_back(p); }

  Relaxation relaxation = Relaxation::kMiqcp;
  int window_start = 0;
  int window_end = 0;

  int num_variables() const { return static_cast<int>(vars_.size()); }
  int num_binaries() const;
  int num_constraints() const { return static_cast<int>(cons_.size()); }
  int num_quadratic() const;
  int num_linear() const { return num_constraints() - num_quadratic(); }

 private:
  std::vector<Variable> vars_;
  std::unordered_map<std::string, int> index_;
  std::vector<Constraint> cons_;
  Objective obj_;
  std::vector<ProductDef> products_;
};

// Four rows enclosing c = a * b for a in A and b in B, in the order
//   c >= aL b + a bL - aL bL,   c >= aU b + a bU - aU bU,
//   c <= aL b + a bU - aL bU,   c <= aU b + a bL - aU bL.
std::array<Constraint, 4> mccormick(int c, int a, int b, Interval A, Interval B,
                                    const std::string& name_prefix);

// Relaxes a mixed-integer quadratic system. kMilp and kLp replace every
// bilinear term with a product variable and its McCormick rows; kQcp and kLp
// relax binaries to [0, 1].
ConstraintSystem relax(const ConstraintSystem& cs, Relaxation target);

struct FeasibilityReport {
  bool feasible = true;
  double max_residual = 0.0;
  std::string worst;  // constraint or variable name with the largest residual
  std::vector<std::pair<std::string, double>> violations;
};

FeasibilityReport check_feasible(const ConstraintSystem& cs,
                                 const std::vector<double>& values, double tol);

// Orders named values by variable index and fills product variables from
// their factors. Throws if any other variable is missing.
std::vector<double> complete_assignment(const ConstraintSystem& cs,
                                        const std::map<std::string, double>& named);

}  // namespace certgrad

#endif  // CERTGRAD_CONSTRAINT_SYSTEM_HPP_
