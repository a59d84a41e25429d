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

#include "certgrad/constraint_system.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "certgrad/error.hpp"

namespace certgrad {

Relaxation parse_relaxation(const std::string& tag) {
  if (tag == "miqcp") return Relaxation::kMiqcp;
  if (tag == "milp") return Relaxation::kMilp;
  if (tag == "qcp") return Relaxation::kQcp;
  if (tag == "lp") return Relaxation::kLp;
  throw ConfigError("unknown relaxation tag '" + tag + "'");
}

std::string relaxation_tag(Relaxation r) {
  switch (r) {
    case Relaxation::kMiqcp:
      return "miqcp";
    case Relaxation::kMilp:
      return "milp";
    case Relaxation::kQcp:
      return "qcp";
    case Relaxation::kLp:
      return "lp";
  }
  return "?";
}

int ConstraintSystem::add_variable(const std::string& name, double lo, double hi,
                                   VarType type) {
  if (name.empty()) throw ConfigError("variable name must be nonempty");
  if (index_.count(name)) throw ConfigError("duplicate variable '" + name + "'");
  if (!(lo <= hi)) {
    std::ostringstream msg;
    msg << "variable '" << name << "' has empty bounds [" << lo << ", " << hi << "]";
    throw ConfigError(msg.str());
  }
  const int id = static_cast<int>(vars_.size());
  vars_.push_back({name, lo, hi, type});
  index_.emplace(name, id);
  return id;
}

int ConstraintSystem::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown variable '" + name + "'");
  return it->second;
}

bool ConstraintSystem::has_variable(const std::string& name) const {
  return index_.count(name) > 0;
}

void ConstraintSystem::add_constraint(Constraint c) {
  if (c.name.empty()) throw ConfigError("constraint name must be nonempty");
  const int nv = num_variables();
  auto check = [&](int v) {
    if (v < 0 || v >= nv) {
      throw ConfigError("constraint '" + c.name + "' references a missing variable");
    }
  };
  std::vector<LinearTerm> lin;
  for (const LinearTerm& t : c.linear) {
    check(t.var);
    auto it = std::find_if(lin.begin(), lin.end(),
                           [&](const LinearTerm& u) { return u.var == t.var; });
    if (it == lin.end()) {
      lin.push_back(t);
    } else {
      it->coef += t.coef;
    }
  }
  std::erase_if(lin, [](const LinearTerm& t) { return t.coef == 0.0; });
  std::vector<QuadTerm> quad;
  for (QuadTerm t : c.quad) {
    check(t.var1);
    check(t.var2);
    if (t.var1 > t.var2) std::swap(t.var1, t.var2);
    auto it = std::find_if(quad.begin(), quad.end(), [&](const QuadTerm& u) {
      return u.var1 == t.var1 && u.var2 == t.var2;
    });
    if (it == quad.end()) {
      quad.push_back(t);
    } else {
      it->coef += t.coef;
    }
  }
  std::erase_if(quad, [](const QuadTerm& t) { return t.coef == 0.0; });
  if (lin.empty() && quad.empty()) {
    throw ConfigError("constraint '" + c.name + "' has no terms");
  }
  c.linear = std::move(lin);
  c.quad = std::move(quad);
  cons_.push_back(std::move(c));
}

void ConstraintSystem::set_objective(Objective obj) {
  for (const LinearTerm& t : obj.terms) {
    if (t.var < 0 || t.var >= num_variables()) {
      throw ConfigError("objective references a missing variable");
    }
  }
  obj_ = std::move(obj);
}

int ConstraintSystem::num_binaries() const {
  return static_cast<int>(std::count_if(vars_.begin(), vars_.end(), [](const Variable& v) {
    return v.type == VarType::kBinary;
  }));
}

int ConstraintSystem::num_quadratic() const {
  return static_cast<int>(std::count_if(cons_.begin(), cons_.end(),
                                        [](const Constraint& c) { return c.is_quadratic(); }));
}

std::array<Constraint, 4> mccormick(int c, int a, int b, Interval A, Interval B,
                                    const std::string& name_prefix) {
  if (!std::isfinite(A.lo) || !std::isfinite(A.hi) || !std::isfinite(B.lo) ||
      !std::isfinite(B.hi)) {
    throw ConfigError("McCormick envelope needs finite factor bounds (" +
                      name_prefix + ")");
  }
  auto row = [&](const char* suffix, double ca, double cb, Sense s, double rhs) {
    Constraint r;
    r.name = name_prefix + suffix;
    r.linear = {{c, 1.0}, {b, -ca}, {a, -cb}};
    r.sense = s;
    r.rhs = rhs;
    return r;
  };
  return {row("_mc1", A.lo, B.lo, Sense::kGe, -A.lo * B.lo),
          row("_mc2", A.hi, B.hi, Sense::kGe, -A.hi * B.hi),
          row("_mc3", A.lo, B.hi, Sense::kLe, -A.lo * B.hi),
          row("_mc4", A.hi, B.lo, Sense::kLe, -A.hi * B.lo)};
}

ConstraintSystem relax(const ConstraintSystem& cs, Relaxation target) {
  if (cs.relaxation != Relaxation::kMiqcp) {
    throw ConfigError("relax expects a mixed-integer quadratic system");
  }
  const bool linearize = target == Relaxation::kMilp || target == Relaxation::kLp;
  const bool continuous = target == Relaxation::kQcp || target == Relaxation::kLp;
  ConstraintSystem out;
  out.relaxation = target;
  out.window_start = cs.window_start;
  out.window_end = cs.window_end;
  for (const Variable& v : cs.variables()) {
    out.add_variable(v.name, v.lo, v.hi, continuous ? VarType::kContinuous : v.type);
  }
  std::map<std::pair<int, int>, int> aux;
  for (const Constraint& c : cs.constraints()) {
    if (!linearize || c.quad.empty()) {
      out.add_constraint(c);
      continue;
    }
    Constraint lin = c;
    lin.quad.clear();
    std::vector<Constraint> envelopes;
    for (const QuadTerm& q : c.quad) {
      const auto key = std::make_pair(q.var1, q.var2);
      auto it = aux.find(key);
      if (it == aux.end()) {
        const Variable& va = cs.variables()[q.var1];
        const Variable& vb = cs.variables()[q.var2];
        const double p[4] = {va.lo * vb.lo, va.lo * vb.hi, va.hi * vb.lo,
                             va.hi * vb.hi};
        const std::string name = "prod_" + va.name + "__" + vb.name;
        const int id = out.add_variable(name, *std::min_element(p, p + 4),
                                        *std::max_element(p, p + 4));
        out.add_product({id, q.var1, q.var2});
        for (Constraint& r : mccormick(id, q.var1, q.var2, Interval(va.lo, va.hi),
                                       Interval(vb.lo, vb.hi), name)) {
          envelopes.push_back(std::move(r));
        }
        it = aux.emplace(key, id).first;
      }
      lin.linear.push_back({it->second, q.coef});
    }
    out.add_constraint(std::move(lin));
    for (Constraint& r : envelopes) out.add_constraint(std::move(r));
  }
  Objective obj = cs.objective();
  out.set_objective(std::move(obj));
  return out;
}

FeasibilityReport check_feasible(const ConstraintSystem& cs,
                                 const std::vector<double>& values, double tol) {
  if (static_cast<int>(values.size()) != cs.num_variables()) {
    std::ostringstream msg;
    msg << "assignment has " << values.size() << " values, system has "
        << cs.num_variables() << " variables";
    throw ConfigError(msg.str());
  }
  FeasibilityReport rep;
  auto note = [&](const std::string& name, double r) {
    if (!(r <= tol)) {
      rep.feasible = false;
      rep.violations.emplace_back(name, r);
    }
    if (!(r <= rep.max_residual)) {
      rep.max_residual = std::isnan(r) ? std::numeric_limits<double>::infinity() : r;
      rep.worst = name;
    }
  };
  for (int i = 0; i < cs.num_variables(); ++i) {
    const Variable& v = cs.variables()[i];
    const double x = values[i];
    double r = std::max({v.lo - x, x - v.hi, 0.0});
    if (std::isnan(x)) r = std::numeric_limits<double>::infinity();
    if (v.type == VarType::kBinary) r = std::max(r, std::min(std::abs(x), std::abs(x - 1.0)));
    note(v.name, r);
  }
  for (const Constraint& c : cs.constraints()) {
    double lhs = 0.0;
    for (const LinearTerm& t : c.linear) lhs += t.coef * values[t.var];
    for (const QuadTerm& t : c.quad) lhs += t.coef * values[t.var1] * values[t.var2];
    const double d = lhs - c.rhs;
    double r = 0.0;
    switch (c.sense) {
      case Sense::kLe:
        r = std::max(d, 0.0);
        break;
      case Sense::kGe:
        r = std::max(-d, 0.0);
        break;
      case Sense::kEq:
        r = std::abs(d);
        break;
    }
    if (std::isnan(d)) r = std::numeric_limits<double>::infinity();
    note(c.name, r);
  }
  return rep;
}

std::vector<double> complete_assignment(const ConstraintSystem& cs,
                                        const std::map<std::string, double>& named) {
  std::vector<double> v(cs.num_variables(), std::numeric_limits<double>::quiet_NaN());
  std::vector<char> set(cs.num_variables(), 0);
  for (const auto& [name, value] : named) {
    if (!cs.has_variable(name)) continue;
    const int i = cs.index_of(name);
    v[i] = value;
    set[i] = 1;
  }
  for (const ProductDef& p : cs.products()) {
    if (!set[p.a] || !set[p.b]) {
      throw ConfigError("product factor missing for '" + cs.variables()[p.aux].name + "'");
    }
    v[p.aux] = v[p.a] * v[p.b];
    set[p.aux] = 1;
  }
  for (int i = 0; i < cs.num_variables(); ++i) {
    if (!set[i]) {
      throw ConfigError("assignment is missing variable '" + cs.variables()[i].name + "'");
    }
  }
  return v;
}

}  // namespace certgrad
