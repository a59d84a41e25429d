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

#include "certgrad/lp_format.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "certgrad/encoding.hpp"
#include "certgrad/error.hpp"
#include "fixture_systems.hpp"
#include "support.hpp"

namespace certgrad {
namespace {

using testing::fixture_path;
using testing::Gen;

std::string read_fixture(const std::string& name) {
  std::ifstream in(fixture_path(name), std::ios::binary);
  EXPECT_TRUE(in.good()) << name;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Rewrites a golden file instead of comparing when CERTGRAD_REGEN_GOLDENS is set.
void expect_golden(const std::string& name, const std::string& text) {
  if (std::getenv("CERTGRAD_REGEN_GOLDENS")) {
    std::ofstream(fixture_path(name), std::ios::binary) << text;
    return;
  }
  EXPECT_EQ(text, read_fixture(name));
}

ConstraintSystem one_var() { return testing::one_var_system(); }
ConstraintSystem bilinear() { return testing::bilinear_system(); }
ConstraintSystem tiny_training() { return testing::tiny_training_system(); }

TEST(LpGolden, OneVariable) { expect_golden("one_var.lp", emit_lp(one_var())); }

TEST(LpGolden, Bilinear) { expect_golden("bilinear.lp", emit_lp(bilinear())); }

TEST(LpGolden, TinyTraining) {
  expect_golden("tiny_training.lp", emit_lp(tiny_training()));
}

TEST(LpRoundTrip, Fixpoint) {
  for (const ConstraintSystem& cs :
       {one_var(), bilinear(), tiny_training(), relax(tiny_training(), Relaxation::kMilp),
        relax(bilinear(), Relaxation::kLp)}) {
    const std::string text = emit_lp(cs);
    const ConstraintSystem back = parse_lp(text);
    EXPECT_EQ(emit_lp(back), text);
    EXPECT_EQ(back.num_variables(), cs.num_variables());
    EXPECT_EQ(back.num_binaries(), cs.num_binaries());
    EXPECT_EQ(back.num_quadratic(), cs.num_quadratic());
    EXPECT_EQ(back.relaxation, cs.relaxation);
  }
}

TEST(LpRoundTrip, RandomSystemsKeepValues) {
  Gen g(21);
  for (int trial = 0; trial < 30; ++trial) {
    ConstraintSystem cs;
    const int nv = g.integer(1, 6);
    for (int i = 0; i < nv; ++i) {
      const int kind = g.integer(0, 3);
      const std::string name = "v" + std::to_string(i);
      if (kind == 0) {
        cs.add_variable(name, 0, 1, VarType::kBinary);
      } else if (kind == 1) {
        cs.add_variable(name, -INFINITY, INFINITY);
      } else if (kind == 2) {
        const double v = g.real(-5, 5);
        cs.add_variable(name, v, v);
      } else {
        const double lo = g.real(-5, 5);
        cs.add_variable(name, lo, lo + g.real(0, 1e-3));
      }
    }
    for (int r = 0; r < 4; ++r) {
      Constraint c;
      c.name = "r" + std::to_string(r);
      c.linear = {{g.integer(0, nv - 1), g.real(-1, 1) * 1e-7}};
      if (g.integer(0, 1)) c.quad = {{g.integer(0, nv - 1), g.integer(0, nv - 1), g.real(-9, 9)}};
      c.sense = static_cast<Sense>(g.integer(0, 2));
      c.rhs = g.real(-1e6, 1e6);
      cs.add_constraint(c);
    }
    cs.set_objective({g.integer(0, 1) == 1, {{0, g.real(-1, 1)}}});
    const ConstraintSystem back = parse_lp(emit_lp(cs));
    ASSERT_EQ(back.num_variables(), cs.num_variables());
    // The parser numbers variables in section order, so match by name.
    for (const Variable& v : cs.variables()) {
      const Variable& w = back.variables()[back.index_of(v.name)];
      EXPECT_EQ(w.lo, v.lo);
      EXPECT_EQ(w.hi, v.hi);
      EXPECT_EQ(w.type, v.type);
    }
    for (int r = 0; r < cs.num_constraints(); ++r) {
      const Constraint& a = cs.constraints()[r];
      const Constraint& b = back.constraints()[r];
      EXPECT_EQ(a.rhs, b.rhs);
      EXPECT_EQ(a.sense, b.sense);
      ASSERT_EQ(a.linear.size(), b.linear.size());
      for (std::size_t k = 0; k < a.linear.size(); ++k) {
        EXPECT_EQ(a.linear[k].coef, b.linear[k].coef);
        EXPECT_EQ(cs.variables()[a.linear[k].var].name, back.variables()[b.linear[k].var].name);
      }
      ASSERT_EQ(a.quad.size(), b.quad.size());
      for (std::size_t k = 0; k < a.quad.size(); ++k) EXPECT_EQ(a.quad[k].coef, b.quad[k].coef);
    }
  }
}

TEST(LpGrammar, SectionsAndBinariesOnce) {
  const ConstraintSystem cs = tiny_training();
  const std::string text = emit_lp(cs);
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> sections;
  std::vector<std::string> binaries, bounds;
  bool in_bin = false, in_bounds = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '\\') continue;
    if (line[0] != ' ') {
      sections.push_back(line);
      in_bin = line == "Binaries";
      in_bounds = line == "Bounds";
      continue;
    }
    if (in_bin) binaries.push_back(line.substr(1));
    if (in_bounds) bounds.push_back(line + " ");
  }
  EXPECT_EQ(sections, (std::vector<std::string>{"Maximize", "Subject To", "Bounds",
                                                "Binaries", "End"}));
  EXPECT_EQ(static_cast<int>(binaries.size()), cs.num_binaries());
  std::sort(binaries.begin(), binaries.end());
  EXPECT_EQ(std::adjacent_find(binaries.begin(), binaries.end()), binaries.end());
  EXPECT_EQ(text.find('\r'), std::string::npos);
  EXPECT_EQ(text.back(), '\n');
  // Binaries have no bounds entry.
  for (const std::string& b : binaries) {
    for (const std::string& l : bounds) EXPECT_EQ(l.find(" " + b + " "), std::string::npos);
  }
  EXPECT_EQ(static_cast<int>(bounds.size()), cs.num_variables() - cs.num_binaries());
}

TEST(LpGrammar, LinearRelaxationsHaveNoBrackets) {
  const std::string lp = emit_lp(relax(tiny_training(), Relaxation::kLp));
  EXPECT_EQ(lp.find('['), std::string::npos);
  EXPECT_EQ(lp.find("Binaries"), std::string::npos);
}

TEST(LpParse, AcceptsCommonVariants) {
  const std::string text =
      "\\ free text comment\n"
      "MINIMIZE\n"
      " obj: 2 x + y\n"
      "subject to\n"
      " c1: x + y\n"
      "   >= 1\n"
      " c2: - x + [ x * y ] =< 4\n"
      "bounds\n"
      " x <= 3\n"
      " y free\n"
      "binary\n"
      " z\n"
      "end\n";
  const ConstraintSystem cs = parse_lp(text);
  EXPECT_EQ(cs.num_constraints(), 2);
  EXPECT_EQ(cs.variables()[cs.index_of("x")].lo, 0.0);
  EXPECT_EQ(cs.variables()[cs.index_of("x")].hi, 3.0);
  EXPECT_TRUE(std::isinf(cs.variables()[cs.index_of("y")].lo));
  EXPECT_EQ(cs.variables()[cs.index_of("z")].type, VarType::kBinary);
  EXPECT_EQ(cs.constraints()[1].sense, Sense::kLe);
  EXPECT_EQ(cs.constraints()[1].quad.size(), 1u);
}

TEST(LpParse, ErrorsCarryLineNumbers) {
  try {
    parse_lp("Minimize\n obj: x\nSubject To\n c1: x >= 1 1\nEnd\n");
    FAIL() << "expected a parse error";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_lp("Minimize\n obj: x\nSubject To\n c1: x ? 1\nEnd\n"), DataError);
}

TEST(LpFormat, Numbers) {
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(format_number(-2), "-2");
  EXPECT_EQ(format_number(INFINITY), "inf");
  EXPECT_THROW(format_number(NAN), ConfigError);
}

}  // namespace
}  // namespace certgrad
