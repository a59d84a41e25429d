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
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "certgrad/error.hpp"

namespace certgrad {

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) throw ConfigError("cannot write NaN to an LP file");
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

void write_linear(std::ostringstream& os, const std::vector<LinearTerm>& terms,
                  const std::vector<Variable>& vars, bool& first) {
  for (const LinearTerm& t : terms) {
    if (first) {
      if (t.coef < 0) os << '-';
      first = false;
    } else {
      os << (t.coef < 0 ? " - " : " + ");
    }
    os << format_number(std::abs(t.coef)) << ' ' << vars[t.var].name;
  }
}

void write_quad(std::ostringstream& os, const std::vector<QuadTerm>& terms,
                const std::vector<Variable>& vars, bool first) {
  if (terms.empty()) return;
  os << (first ? "[ " : " + [ ");
  bool inner_first = true;
  for (const QuadTerm& t : terms) {
    if (inner_first) {
      if (t.coef < 0) os << '-';
      inner_first = false;
    } else {
      os << (t.coef < 0 ? " - " : " + ");
    }
    os << format_number(std::abs(t.coef)) << ' ' << vars[t.var1].name;
    if (t.var1 == t.var2) {
      os << " ^ 2";
    } else {
      os << " * " << vars[t.var2].name;
    }
  }
  os << " ]";
}

const char* sense_text(Sense s) {
  switch (s) {
    case Sense::kLe:
      return "<=";
    case Sense::kGe:
      return ">=";
    case Sense::kEq:
      return "=";
  }
  return "=";
}

}  // namespace

std::string emit_lp(const ConstraintSystem& cs) {
  const auto& vars = cs.variables();
  std::ostringstream os;
  os << "\\ relaxation " << relaxation_tag(cs.relaxation) << '\n';
  os << "\\ window " << cs.window_start << ' ' << cs.window_end << '\n';
  os << (cs.objective().maximize ? "Maximize" : "Minimize") << '\n';
  os << " obj:";
  if (!cs.objective().terms.empty()) {
    os << ' ';
    bool first = true;
    write_linear(os, cs.objective().terms, vars, first);
  }
  os << '\n';
  os << "Subject To\n";
  for (const Constraint& c : cs.constraints()) {
    os << ' ' << c.name << ": ";
    bool first = true;
    write_linear(os, c.linear, vars, first);
    write_quad(os, c.quad, vars, first);
    os << ' ' << sense_text(c.sense) << ' ' << format_number(c.rhs) << '\n';
  }
  os << "Bounds\n";
  for (const Variable& v : vars) {
    if (v.type == VarType::kBinary) continue;
    const bool lo_inf = std::isinf(v.lo), hi_inf = std::isinf(v.hi);
    os << ' ';
    if (lo_inf && hi_inf) {
      os << v.name << " free";
    } else if (v.lo == v.hi) {
      os << v.name << " = " << format_number(v.lo);
    } else if (hi_inf) {
      os << v.name << " >= " << format_number(v.lo);
    } else {
      os << format_number(v.lo) << " <= " << v.name << " <= " << format_number(v.hi);
    }
    os << '\n';
  }
  if (cs.num_binaries() > 0) {
    os << "Binaries\n";
    for (const Variable& v : vars) {
      if (v.type == VarType::kBinary) os << ' ' << v.name << '\n';
    }
  }
  os << "End\n";
  return os.str();
}

namespace {

struct Token {
  enum Kind { kName, kNumber, kOp } kind;
  std::string text;
  double value = 0.0;
  int line = 0;
};

bool is_name_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '#' ||
         c == '$' || c == '%' || c == '&' || c == '{' || c == '}' || c == '~' ||
         c == '\'' || c == '"' || c == '!' || c == '(' || c == ')' || c == '/' ||
         c == ',' || c == ';' || c == '?' || c == '@' || c == '|' || c == '`';
}

bool is_name_char(char c) {
  return is_name_start(c) || std::isdigit(static_cast<unsigned char>(c)) || c == '.';
}

[[noreturn]] void parse_error(int line, const std::string& what) {
  throw DataError("LP parse error at line " + std::to_string(line) + ": " + what);
}

std::vector<Token> tokenize(const std::string& text, int line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t j = i;
      while (j < text.size() &&
             (std::isdigit(static_cast<unsigned char>(text[j])) || text[j] == '.')) {
        ++j;
      }
      if (j < text.size() && (text[j] == 'e' || text[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < text.size() && (text[k] == '+' || text[k] == '-')) ++k;
        if (k < text.size() && std::isdigit(static_cast<unsigned char>(text[k]))) {
          while (k < text.size() && std::isdigit(static_cast<unsigned char>(text[k]))) ++k;
          j = k;
        }
      }
      const std::string s = text.substr(i, j - i);
      char* end = nullptr;
      const double v = std::strtod(s.c_str(), &end);
      if (end != s.c_str() + s.size()) parse_error(line, "bad number '" + s + "'");
      out.push_back({Token::kNumber, s, v, line});
      i = j;
    } else if (c == '<' || c == '>' || c == '=') {
      std::string op(1, c);
      if (i + 1 < text.size() && (text[i + 1] == '=' || text[i + 1] == '<' ||
                                  text[i + 1] == '>')) {
        op += text[i + 1];
      }
      i += op.size();
      if (op == "=<") op = "<=";
      if (op == "=>") op = ">=";
      if (op == "<") op = "<=";
      if (op == ">") op = ">=";
      if (op != "<=" && op != ">=" && op != "=") parse_error(line, "bad operator '" + op + "'");
      out.push_back({Token::kOp, op, 0.0, line});
    } else if (c == '+' || c == '-' || c == '*' || c == '^' || c == '[' ||
               c == ']' || c == ':') {
      out.push_back({Token::kOp, std::string(1, c), 0.0, line});
      ++i;
    } else if (is_name_start(c)) {
      std::size_t j = i;
      while (j < text.size() && is_name_char(text[j])) ++j;
      std::string s = text.substr(i, j - i);
      std::string lower = s;
      std::transform(lower.begin(), lower.end(), lower.begin(),
                     [](unsigned char ch) { return std::tolower(ch); });
      if (lower == "inf" || lower == "infinity") {
        out.push_back({Token::kNumber, s, std::numeric_limits<double>::infinity(), line});
      } else {
        out.push_back({Token::kName, s, 0.0, line});
      }
      i = j;
    } else {
      parse_error(line, std::string("unexpected character '") + c + "'");
    }
  }
  return out;
}

struct RawLinear {
  std::string var;
  double coef;
};

struct RawQuad {
  std::string a, b;
  double coef;
};

struct RawRow {
  std::string name;
  std::vector<RawLinear> linear;
  std::vector<RawQuad> quad;
  Sense sense = Sense::kEq;
  double rhs = 0.0;
};

class TokenStream {
 public:
  explicit TokenStream(std::vector<Token> toks) : toks_(std::move(toks)) {}
  bool done() const { return pos_ >= toks_.size(); }
  const Token& peek(std::size_t ahead = 0) const {
    if (pos_ + ahead >= toks_.size()) {
      parse_error(toks_.empty() ? 0 : toks_.back().line, "unexpected end of section");
    }
    return toks_[pos_ + ahead];
  }
  bool peek_is(const std::string& op, std::size_t ahead = 0) const {
    return pos_ + ahead < toks_.size() && toks_[pos_ + ahead].kind == Token::kOp &&
           toks_[pos_ + ahead].text == op;
  }
  Token next() {
    const Token& t = peek();
    ++pos_;
    return t;
  }
  void expect(const std::string& op) {
    const Token t = next();
    if (t.kind != Token::kOp || t.text != op) {
      parse_error(t.line, "expected '" + op + "', got '" + t.text + "'");
    }
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

double read_sign(TokenStream& ts) {
  double sign = 1.0;
  while (ts.peek_is("+") || ts.peek_is("-")) {
    if (ts.next().text == "-") sign = -sign;
  }
  return sign;
}

double read_signed_number(TokenStream& ts) {
  const double sign = read_sign(ts);
  const Token t = ts.next();
  if (t.kind != Token::kNumber) parse_error(t.line, "expected a number, got '" + t.text + "'");
  return sign * t.value;
}

bool at_sense(const TokenStream& ts) {
  return ts.peek_is("<=") || ts.peek_is(">=") || ts.peek_is("=");
}

void read_quad_block(TokenStream& ts, double outer_sign, std::vector<RawQuad>& quad) {
  ts.expect("[");
  bool first = true;
  while (!ts.peek_is("]")) {
    if (!first && !ts.peek_is("+") && !ts.peek_is("-")) {
      parse_error(ts.peek().line, "expected '+' or '-' between quadratic terms");
    }
    first = false;
    double coef = read_sign(ts);
    if (ts.peek().kind == Token::kNumber) coef *= ts.next().value;
    const Token a = ts.next();
    if (a.kind != Token::kName) parse_error(a.line, "expected a variable name");
    if (ts.peek_is("^")) {
      ts.next();
      const Token two = ts.next();
      if (two.kind != Token::kNumber || two.value != 2.0) {
        parse_error(two.line, "only squares are supported");
      }
      quad.push_back({a.text, a.text, outer_sign * coef});
    } else {
      ts.expect("*");
      const Token b = ts.next();
      if (b.kind != Token::kName) parse_error(b.line, "expected a variable name");
      quad.push_back({a.text, b.text, outer_sign * coef});
    }
  }
  ts.expect("]");
}

// Reads terms until a sense operator or the end of the stream.
void read_expression(TokenStream& ts, std::vector<RawLinear>& lin,
                     std::vector<RawQuad>& quad) {
  bool first = true;
  while (!ts.done() && !at_sense(ts)) {
    if (!first && !ts.peek_is("+") && !ts.peek_is("-")) {
      parse_error(ts.peek().line, "expected '+' or '-' between terms, got '" +
                                      ts.peek().text + "'");
    }
    first = false;
    double coef = read_sign(ts);
    if (ts.peek_is("[")) {
      read_quad_block(ts, coef, quad);
      continue;
    }
    if (ts.peek().kind == Token::kNumber) coef *= ts.next().value;
    const Token v = ts.next();
    if (v.kind != Token::kName) parse_error(v.line, "expected a variable name, got '" + v.text + "'");
    lin.push_back({v.text, coef});
  }
}

std::string lower_trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  std::string out = s.substr(a, b - a);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char ch) { return std::tolower(ch); });
  return out;
}

}  // namespace

ConstraintSystem parse_lp(const std::string& text) {
  enum Section { kNone, kObjective, kRows, kBounds, kBinaries, kEnd };
  Section section = kNone;
  bool maximize = false;
  Relaxation relaxation = Relaxation::kMiqcp;
  int window_start = 0, window_end = 0;
  std::vector<Token> obj_tokens, row_tokens, bin_tokens;
  std::vector<std::vector<Token>> bound_lines;

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string key = lower_trim(line);
    if (key.empty()) continue;
    if (key[0] == '\\') {
      std::istringstream meta(line.substr(line.find('\\') + 1));
      std::string tag;
      meta >> tag;
      if (tag == "relaxation") {
        std::string r;
        meta >> r;
        relaxation = parse_relaxation(r);
      } else if (tag == "window") {
        meta >> window_start >> window_end;
      }
      continue;
    }
    if (key == "minimize" || key == "minimise" || key == "min") {
      section = kObjective;
      maximize = false;
      continue;
    }
    if (key == "maximize" || key == "maximise" || key == "max") {
      section = kObjective;
      maximize = true;
      continue;
    }
    if (key == "subject to" || key == "such that" || key == "st" || key == "s.t.") {
      section = kRows;
      continue;
    }
    if (key == "bounds" || key == "bound") {
      section = kBounds;
      continue;
    }
    if (key == "binaries" || key == "binary" || key == "bin") {
      section = kBinaries;
      continue;
    }
    if (key == "end") {
      section = kEnd;
      continue;
    }
    std::vector<Token> toks = tokenize(line, lineno);
    switch (section) {
      case kNone:
        parse_error(lineno, "content before the objective section");
      case kObjective:
        obj_tokens.insert(obj_tokens.end(), toks.begin(), toks.end());
        break;
      case kRows:
        row_tokens.insert(row_tokens.end(), toks.begin(), toks.end());
        break;
      case kBounds:
        bound_lines.push_back(std::move(toks));
        break;
      case kBinaries:
        bin_tokens.insert(bin_tokens.end(), toks.begin(), toks.end());
        break;
      case kEnd:
        parse_error(lineno, "content after End");
    }
  }
  if (section != kEnd) parse_error(lineno, "missing End");

  // Objective.
  std::vector<RawLinear> obj_lin;
  {
    TokenStream ts(obj_tokens);
    if (!ts.done() && ts.peek().kind == Token::kName && ts.peek_is(":", 1)) {
      ts.next();
      ts.next();
    }
    std::vector<RawQuad> q;
    read_expression(ts, obj_lin, q);
    if (!q.empty()) parse_error(obj_tokens.front().line, "quadratic objectives are not supported");
    if (!ts.done()) parse_error(ts.peek().line, "unexpected '" + ts.peek().text + "' in objective");
  }

  // Rows.
  std::vector<RawRow> rows;
  {
    TokenStream ts(row_tokens);
    int unnamed = 0;
    while (!ts.done()) {
      RawRow r;
      if (ts.peek().kind == Token::kName && ts.peek_is(":", 1)) {
        r.name = ts.next().text;
        ts.next();
      } else {
        r.name = "R" + std::to_string(++unnamed);
      }
      read_expression(ts, r.linear, r.quad);
      if (ts.done()) parse_error(row_tokens.back().line, "row '" + r.name + "' has no sense");
      const std::string s = ts.next().text;
      r.sense = s == "<=" ? Sense::kLe : s == ">=" ? Sense::kGe : Sense::kEq;
      r.rhs = read_signed_number(ts);
      rows.push_back(std::move(r));
    }
  }

  // Bounds.
  struct RawBound {
    std::string name;
    double lo, hi;
  };
  std::vector<RawBound> bounds;
  std::map<std::string, std::size_t> bound_index;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  auto bound_for = [&](const std::string& name) -> RawBound& {
    auto it = bound_index.find(name);
    if (it == bound_index.end()) {
      bound_index.emplace(name, bounds.size());
      bounds.push_back({name, 0.0, kInf});
      return bounds.back();
    }
    return bounds[it->second];
  };
  for (const auto& toks : bound_lines) {
    TokenStream ts(toks);
    const int ln = toks.front().line;
    std::size_t lead = 0;
    while (ts.peek_is("+", lead) || ts.peek_is("-", lead)) ++lead;
    if (ts.peek(lead).kind == Token::kNumber) {
      const double lo = read_signed_number(ts);
      const Token op = ts.next();
      const Token v = ts.next();
      if (v.kind != Token::kName) parse_error(ln, "expected a variable in bounds");
      RawBound& b = bound_for(v.text);
      if (op.text == "<=") {
        b.lo = lo;
      } else if (op.text == ">=") {
        b.hi = lo;
      } else {
        b.lo = b.hi = lo;
      }
      if (!ts.done()) {
        const Token op2 = ts.next();
        const double hi = read_signed_number(ts);
        if (op2.text == "<=") {
          b.hi = hi;
        } else if (op2.text == ">=") {
          b.lo = hi;
        } else {
          parse_error(ln, "bad double bound");
        }
      }
    } else {
      const Token v = ts.next();
      if (v.kind != Token::kName) parse_error(ln, "expected a variable in bounds");
      RawBound& b = bound_for(v.text);
      if (!ts.done() && ts.peek().kind == Token::kName) {
        std::string w = lower_trim(ts.next().text);
        if (w != "free") parse_error(ln, "unknown bound keyword '" + w + "'");
        b.lo = -kInf;
        b.hi = kInf;
      } else {
        const Token op = ts.next();
        const double val = read_signed_number(ts);
        if (op.text == "<=") {
          b.hi = val;
        } else if (op.text == ">=") {
          b.lo = val;
        } else {
          b.lo = b.hi = val;
        }
      }
    }
    if (!ts.done()) parse_error(ln, "trailing tokens in bounds line");
  }

  ConstraintSystem cs;
  cs.relaxation = relaxation;
  cs.window_start = window_start;
  cs.window_end = window_end;
  std::set<std::string> binaries;
  for (const Token& t : bin_tokens) {
    if (t.kind != Token::kName) parse_error(t.line, "expected a binary variable name");
    binaries.insert(t.text);
  }
  for (const RawBound& b : bounds) {
    if (binaries.count(b.name)) {
      cs.add_variable(b.name, b.lo, std::min(b.hi, 1.0), VarType::kBinary);
    } else {
      cs.add_variable(b.name, b.lo, b.hi);
    }
  }
  for (const Token& t : bin_tokens) {
    if (!cs.has_variable(t.text)) cs.add_variable(t.text, 0.0, 1.0, VarType::kBinary);
  }
  auto var = [&](const std::string& name) {
    if (!cs.has_variable(name)) cs.add_variable(name, 0.0, kInf);
    return cs.index_of(name);
  };
  Objective obj;
  obj.maximize = maximize;
  for (const RawLinear& t : obj_lin) obj.terms.push_back({var(t.var), t.coef});
  for (const RawRow& r : rows) {
    Constraint c;
    c.name = r.name;
    for (const RawLinear& t : r.linear) c.linear.push_back({var(t.var), t.coef});
    for (const RawQuad& t : r.quad) c.quad.push_back({var(t.a), var(t.b), t.coef});
    c.sense = r.sense;
    c.rhs = r.rhs;
    cs.add_constraint(std::move(c));
  }
  cs.set_objective(std::move(obj));
  return cs;
}

}  // namespace certgrad
