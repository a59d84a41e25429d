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

#include "certgrad/data.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "certgrad/error.hpp"
#include "certgrad/rng.hpp"

namespace certgrad {
namespace {

Dataset shuffled(const Dataset& d, Rng& rng) {
  const std::vector<int> perm = rng.permutation(d.size());
  Dataset out;
  out.num_classes = d.num_classes;
  out.features.resize(d.size(), d.dim());
  out.labels.resize(d.size());
  for (int i = 0; i < d.size(); ++i) {
    out.features.row(i) = d.features.row(perm[i]);
    out.labels(i) = d.labels(perm[i]);
  }
  return out;
}

std::string location(int line, int column) {
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

Dataset gen_halfmoons(int N, double noise_sd, std::uint64_t seed) {
  if (N < 2) throw ConfigError("halfmoons needs at least 2 points");
  if (!(noise_sd >= 0.0)) throw ConfigError("noise level must be nonnegative");
  const int n0 = (N + 1) / 2, n1 = N / 2;
  Dataset d;
  d.num_classes = 2;
  d.features.resize(N, 2);
  d.labels.resize(N);
  const double pi = std::numbers::pi;
  for (int i = 0; i < n0; ++i) {
    const double t = n0 == 1 ? 0.0 : pi * i / (n0 - 1);
    d.features.row(i) << std::cos(t), std::sin(t);
    d.labels(i) = 0.0;
  }
  for (int i = 0; i < n1; ++i) {
    const double t = n1 == 1 ? 0.0 : pi * i / (n1 - 1);
    d.features.row(n0 + i) << 1.0 - std::cos(t), 1.0 - std::sin(t) - 0.5;
    d.labels(n0 + i) = 1.0;
  }
  Rng rng(seed);
  if (noise_sd > 0.0) {
    for (int i = 0; i < N; ++i) {
      for (int f = 0; f < 2; ++f) d.features(i, f) += noise_sd * rng.normal();
    }
  }
  return shuffled(d, rng);
}

Dataset gen_blobs(int N, const Eigen::MatrixXd& centers, double sd, std::uint64_t seed) {
  const int k = static_cast<int>(centers.rows());
  if (k < 2) throw ConfigError("blobs need at least 2 centers");
  if (N < 1) throw ConfigError("blobs need at least 1 point");
  if (!(sd >= 0.0)) throw ConfigError("cluster spread must be nonnegative");
  if (!centers.allFinite()) throw ConfigError("blob centers must be finite");
  Dataset d;
  d.num_classes = k;
  d.features.resize(N, centers.cols());
  d.labels.resize(N);
  Rng rng(seed);
  for (int i = 0; i < N; ++i) {
    const int c = i % k;
    for (Eigen::Index f = 0; f < centers.cols(); ++f) {
      d.features(i, f) = centers(c, f) + (sd > 0.0 ? sd * rng.normal() : 0.0);
    }
    d.labels(i) = c;
  }
  return shuffled(d, rng);
}

std::size_t poly_feature_count(int d, int degree) {
  if (d < 1) throw ConfigError("feature dimension must be positive");
  if (degree < 1) throw ConfigError("polynomial degree must be at least 1");
  // C(d + degree, degree) - 1
  double c = 1.0;
  for (int k = 1; k <= degree; ++k) {
    c = c * (d + k) / k;
    if (c > 1e7) throw ConfigError("polynomial expansion too large");
  }
  return static_cast<std::size_t>(std::llround(c)) - 1;
}

Eigen::MatrixXd poly_features(const Eigen::MatrixXd& X, int degree) {
  const int d = static_cast<int>(X.cols());
  const std::size_t count = poly_feature_count(d, degree);
  std::vector<std::vector<int>> exps;
  std::vector<int> e(d, 0);
  // Exponent vectors of total degree `left` over variables v.., earlier
  // variables taking the larger powers first.
  auto rec = [&](auto&& self, int v, int left) -> void {
    if (v == d - 1) {
      e[v] = left;
      exps.push_back(e);
      return;
    }
    for (int p = left; p >= 0; --p) {
      e[v] = p;
      self(self, v + 1, left - p);
    }
  };
  for (int g = 1; g <= degree; ++g) rec(rec, 0, g);
  if (exps.size() != count) throw InvariantError("monomial count mismatch");
  Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(count));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (std::size_t c = 0; c < count; ++c) {
      double v = 1.0;
      for (int f = 0; f < d; ++f) {
        for (int p = 0; p < exps[c][f]; ++p) v *= X(i, f);
      }
      out(i, static_cast<Eigen::Index>(c)) = v;
    }
  }
  return out;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& X) {
  if (X.rows() == 0) throw DataError("cannot standardize an empty matrix");
  Standardizer s;
  s.mean = X.colwise().mean().transpose();
  s.scale.resize(X.cols());
  for (Eigen::Index f = 0; f < X.cols(); ++f) {
    const double var = (X.col(f).array() - s.mean(f)).square().mean();
    const double sd = std::sqrt(var);
    s.scale(f) = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& X) const {
  if (X.cols() != mean.size()) throw ConfigError("standardizer fitted on another width");
  Eigen::MatrixXd out = X;
  for (Eigen::Index f = 0; f < X.cols(); ++f) {
    out.col(f) = (X.col(f).array() - mean(f)) / scale(f);
  }
  return out;
}

Dataset parse_csv(const std::string& text, const CsvSchema& schema) {
  if (schema.num_classes < 0 || schema.num_classes == 1) {
    throw ConfigError("num_classes must be 0 (regression) or at least 2");
  }
  std::stringstream in(text);
  std::string line;
  int lineno = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  if (!next_line()) throw DataError("line 1: empty file, expected a header row");
  const std::vector<std::string> header = split_row(line);
  int label_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == schema.label_column) label_col = static_cast<int>(c);
  }
  if (label_col < 0) {
    throw DataError("header has no label column '" + schema.label_column + "'");
  }
  std::vector<int> feat_cols;
  if (schema.feature_columns.empty()) {
    for (int c = 0; c < static_cast<int>(header.size()); ++c) {
      if (c != label_col) feat_cols.push_back(c);
    }
  } else {
    for (const auto& name : schema.feature_columns) {
      int found = -1;
      for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == name) found = static_cast<int>(c);
      }
      if (found < 0) throw DataError("header has no feature column '" + name + "'");
      feat_cols.push_back(found);
    }
  }
  if (feat_cols.empty()) throw DataError("no feature columns");

  std::vector<std::vector<double>> rows;
  while (next_line()) {
    const std::vector<std::string> cells = split_row(line);
    if (cells.size() != header.size()) {
      throw DataError("line " + std::to_string(lineno) + ": expected " +
                      std::to_string(header.size()) + " columns, found " +
                      std::to_string(cells.size()));
    }
    std::vector<double> vals(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string& cell = cells[c];
      const int col = static_cast<int>(c) + 1;
      if (cell.empty()) throw DataError(location(lineno, col) + ": empty value");
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(cell.c_str(), &end);
      if (end != cell.c_str() + cell.size()) {
        throw DataError(location(lineno, col) + ": not a number '" + cell + "'");
      }
      if (!std::isfinite(v) || errno == ERANGE) {
        throw DataError(location(lineno, col) + ": non-finite value '" + cell + "'");
      }
      vals[c] = v;
    }
    const double y = vals[label_col];
    if (schema.num_classes > 0 &&
        (y != std::floor(y) || y < 0.0 || y >= schema.num_classes)) {
      throw DataError(location(lineno, label_col + 1) + ": label " + cells[label_col] +
                      " outside [0, " + std::to_string(schema.num_classes) + ")");
    }
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw DataError("line " + std::to_string(lineno + 1) + ": no data rows");
  Dataset d;
  d.num_classes = schema.num_classes;
  d.features.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(feat_cols.size()));
  d.labels.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t f = 0; f < feat_cols.size(); ++f) {
      d.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) =
          rows[i][feat_cols[f]];
    }
    d.labels(static_cast<Eigen::Index>(i)) = rows[i][label_col];
  }
  return d;
}

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return parse_csv(ss.str(), schema);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::string format_csv(const Dataset& data, const std::string& label_column) {
  std::string out;
  for (int f = 0; f < data.dim(); ++f) out += "x" + std::to_string(f) + ",";
  out += label_column + "\n";
  char buf[64];
  for (int i = 0; i < data.size(); ++i) {
    for (int f = 0; f < data.dim(); ++f) {
      std::snprintf(buf, sizeof buf, "%.17g,", data.features(i, f));
      out += buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g\n", data.labels(i));
    out += buf;
  }
  return out;
}

void write_csv(const std::string& path, const Dataset& data, const std::string& label_column) {
  write_file_atomic(path, format_csv(data, label_column));
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw DataError("cannot rename into " + path);
  }
}

}  // namespace certgrad
